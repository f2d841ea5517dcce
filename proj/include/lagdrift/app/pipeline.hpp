// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/app/config.hpp"
#include "lagdrift/dataio.hpp"
#include "lagdrift/dynamics.hpp"
#include "lagdrift/error.hpp"
#include "lagdrift/flowfield.hpp"
#include "lagdrift/learn/train.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lagdrift::app {

struct RunOptions {
    std::optional<std::uint64_t> seed;  // overrides run.seed
    bool serial = false;
    bool baseline_only = false;  // ignore any trained model
};

/// Everything a pipeline stage needs, resolved from one config.
struct Experiment {
    std::string run_id;  // 16 hex digits of the config + seed hash
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool baseline_only = false;
    std::vector<std::string> config_echo;

    std::string dataset_dir;
    std::string current_path;
    std::string wind_path;
    std::string drifters_path;
    std::string output_dir;
    std::string model_path;

    dataio::SyntheticSpec synthetic;
    dynamics::PhysicalDrifterParams physical;
    double length_scale = 1.0e4;
    double velocity_scale = 0.5;
    flowfield::SampleOptions sampling;
    dataio::SplitSpec split;
    learn::TrainConfig train;
    bool resume = false;
    int ensemble_count = 10;
    double ensemble_radius = 1000.0;  // m

    dynamics::DrifterParams drifter_params() const;
    /// "lagdrift run=<id> seed=<seed>" followed by the config echo.
    std::vector<std::string> provenance_lines() const;
    std::string output(const std::string& name) const;
};

/// Builds the experiment; unknown keys and invalid values raise ConfigError.
Experiment make_experiment(const Config& config, const RunOptions& options = {});

/// Writes the synthetic dataset (fields, drifters, dataset manifest).
dataio::SyntheticDataset cmd_synth(const Experiment& exp);

struct TrainSummary {
    std::size_t training_drifters = 0;
    std::size_t test_drifters = 0;
    std::size_t windows = 0;
    std::vector<double> epoch_loss;
};
/// Splits the dataset, trains on the training side and writes the model, the split
/// manifest and the per-epoch loss log.
TrainSummary cmd_train(const Experiment& exp);

enum class PredictMode { SingleStep, Forecast };
PredictMode predict_mode_from_string(const std::string& s);

/// Writes single_step.csv or the forecast member / median files for the test side.
void cmd_predict(const Experiment& exp, PredictMode mode);

struct DrifterEvaluation {
    std::string drifter_id;
    double rmse_deterministic = 0.0;
    double rmse_blended = 0.0;
    double skill_deterministic = 0.0;  // ensemble-mean skill
    double skill_blended = 0.0;
    double max_correlation = 0.0;
    double max_coherence = 0.0;
    double dist_to_trained_km = 0.0;
    double time_to_trained_hours = 0.0;
};

struct EvaluationSummary {
    std::vector<DrifterEvaluation> drifters;
    double u_bar = 0.0;
    double median_rmse_deterministic = 0.0;
    double median_rmse_blended = 0.0;
    double fraction_blended_better = 0.0;
    double mean_dist_to_trained_km = 0.0;
    double mean_time_to_trained_hours = 0.0;
    bool model_used = false;
};

/// Reads the prediction outputs (whose run ids must match) and writes rmse.csv,
/// rmse_histogram.csv, skill.csv, similarity.csv and summary.json.
EvaluationSummary cmd_evaluate(const Experiment& exp);

/// Maps an error to the process exit code: 2 config, 3 data, 4 numerical.
int exit_code_for(const Error& e);

}  // namespace lagdrift::app
