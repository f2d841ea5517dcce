// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/learn/features.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lagdrift::learn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// z-score statistics; inputs per feature channel, targets per velocity component.
struct Normalization {
    std::array<double, kFeatureChannels> input_mean{};
    std::array<double, kFeatureChannels> input_std{1, 1, 1, 1, 1, 1};
    std::array<double, kOutputChannels> target_mean{};
    std::array<double, kOutputChannels> target_std{1, 1};

    void normalize_input(const FeatureVector& f, double* out) const;
    Vec2 normalize_target(const Vec2& v) const;
    Vec2 denormalize_target(const Vec2& y) const;
};

/// Single LSTM layer followed by a dense layer to 2 outputs.
///
/// All trainable parameters live in one flat vector, in this order:
/// input weights (4H x 6), recurrent weights (4H x H), gate bias (4H),
/// dense weights (2 x H), dense bias (2). Matrices are row-major and gates are stacked
/// as input, forget, cell, output.
class LstmModel {
  public:
    LstmModel() : LstmModel(1) {}
    explicit LstmModel(int hidden);

    int hidden() const { return hidden_; }
    static constexpr int inputs() { return kFeatureChannels; }
    static constexpr int outputs() { return kOutputChannels; }
    std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    MatrixMap input_weights() { return {params_.data() + off_wx_, 4 * hidden_, inputs()}; }
    MatrixMap recurrent_weights() { return {params_.data() + off_wh_, 4 * hidden_, hidden_}; }
    VectorMap gate_bias() { return {params_.data() + off_b_, 4 * hidden_}; }
    MatrixMap dense_weights() { return {params_.data() + off_wy_, outputs(), hidden_}; }
    VectorMap dense_bias() { return {params_.data() + off_by_, outputs()}; }

    ConstMatrixMap input_weights() const { return {params_.data() + off_wx_, 4 * hidden_, inputs()}; }
    ConstMatrixMap recurrent_weights() const {
        return {params_.data() + off_wh_, 4 * hidden_, hidden_};
    }
    ConstVectorMap gate_bias() const { return {params_.data() + off_b_, 4 * hidden_}; }
    ConstMatrixMap dense_weights() const { return {params_.data() + off_wy_, outputs(), hidden_}; }
    ConstVectorMap dense_bias() const { return {params_.data() + off_by_, outputs()}; }

    /// Uniform in +-1/sqrt(hidden) for all weights, zero biases, forget bias +1.
    void initialize(std::uint64_t seed);

    Normalization normalization;

  private:
    int hidden_;
    std::size_t off_wx_, off_wh_, off_b_, off_wy_, off_by_;
    Eigen::VectorXd params_;
};

struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static LstmState zeros(int hidden) {
        return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
    }
};

/// One recurrence step on a normalized input; returns the normalized dense output.
Eigen::Vector2d lstm_step_normalized(const LstmModel& model, LstmState& state,
                                     const Eigen::Ref<const Eigen::VectorXd>& z);

/// Normalizes xi, advances the state, returns the correction in m/s.
Vec2 lstm_step(const LstmModel& model, LstmState& state, const FeatureVector& xi);

struct LstmForward {
    std::vector<Vec2> outputs;  // m/s, one per step
    LstmState final_state;
};

/// Runs a raw feature sequence from `initial` (zeros when empty).
LstmForward lstm_forward(const LstmModel& model, std::span<const FeatureVector> sequence,
                         const LstmState* initial = nullptr);

/// Sequence with a velocity-residual target at every step (m/s).
struct TrainingSample {
    std::vector<FeatureVector> features;
    std::vector<Vec2> targets;
};

/// Normalized copy of a TrainingSample (columns are time steps).
struct NormalizedSample {
    Eigen::MatrixXd z;  // 6 x T
    Eigen::MatrixXd y;  // 2 x T
};

NormalizedSample normalize_sample(const LstmModel& model, const TrainingSample& sample);

struct GradientResult {
    Eigen::VectorXd gradient;  // same layout as LstmModel::params()
    double loss = 0.0;         // mean squared error in normalized target units
    std::size_t count = 0;     // number of target entries (steps x 2)
};

/// Exact BPTT gradient of the mean squared error over every step of every sample,
/// each sample starting from a zero state.
GradientResult lstm_gradients(const LstmModel& model, std::span<const TrainingSample> batch);
GradientResult lstm_gradients_normalized(const LstmModel& model,
                                         std::span<const NormalizedSample* const> batch,
                                         unsigned threads = 1);

/// Versioned JSON with row-major weights, normalization and an opaque config echo.
std::string model_to_json(const LstmModel& model, const std::string& config_echo = {});
LstmModel model_from_json(const std::string& text);
void save_model(const LstmModel& model, const std::string& path, const std::string& config_echo = {});
LstmModel load_model(const std::string& path);

}  // namespace lagdrift::learn
