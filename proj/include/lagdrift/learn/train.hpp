// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/learn/lstm.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lagdrift::learn {

struct TrainConfig {
    int hidden = 200;
    int epochs = 100;
    double tau = 900.0;      // s, sampling interval of the feature history
    int truncation = 192;    // steps per BPTT window (2 days at 15 min)
    double learning_rate = 1e-3;
    int batch_size = 32;     // windows per Adam step
    std::uint64_t rng_seed = 0;
    double clip_norm = 5.0;  // global gradient norm
    /// Cosine decay from learning_rate to learning_rate * final_lr_fraction; 1 keeps it constant.
    double final_lr_fraction = 1.0;
    unsigned threads = 1;

    void validate() const;
};

struct TrainResult {
    LstmModel model;
    std::vector<double> epoch_loss;  // mean normalized MSE seen during each epoch
    std::vector<std::string> warnings;
};

inline constexpr double kStdFloor = 1e-12;

/// Per-channel mean / std over every step of every sample; std floored at 1e-12
/// (a warning is appended for each floored channel).
Normalization compute_normalization(std::span<const TrainingSample> samples,
                                    std::vector<std::string>* warnings = nullptr);

/// Adam on the normalized MSE. Deterministic for a given seed and independent of
/// `threads`. With `initial`, training continues from its weights and normalization.
TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config,
                  const LstmModel* initial = nullptr);

}  // namespace lagdrift::learn
