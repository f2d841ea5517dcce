// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/learn/train.hpp"

#include "lagdrift/error.hpp"
#include "lagdrift/rng.hpp"

#include <cmath>
#include <iostream>
#include <numeric>

namespace lagdrift::learn {

void TrainConfig::validate() const {
    if (hidden < 1 || epochs < 1 || truncation < 1 || batch_size < 1 || !(learning_rate > 0.0) ||
        !(clip_norm > 0.0) || !(tau > 0.0) || !(final_lr_fraction > 0.0) ||
        final_lr_fraction > 1.0) {
        throw Error(ErrorCode::ConfigError, "training parameters must be positive");
    }
}

Normalization compute_normalization(std::span<const TrainingSample> samples,
                                    std::vector<std::string>* warnings) {
    std::array<double, kFeatureChannels> sx{}, sxx{};
    std::array<double, kOutputChannels> sy{}, syy{};
    double n = 0.0;
    for (const auto& s : samples) {
        for (std::size_t t = 0; t < s.features.size(); ++t) {
            const auto ch = s.features[t].channels();
            for (int c = 0; c < kFeatureChannels; ++c) sx[c] += ch[c];
            sy[0] += s.targets[t].x;
            sy[1] += s.targets[t].y;
            n += 1.0;
        }
    }
    if (n == 0.0) throw Error(ErrorCode::EmptyInput, "no training steps");
    Normalization norm;
    for (int c = 0; c < kFeatureChannels; ++c) norm.input_mean[c] = sx[c] / n;
    for (int c = 0; c < kOutputChannels; ++c) norm.target_mean[c] = sy[c] / n;
    // Second pass for the variance about the mean.
    for (const auto& s : samples) {
        for (std::size_t t = 0; t < s.features.size(); ++t) {
            const auto ch = s.features[t].channels();
            for (int c = 0; c < kFeatureChannels; ++c) {
                const double d = ch[c] - norm.input_mean[c];
                sxx[c] += d * d;
            }
            const double dx = s.targets[t].x - norm.target_mean[0];
            const double dy = s.targets[t].y - norm.target_mean[1];
            syy[0] += dx * dx;
            syy[1] += dy * dy;
        }
    }
    auto floored = [&](double ss, const std::string& what) {
        const double sd = std::sqrt(ss / n);
        if (sd > kStdFloor) return sd;
        const std::string msg = "constant " + what + "; std floored at 1e-12";
        std::clog << "warning: " << msg << '\n';
        if (warnings) warnings->push_back(msg);
        return kStdFloor;
    };
    for (int c = 0; c < kFeatureChannels; ++c)
        norm.input_std[c] = floored(sxx[c], "input channel " + std::to_string(c));
    for (int c = 0; c < kOutputChannels; ++c)
        norm.target_std[c] = floored(syy[c], "target component " + std::to_string(c));
    return norm;
}

TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config,
                  const LstmModel* initial) {
    config.validate();
    if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no training samples");

    TrainResult result{LstmModel(config.hidden), {}, {}};
    LstmModel& model = result.model;
    if (initial) {
        if (initial->hidden() != config.hidden) {
            throw Error(ErrorCode::ConfigError, "resumed model has hidden size " +
                                                    std::to_string(initial->hidden()) + ", config " +
                                                    std::to_string(config.hidden));
        }
        model = *initial;
    } else {
        model.initialize(derive_seed(config.rng_seed, 1));
        model.normalization = compute_normalization(samples, &result.warnings);
    }

    std::vector<NormalizedSample> data;
    data.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.features.empty()) data.push_back(normalize_sample(model, s));
    }
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "all training samples are empty");

    const Eigen::Index P = model.params().size();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(P), v = Eigen::VectorXd::Zero(P);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;
    const long batches_per_epoch =
        (static_cast<long>(data.size()) + config.batch_size - 1) / config.batch_size;
    const long total_steps = batches_per_epoch * config.epochs;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const NormalizedSample*> batch;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.rng_seed, 1000 + static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        double sse = 0.0;
        double count = 0.0;
        for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
            batch.clear();
            const std::size_t last = std::min(order.size(), first + config.batch_size);
            for (std::size_t k = first; k < last; ++k) batch.push_back(&data[order[k]]);
            GradientResult g = lstm_gradients_normalized(model, batch, config.threads);
            if (!std::isfinite(g.loss) || !g.gradient.allFinite()) {
                throw Error(ErrorCode::NumericalFailure, "non-finite loss or gradient in training");
            }
            sse += g.loss * static_cast<double>(g.count);
            count += static_cast<double>(g.count);

            const double gnorm = g.gradient.norm();
            if (gnorm > config.clip_norm) g.gradient *= config.clip_norm / gnorm;

            double lr = config.learning_rate;
            if (config.final_lr_fraction < 1.0 && total_steps > 1) {
                const double progress = static_cast<double>(step) / static_cast<double>(total_steps - 1);
                const double floor = config.final_lr_fraction;
                lr *= floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
            }
            ++step;
            m = beta1 * m + (1.0 - beta1) * g.gradient;
            v = beta2 * v + (1.0 - beta2) * g.gradient.cwiseAbs2();
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            model.params().array() -=
                lr * (m.array() / c1) / ((v.array() / c2).sqrt() + adam_eps);
        }
        result.epoch_loss.push_back(count > 0.0 ? sse / count : 0.0);
    }
    return result;
}

}  // namespace lagdrift::learn
