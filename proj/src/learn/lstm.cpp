// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/learn/lstm.hpp"

#include "lagdrift/error.hpp"
#include "lagdrift/rng.hpp"
#include "lagdrift/util.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <json.hpp>

namespace lagdrift::learn {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void Normalization::normalize_input(const FeatureVector& f, double* out) const {
    const auto ch = f.channels();
    for (int c = 0; c < kFeatureChannels; ++c) out[c] = (ch[c] - input_mean[c]) / input_std[c];
}

Vec2 Normalization::normalize_target(const Vec2& v) const {
    return {(v.x - target_mean[0]) / target_std[0], (v.y - target_mean[1]) / target_std[1]};
}

Vec2 Normalization::denormalize_target(const Vec2& y) const {
    return {y.x * target_std[0] + target_mean[0], y.y * target_std[1] + target_mean[1]};
}

LstmModel::LstmModel(int hidden) : hidden_(hidden) {
    if (hidden < 1) throw Error(ErrorCode::InvalidArgument, "hidden size must be >= 1");
    const std::size_t H = static_cast<std::size_t>(hidden);
    off_wx_ = 0;
    off_wh_ = off_wx_ + 4 * H * inputs();
    off_b_ = off_wh_ + 4 * H * H;
    off_wy_ = off_b_ + 4 * H;
    off_by_ = off_wy_ + outputs() * H;
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off_by_ + outputs()));
}

void LstmModel::initialize(std::uint64_t seed) {
    Rng rng(seed);
    const double r = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (Eigen::Index k = 0; k < params_.size(); ++k) params_[k] = rng.uniform(-r, r);
    gate_bias().setZero();
    gate_bias().segment(hidden_, hidden_).setOnes();
    dense_bias().setZero();
}

Eigen::Vector2d lstm_step_normalized(const LstmModel& model, LstmState& state,
                                     const Eigen::Ref<const Eigen::VectorXd>& z) {
    const int H = model.hidden();
    Eigen::VectorXd a = model.input_weights() * z + model.recurrent_weights() * state.h +
                        model.gate_bias();
    for (int k = 0; k < H; ++k) {
        const double i = sigmoid(a[k]);
        const double f = sigmoid(a[H + k]);
        const double g = std::tanh(a[2 * H + k]);
        const double o = sigmoid(a[3 * H + k]);
        state.c[k] = f * state.c[k] + i * g;
        state.h[k] = o * std::tanh(state.c[k]);
    }
    return model.dense_weights() * state.h + model.dense_bias();
}

Vec2 lstm_step(const LstmModel& model, LstmState& state, const FeatureVector& xi) {
    Eigen::VectorXd z(kFeatureChannels);
    model.normalization.normalize_input(xi, z.data());
    const Eigen::Vector2d y = lstm_step_normalized(model, state, z);
    return model.normalization.denormalize_target({y[0], y[1]});
}

LstmForward lstm_forward(const LstmModel& model, std::span<const FeatureVector> sequence,
                         const LstmState* initial) {
    LstmForward out;
    out.final_state = initial ? *initial : LstmState::zeros(model.hidden());
    if (out.final_state.h.size() != model.hidden() || out.final_state.c.size() != model.hidden()) {
        throw Error(ErrorCode::SizeMismatch, "LSTM state does not match hidden size");
    }
    out.outputs.reserve(sequence.size());
    for (const auto& xi : sequence) out.outputs.push_back(lstm_step(model, out.final_state, xi));
    return out;
}

NormalizedSample normalize_sample(const LstmModel& model, const TrainingSample& sample) {
    if (sample.features.size() != sample.targets.size()) {
        throw Error(ErrorCode::SizeMismatch, "features and targets differ in length");
    }
    const auto T = static_cast<Eigen::Index>(sample.features.size());
    NormalizedSample n{Eigen::MatrixXd(kFeatureChannels, T), Eigen::MatrixXd(kOutputChannels, T)};
    for (Eigen::Index t = 0; t < T; ++t) {
        model.normalization.normalize_input(sample.features[t], n.z.col(t).data());
        const Vec2 y = model.normalization.normalize_target(sample.targets[t]);
        n.y(0, t) = y.x;
        n.y(1, t) = y.y;
    }
    return n;
}

namespace {

// Gradient of sum_t |y_t - target_t|^2 * scale for one sequence, written into `g`.
double sequence_gradient(const LstmModel& model, const NormalizedSample& s, double scale,
                         Eigen::VectorXd& g) {
    const int H = model.hidden();
    const Eigen::Index T = s.z.cols();
    g.setZero(static_cast<Eigen::Index>(model.parameter_count()));
    if (T == 0) return 0.0;

    LstmModel view(H);  // gradient laid out like the parameters
    view.params().swap(g);

    Eigen::MatrixXd gates(4 * H, T);
    Eigen::MatrixXd c(H, T + 1), h(H, T + 1), tc(H, T);
    Eigen::MatrixXd y(kOutputChannels, T);
    c.col(0).setZero();
    h.col(0).setZero();
    const auto Wx = model.input_weights();
    const auto Wh = model.recurrent_weights();
    const auto b = model.gate_bias();
    const auto Wy = model.dense_weights();
    const auto by = model.dense_bias();

    for (Eigen::Index t = 0; t < T; ++t) {
        Eigen::VectorXd a = Wx * s.z.col(t) + Wh * h.col(t) + b;
        for (int k = 0; k < H; ++k) {
            a[k] = sigmoid(a[k]);
            a[H + k] = sigmoid(a[H + k]);
            a[2 * H + k] = std::tanh(a[2 * H + k]);
            a[3 * H + k] = sigmoid(a[3 * H + k]);
        }
        gates.col(t) = a;
        for (int k = 0; k < H; ++k) {
            c(k, t + 1) = a[H + k] * c(k, t) + a[k] * a[2 * H + k];
            tc(k, t) = std::tanh(c(k, t + 1));
            h(k, t + 1) = a[3 * H + k] * tc(k, t);
        }
        y.col(t) = Wy * h.col(t + 1) + by;
    }

    double sse = 0.0;
    auto gWx = view.input_weights();
    auto gWh = view.recurrent_weights();
    auto gb = view.gate_bias();
    auto gWy = view.dense_weights();
    auto gby = view.dense_bias();
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H), dc_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd da(4 * H), dh(H);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const Eigen::Vector2d err = y.col(t) - s.y.col(t);
        sse += err.squaredNorm();
        const Eigen::Vector2d dy = scale * 2.0 * err;
        gWy.noalias() += dy * h.col(t + 1).transpose();
        gby += dy;
        dh = Wy.transpose() * dy + dh_next;
        for (int k = 0; k < H; ++k) {
            const double i = gates(k, t), f = gates(H + k, t), gg = gates(2 * H + k, t),
                         o = gates(3 * H + k, t);
            const double th = tc(k, t);
            const double dc = dh[k] * o * (1.0 - th * th) + dc_next[k];
            da[k] = dc * gg * i * (1.0 - i);
            da[H + k] = dc * c(k, t) * f * (1.0 - f);
            da[2 * H + k] = dc * i * (1.0 - gg * gg);
            da[3 * H + k] = dh[k] * th * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        gWx.noalias() += da * s.z.col(t).transpose();
        gWh.noalias() += da * h.col(t).transpose();
        gb += da;
        dh_next.noalias() = Wh.transpose() * da;
    }
    view.params().swap(g);
    return sse;
}

}  // namespace

GradientResult lstm_gradients_normalized(const LstmModel& model,
                                         std::span<const NormalizedSample* const> batch,
                                         unsigned threads) {
    if (batch.empty()) throw Error(ErrorCode::EmptyInput, "gradient of an empty batch");
    std::size_t count = 0;
    for (const auto* s : batch) count += static_cast<std::size_t>(s->y.size());
    GradientResult out;
    out.count = count;
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.parameter_count()));
    if (count == 0) return out;
    const double scale = 1.0 / static_cast<double>(count);

    // Per-sample gradients are reduced in index order, so the result does not depend
    // on the thread count.
    std::vector<Eigen::VectorXd> grads(batch.size());
    std::vector<double> sse(batch.size(), 0.0);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t n = first; n < batch.size(); n += stride) {
            sse[n] = sequence_gradient(model, *batch[n], scale, grads[n]);
        }
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, batch.size()));
    if (nthreads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nthreads; ++w) pool.emplace_back(work, w, nthreads);
        for (auto& th : pool) th.join();
    }
    double total = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n) {
        out.gradient += grads[n];
        total += sse[n];
    }
    out.loss = total * scale;
    return out;
}

GradientResult lstm_gradients(const LstmModel& model, std::span<const TrainingSample> batch) {
    std::vector<NormalizedSample> norm;
    norm.reserve(batch.size());
    for (const auto& s : batch) norm.push_back(normalize_sample(model, s));
    std::vector<const NormalizedSample*> ptrs;
    for (const auto& n : norm) ptrs.push_back(&n);
    return lstm_gradients_normalized(model, ptrs);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using Json = nlohmann::json;

template <typename Derived>
Json to_array(const Eigen::DenseBase<Derived>& m) {
    Json a = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
    return a;
}

template <typename Derived>
void from_array(const Json& a, Eigen::DenseBase<Derived>& m, const char* name) {
    if (!a.is_array() || a.size() != static_cast<std::size_t>(m.size())) {
        throw Error(ErrorCode::ParseError, std::string("weight block '") + name + "' has wrong size");
    }
    std::size_t n = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = a.at(n++).get<double>();
}

}  // namespace

std::string model_to_json(const LstmModel& model, const std::string& config_echo) {
    const auto& n = model.normalization;
    Json j;
    j["format"] = "lagdrift-lstm";
    j["version"] = 1;
    j["hidden"] = model.hidden();
    j["inputs"] = LstmModel::inputs();
    j["outputs"] = LstmModel::outputs();
    j["gate_order"] = {"input", "forget", "cell", "output"};
    j["channels"] = {"u_x", "u_y", "ue_x", "ue_y", "dudt_x", "dudt_y"};
    j["weights"] = {{"input", to_array(model.input_weights())},
                    {"recurrent", to_array(model.recurrent_weights())},
                    {"gate_bias", to_array(model.gate_bias())},
                    {"dense", to_array(model.dense_weights())},
                    {"dense_bias", to_array(model.dense_bias())}};
    j["normalization"] = {{"input_mean", n.input_mean},
                          {"input_std", n.input_std},
                          {"target_mean", n.target_mean},
                          {"target_std", n.target_std}};
    j["config"] = config_echo;
    return j.dump(1);
}

LstmModel model_from_json(const std::string& text) {
    try {
        const Json j = Json::parse(text);
        if (j.at("format").get<std::string>() != "lagdrift-lstm") {
            throw Error(ErrorCode::ParseError, "not an LSTM model file");
        }
        if (j.at("version").get<int>() != 1) {
            throw Error(ErrorCode::ParseError, "unsupported model version");
        }
        if (j.at("inputs").get<int>() != LstmModel::inputs() ||
            j.at("outputs").get<int>() != LstmModel::outputs()) {
            throw Error(ErrorCode::SizeMismatch, "model input/output channels mismatch");
        }
        LstmModel m(j.at("hidden").get<int>());
        const auto& w = j.at("weights");
        auto wx = m.input_weights();
        auto wh = m.recurrent_weights();
        auto b = m.gate_bias();
        auto wy = m.dense_weights();
        auto by = m.dense_bias();
        from_array(w.at("input"), wx, "input");
        from_array(w.at("recurrent"), wh, "recurrent");
        from_array(w.at("gate_bias"), b, "gate_bias");
        from_array(w.at("dense"), wy, "dense");
        from_array(w.at("dense_bias"), by, "dense_bias");
        const auto& n = j.at("normalization");
        n.at("input_mean").get_to(m.normalization.input_mean);
        n.at("input_std").get_to(m.normalization.input_std);
        n.at("target_mean").get_to(m.normalization.target_mean);
        n.at("target_std").get_to(m.normalization.target_std);
        for (double s : m.normalization.input_std)
            if (!(s > 0.0)) throw Error(ErrorCode::ParseError, "normalization std must be > 0");
        for (double s : m.normalization.target_std)
            if (!(s > 0.0)) throw Error(ErrorCode::ParseError, "normalization std must be > 0");
        return m;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
    }
}

void save_model(const LstmModel& model, const std::string& path, const std::string& config_echo) {
    write_text_file(path, model_to_json(model, config_echo) + "\n");
}

LstmModel load_model(const std::string& path) { return model_from_json(read_text_file(path)); }

}  // namespace lagdrift::learn
