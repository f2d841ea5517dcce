// Independent scalar LSTM reference and a finite-difference gradient check.
#pragma once

#include "lagdrift/learn/lstm.hpp"
#include "lagdrift/rng.hpp"

#include <cmath>
#include <vector>

namespace oracles {

// Plain loops over a flat parameter vector; only the documented layout is shared with
// the library. Scalar type is a template so the finite differences can run in long double.
template <typename T>
std::vector<std::array<T, 2>> reference_lstm(const std::vector<T>& p, int H,
                                             const std::vector<std::array<double, 6>>& z) {
    const std::size_t wx = 0, wh = wx + 4 * H * 6, b = wh + 4 * H * H, wy = b + 4 * H,
                      by = wy + 2 * H;
    auto sig = [](T x) { return T(1) / (T(1) + std::exp(-x)); };
    std::vector<T> h(H, T(0)), c(H, T(0)), a(4 * H);
    std::vector<std::array<T, 2>> out;
    for (const auto& x : z) {
        for (int r = 0; r < 4 * H; ++r) {
            T s = p[b + r];
            for (int k = 0; k < 6; ++k) s += p[wx + r * 6 + k] * T(x[k]);
            for (int k = 0; k < H; ++k) s += p[wh + r * H + k] * h[k];
            a[r] = s;
        }
        for (int k = 0; k < H; ++k) {
            const T i = sig(a[k]), f = sig(a[H + k]), g = std::tanh(a[2 * H + k]),
                    o = sig(a[3 * H + k]);
            c[k] = f * c[k] + i * g;
            h[k] = o * std::tanh(c[k]);
        }
        std::array<T, 2> y{};
        for (int r = 0; r < 2; ++r) {
            y[r] = p[by + r];
            for (int k = 0; k < H; ++k) y[r] += p[wy + r * H + k] * h[k];
        }
        out.push_back(y);
    }
    return out;
}

inline std::vector<std::array<double, 2>> reference_lstm(const lagdrift::learn::LstmModel& m,
                                                         const std::vector<std::array<double, 6>>& z) {
    const std::vector<double> p(m.params().data(), m.params().data() + m.params().size());
    return reference_lstm(p, m.hidden(), z);
}

template <typename T>
T reference_loss(const std::vector<T>& p, int H, const std::vector<std::array<double, 6>>& z,
                 const std::vector<std::array<double, 2>>& target) {
    const auto y = reference_lstm(p, H, z);
    T s = 0;
    for (std::size_t t = 0; t < y.size(); ++t)
        for (int r = 0; r < 2; ++r) s += (y[t][r] - T(target[t][r])) * (y[t][r] - T(target[t][r]));
    return s / T(2 * y.size());
}

struct GradientCheck {
    double max_rel_error = 0.0;
    std::size_t parameters = 0;
};

/// Central differences (h = 1e-5, evaluated in long double) of the reference loss against
/// the library BPTT gradient, on a random model with identity normalization.
inline GradientCheck lstm_gradient_check(int hidden, int length, std::uint64_t seed) {
    using namespace lagdrift;
    learn::LstmModel m(hidden);
    Rng rng(seed);
    for (Eigen::Index k = 0; k < m.params().size(); ++k) m.params()[k] = rng.uniform(-0.8, 0.8);
    learn::TrainingSample s;
    std::vector<std::array<double, 6>> z;
    std::vector<std::array<double, 2>> y;
    for (int t = 0; t < length; ++t) {
        std::array<double, 6> x{};
        for (auto& v : x) v = rng.uniform(-1.5, 1.5);
        const std::array<double, 2> target{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        z.push_back(x);
        y.push_back(target);
        s.features.push_back({{x[0], x[1]}, {x[2], x[3]}, {x[4], x[5]}});
        s.targets.push_back({target[0], target[1]});
    }
    const auto g = learn::lstm_gradients(m, std::span<const learn::TrainingSample>(&s, 1));
    GradientCheck out;
    out.parameters = m.parameter_count();
    constexpr long double h = 1e-5L;
    std::vector<long double> p(m.params().data(), m.params().data() + m.params().size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const long double keep = p[k];
        p[k] = keep + h;
        const long double up = reference_loss(p, hidden, z, y);
        p[k] = keep - h;
        const long double down = reference_loss(p, hidden, z, y);
        p[k] = keep;
        const double fd = static_cast<double>((up - down) / (2 * h));
        const double an = g.gradient[static_cast<Eigen::Index>(k)];
        const double scale = std::max(std::abs(fd), std::abs(an));
        const double rel = scale > 0.0 ? std::abs(fd - an) / scale : 0.0;
        out.max_rel_error = std::max(out.max_rel_error, rel);
    }
    return out;
}

}  // namespace oracles
