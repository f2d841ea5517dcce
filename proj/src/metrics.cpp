// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/metrics.hpp"

#include "lagdrift/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace lagdrift::metrics {

SkillReport skill_score(const integrate::Trajectory& modeled, const integrate::Trajectory& real) {
    if (modeled.size() != real.size() || modeled.times != real.times) {
        throw Error(ErrorCode::InvalidArgument, "skill score needs a shared time axis");
    }
    if (real.size() < 2) throw Error(ErrorCode::EmptyInput, "skill score needs >= 2 samples");
    double separation = 0.0, length_sum = 0.0, path = 0.0;
    for (std::size_t j = 1; j < real.size(); ++j) {
        path += haversine(real.positions[j - 1], real.positions[j]);
        length_sum += path;
        separation += haversine(modeled.positions[j], real.positions[j]);
    }
    if (!(length_sum > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "real trajectory has zero path length");
    }
    SkillReport r;
    r.drifter_id = real.drifter_id;
    r.c = separation / length_sum;
    r.s = 1.0 - r.c;
    r.n = real.size() - 1;
    return r;
}

double rmse_zonal(std::span<const Vec2> modeled, std::span<const Vec2> real, double u_bar) {
    if (modeled.size() != real.size()) {
        throw Error(ErrorCode::SizeMismatch, "velocity series differ in length");
    }
    if (modeled.empty()) throw Error(ErrorCode::EmptyInput, "RMSE of an empty series");
    if (!(u_bar > 0.0)) throw Error(ErrorCode::InvalidArgument, "u_bar must be positive");
    double ss = 0.0;
    for (std::size_t k = 0; k < real.size(); ++k) {
        const double d = (modeled[k].x - real[k].x) / u_bar;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(real.size()));
}

namespace {

double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

// Pearson correlation of x[i] with y[i + lag] over their overlap.
double windowed_correlation(std::span<const double> x, std::span<const double> y, long lag) {
    const long nx = static_cast<long>(x.size()), ny = static_cast<long>(y.size());
    const long i0 = std::max(0L, -lag);
    const long i1 = std::min(nx, ny - lag);
    const long n = i1 - i0;
    if (n < 2) return std::nan("");
    double mx = 0.0, my = 0.0;
    for (long i = i0; i < i1; ++i) {
        mx += x[i];
        my += y[i + lag];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (long i = i0; i < i1; ++i) {
        const double a = x[i] - mx, b = y[i + lag] - my;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    const double denom = std::sqrt(sxx * syy);
    if (!(denom > 1e-300 * n) || sxx <= 1e-24 * n * (mx * mx + 1.0) ||
        syy <= 1e-24 * n * (my * my + 1.0)) {
        return std::nan("");
    }
    return std::clamp(sxy / denom, -1.0, 1.0);
}

}  // namespace

double max_cross_correlation(std::span<const double> test,
                             const std::vector<std::span<const double>>& training) {
    if (test.size() < 2) throw Error(ErrorCode::InvalidArgument, "series too short");
    if (!(variance(test) > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "test series has zero variance");
    }
    double best = -2.0;
    for (const auto& y : training) {
        if (y.size() < 2 || !(variance(y) > 0.0)) continue;
        const long nx = static_cast<long>(test.size()), ny = static_cast<long>(y.size());
        const long min_overlap =
            std::max(2L, static_cast<long>(std::ceil(0.25 * static_cast<double>(std::min(nx, ny)))));
        for (long lag = -(nx - min_overlap); lag <= ny - min_overlap; ++lag) {
            const double r = windowed_correlation(test, y, lag);
            if (std::isfinite(r)) best = std::max(best, r);
        }
    }
    if (best < -1.0) throw Error(ErrorCode::EmptyInput, "no usable training series");
    return best;
}

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// One-sided spectra of every Welch segment of a series.
class SegmentSpectra {
  public:
    explicit SegmentSpectra(std::span<const double> x) {
        constexpr int N = kCoherenceSegment;
        constexpr int hop = N / 2;
        if (x.size() < static_cast<std::size_t>(N)) return;
        const std::size_t nseg = (x.size() - N) / hop + 1;
        std::vector<double> window(N);
        for (int n = 0; n < N; ++n) {
            window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / N);
        }
        double* in = fftw_alloc_real(N);
        fftw_complex* out = fftw_alloc_complex(N / 2 + 1);
        fftw_plan plan;
        {
            std::lock_guard lock(fftw_planner_mutex());
            plan = fftw_plan_dft_r2c_1d(N, in, out, FFTW_ESTIMATE);
        }
        spectra_.resize(nseg);
        for (std::size_t s = 0; s < nseg; ++s) {
            const double* seg = x.data() + s * hop;
            double mean = 0.0;
            for (int n = 0; n < N; ++n) mean += seg[n];
            mean /= N;
            for (int n = 0; n < N; ++n) in[n] = (seg[n] - mean) * window[n];
            fftw_execute(plan);
            auto& spec = spectra_[s];
            spec.resize(N / 2 + 1);
            for (int k = 0; k <= N / 2; ++k) spec[k] = {out[k][0], out[k][1]};
        }
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }

    std::size_t segments() const { return spectra_.size(); }
    const std::vector<std::complex<double>>& segment(std::size_t s) const { return spectra_[s]; }

  private:
    std::vector<std::vector<std::complex<double>>> spectra_;
};

double mean_coherence(const SegmentSpectra& a, const SegmentSpectra& b) {
    const std::size_t K = std::min(a.segments(), b.segments());
    if (K < 2) return std::nan("");
    constexpr int bins = kCoherenceSegment / 2 + 1;
    double total = 0.0;
    int used = 0;
    for (int f = 1; f < bins; ++f) {
        std::complex<double> pxy{};
        double pxx = 0.0, pyy = 0.0;
        for (std::size_t s = 0; s < K; ++s) {
            const auto X = a.segment(s)[f], Y = b.segment(s)[f];
            pxy += X * std::conj(Y);
            pxx += std::norm(X);
            pyy += std::norm(Y);
        }
        if (!(pxx > 0.0) || !(pyy > 0.0)) continue;
        total += std::clamp(std::norm(pxy) / (pxx * pyy), 0.0, 1.0);
        ++used;
    }
    return used ? total / used : std::nan("");
}

}  // namespace

double mean_ms_coherence(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 2 * kCoherenceSegment || y.size() < 2 * kCoherenceSegment) {
        throw Error(ErrorCode::InvalidArgument, "series too short for Welch coherence");
    }
    const double c = mean_coherence(SegmentSpectra(x), SegmentSpectra(y));
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "coherence undefined");
    return c;
}

double max_mean_ms_coherence(std::span<const double> test,
                             const std::vector<std::span<const double>>& training) {
    if (test.size() < 2 * kCoherenceSegment) {
        throw Error(ErrorCode::InvalidArgument, "series too short for Welch coherence");
    }
    const SegmentSpectra tx(test);
    double best = -1.0;
    for (const auto& y : training) {
        if (y.size() < 2 * kCoherenceSegment) continue;
        const double c = mean_coherence(tx, SegmentSpectra(y));
        if (std::isfinite(c)) best = std::max(best, c);
    }
    if (best < 0.0) throw Error(ErrorCode::EmptyInput, "no usable training series");
    return best;
}

NearestTrained nearest_trained(const Deployment& test, const std::vector<Deployment>& training) {
    if (training.empty()) throw Error(ErrorCode::EmptyInput, "empty training set");
    std::vector<const Deployment*> sorted;
    for (const auto& d : training) sorted.push_back(&d);
    std::sort(sorted.begin(), sorted.end(),
              [](const Deployment* a, const Deployment* b) { return a->drifter_id < b->drifter_id; });
    NearestTrained out;
    double best_d = INFINITY, best_t = INFINITY;
    for (const auto* d : sorted) {
        const double dist = haversine(test.position, d->position);
        const double dt = std::abs(test.time - d->time);
        if (dist < best_d) {
            best_d = dist;
            out.nearest_in_space = d->drifter_id;
        }
        if (dt < best_t) {
            best_t = dt;
            out.nearest_in_time = d->drifter_id;
        }
    }
    out.distance_km = best_d / 1000.0;
    out.time_hours = best_t / 3600.0;
    return out;
}

std::vector<std::size_t> histogram(std::span<const double> values, std::span<const double> edges) {
    if (edges.size() < 2) throw Error(ErrorCode::InvalidArgument, "histogram needs >= 2 edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "histogram edges must increase");
        }
    }
    std::vector<std::size_t> counts(edges.size() - 1, 0);
    for (double v : values) {
        if (!(v >= edges.front()) || v > edges.back()) continue;
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::size_t bin = static_cast<std::size_t>(it - edges.begin()) - 1;
        if (bin == counts.size()) bin = counts.size() - 1;
        ++counts[bin];
    }
    return counts;
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) throw Error(ErrorCode::InvalidArgument, "bad histogram range");
    std::vector<double> e(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * i / bins;
    return e;
}

}  // namespace lagdrift::metrics
