// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/geo.hpp"
#include "lagdrift/integrate.hpp"

#include <span>
#include <string>
#include <vector>

namespace lagdrift::metrics {

/// Normalized cumulative separation c and skill s = 1 - c.
struct SkillReport {
    std::string drifter_id;
    double c = 0.0;
    double s = 1.0;
    std::size_t n = 0;  // number of terms in the sums
};

/// c = sum_j |y(t_j) - x_D(t_j)| / sum_j l(t_j), j = 1..n, where l(t_j) is the real
/// path length travelled up to t_j. Distances are great-circle meters.
SkillReport skill_score(const integrate::Trajectory& modeled, const integrate::Trajectory& real);

/// RMS of (u_model - u_real) / u_bar over the zonal components.
double rmse_zonal(std::span<const Vec2> modeled, std::span<const Vec2> real, double u_bar);

/// Max over training series of the max over lags of the windowed Pearson correlation
/// (each overlap window is mean-removed and normalized by its own standard deviations).
/// Lags are limited to overlaps of at least 25% of the shorter series. Zero-variance
/// series and windows are skipped.
double max_cross_correlation(std::span<const double> test,
                             const std::vector<std::span<const double>>& training);

inline constexpr int kCoherenceSegment = 256;

/// Welch magnitude-squared coherence (256-sample Hann segments, 50% overlap, constant
/// detrend), averaged over the non-DC frequency bins, maximized over training series.
/// Training series shorter than two segments are skipped.
double max_mean_ms_coherence(std::span<const double> test,
                             const std::vector<std::span<const double>>& training);

/// Mean MS coherence of one pair (same estimator as above).
double mean_ms_coherence(std::span<const double> x, std::span<const double> y);

struct Deployment {
    std::string drifter_id;
    GeoPoint position;
    double time = 0.0;  // s
};

struct NearestTrained {
    double distance_km = 0.0;
    double time_hours = 0.0;
    std::string nearest_in_space;  // ties broken by lowest id
    std::string nearest_in_time;
};

/// Minimum great-circle distance between deployment positions and minimum
/// |deployment time difference|, taken independently over the training set.
NearestTrained nearest_trained(const Deployment& test, const std::vector<Deployment>& training);

struct SimilarityReport {
    std::string drifter_id;
    double max_correlation = 0.0;
    double max_mean_ms_coherence = 0.0;
    double dist_to_trained_km = 0.0;
    double time_to_trained_hours = 0.0;
};

/// Counts per bin; bin i covers [edges[i], edges[i+1]), the last bin is closed.
std::vector<std::size_t> histogram(std::span<const double> values, std::span<const double> edges);

/// `bins` uniform edges over [lo, hi].
std::vector<double> uniform_edges(double lo, double hi, int bins);

}  // namespace lagdrift::metrics
