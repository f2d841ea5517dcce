#include "lagdrift/metrics.hpp"
#include "lagdrift/rng.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace lagdrift;
using namespace lagdrift::metrics;
using integrate::SampleStatus;
using integrate::Trajectory;
using testing::error_of;

namespace {

// Track along a meridian moving `dlat` degrees per step.
Trajectory meridian(double lon, double lat0, double dlat, int n) {
    Trajectory t;
    t.drifter_id = "m";
    for (int j = 0; j < n; ++j) t.push_back(900.0 * j, {lon, lat0 + dlat * j}, {}, SampleStatus::Ok);
    return t;
}

std::vector<double> sine(int n, double period, double phase) {
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) x[k] = std::sin(2 * std::numbers::pi * k / period + phase);
    return x;
}

std::vector<double> noise(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
}

}  // namespace

TEST_CASE("skill_score closed forms") {
    const auto real = meridian(-88.0, 26.0, 0.01, 25);
    const auto same = skill_score(real, real);
    CHECK(same.c == 0.0);
    CHECK(same.s == 1.0);
    CHECK(same.n == 24);

    const auto still = skill_score(meridian(-88.0, 26.0, 0.0, 25), real);
    CHECK(std::abs(still.c - 1.0) < 1e-12);
    CHECK(std::abs(still.s) < 1e-12);

    const auto opposite = skill_score(meridian(-88.0, 26.0, -0.01, 25), real);
    CHECK(std::abs(opposite.c - 2.0) < 1e-12);
    CHECK(std::abs(opposite.s + 1.0) < 1e-12);
    CHECK(opposite.s == 1.0 - opposite.c);
}

TEST_CASE("skill_score errors and invariance") {
    const auto parked = meridian(-88.0, 26.0, 0.0, 10);
    CHECK(error_of([&] { skill_score(parked, parked); }) == ErrorCode::InvalidArgument);
    const auto real = meridian(-88.0, 26.0, 0.01, 10);
    CHECK(error_of([&] { skill_score(meridian(-88.0, 26.0, 0.01, 9), real); }) == ErrorCode::InvalidArgument);

    Trajectory model;
    for (std::size_t j = 0; j < real.size(); ++j) {
        model.push_back(real.times[j], {real.positions[j].lon + 0.004 * j * j, real.positions[j].lat}, {},
                        SampleStatus::Ok);
    }
    const auto base = skill_score(model, real);
    CHECK(base.s < 1.0);
    auto shift = [](Trajectory t, double dlon) {
        for (auto& p : t.positions) p.lon += dlon;
        return t;
    };
    const auto moved = skill_score(shift(model, 7.5), shift(real, 7.5));
    CHECK(moved.s == doctest::Approx(base.s).epsilon(1e-10));
}

TEST_CASE("rmse_zonal examples") {
    const std::vector<Vec2> real{{0.1, 0.0}, {0.2, 1.0}, {-0.3, 2.0}, {0.0, 0.0}};
    CHECK(rmse_zonal(real, real, 0.25) == 0.0);
    std::vector<Vec2> offset = real;
    for (auto& v : offset) v.x += 0.05, v.y -= 3.0;
    CHECK(rmse_zonal(offset, real, 0.25) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(rmse_zonal(offset, real, 0.5) == doctest::Approx(0.5 * rmse_zonal(offset, real, 0.25)).epsilon(1e-14));
    CHECK(error_of([] { rmse_zonal({}, {}, 1.0); }) == ErrorCode::EmptyInput);
    CHECK(error_of([&] { rmse_zonal(offset, real, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("max_cross_correlation examples") {
    const auto x = sine(200, 40.0, 0.3);
    const std::span<const double> xs(x);
    CHECK(max_cross_correlation(xs, {xs}) == doctest::Approx(1.0).epsilon(1e-12));

    const auto shifted = sine(200, 40.0, 0.3 - 2 * std::numbers::pi * 7 / 40.0);
    CHECK(max_cross_correlation(xs, {std::span<const double>(shifted)}) == doctest::Approx(1.0).epsilon(1e-12));

    const auto c = sine(200, 40.0, 0.3 + std::numbers::pi / 2);
    CHECK(max_cross_correlation(xs, {std::span<const double>(c)}) == doctest::Approx(1.0).epsilon(1e-12));

    const auto n1 = noise(300, 1), n2 = noise(300, 2), flat = std::vector<double>(300, 0.4);
    const double r = max_cross_correlation(std::span<const double>(n1),
                                           {std::span<const double>(n2), std::span<const double>(flat)});
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(r < 0.5);
    // Order of the training set does not matter.
    CHECK(r == max_cross_correlation(std::span<const double>(n1),
                                     {std::span<const double>(flat), std::span<const double>(n2)}));
}

TEST_CASE("mean magnitude-squared coherence") {
    const auto x = noise(8192, 11);
    CHECK(mean_ms_coherence(x, x) == doctest::Approx(1.0).epsilon(1e-12));

    const auto y = noise(8192, 12);
    const double white = mean_ms_coherence(x, y);
    MESSAGE("white noise coherence " << white);
    CHECK(white < 0.25);
    CHECK(white >= 0.0);

    auto noisy = noise(8192, 13);
    for (std::size_t k = 0; k < noisy.size(); ++k) noisy[k] = x[k] + 0.1 * noisy[k];
    CHECK(mean_ms_coherence(x, noisy) > 0.9);

    const std::vector<double> short_series(300, 1.0);
    CHECK(error_of([&] { mean_ms_coherence(short_series, short_series); }) == ErrorCode::InvalidArgument);
    CHECK(max_mean_ms_coherence(std::span<const double>(x), {std::span<const double>(y),
                                                              std::span<const double>(noisy)}) ==
          mean_ms_coherence(x, noisy));
    CHECK(error_of([&] {
              max_mean_ms_coherence(std::span<const double>(x), {std::span<const double>(short_series)});
          }) == ErrorCode::EmptyInput);
}

TEST_CASE("nearest_trained examples") {
    const Deployment test{"t", {-88.0, 27.0}, 1000.0};
    const auto same = nearest_trained(test, {{"a", {-88.0, 27.0}, 1000.0}});
    CHECK(same.distance_km == 0.0);
    CHECK(same.time_hours == 0.0);

    const auto degree = nearest_trained(test, {{"a", {-88.0, 28.0}, 1000.0}});
    CHECK(degree.distance_km == doctest::Approx(111.195).epsilon(1e-5));
    CHECK(degree.time_hours == 0.0);

    const std::vector<Deployment> two{{"near_space", {-88.0, 27.1}, 1000.0 + 36000.0},
                                      {"near_time", {-87.0, 27.0}, 1000.0 + 3600.0}};
    const auto mixed = nearest_trained(test, two);
    CHECK(mixed.nearest_in_space == "near_space");
    CHECK(mixed.nearest_in_time == "near_time");
    CHECK(mixed.time_hours == doctest::Approx(1.0));
    CHECK(mixed.distance_km == doctest::Approx(11.1195).epsilon(1e-5));
    const auto reversed = nearest_trained(test, {two[1], two[0]});
    CHECK(reversed.nearest_in_space == mixed.nearest_in_space);
    CHECK(reversed.time_hours == mixed.time_hours);

    const auto tie = nearest_trained(test, {{"b", {-88.0, 27.0}, 0.0}, {"a", {-88.0, 27.0}, 0.0}});
    CHECK(tie.nearest_in_space == "a");
    CHECK(error_of([&] { nearest_trained(test, {}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("histogram") {
    const auto edges = uniform_edges(0.0, 1.0, 4);
    REQUIRE(edges.size() == 5);
    CHECK(edges[2] == 0.5);
    const std::vector<double> v{0.0, 0.1, 0.25, 0.6, 0.99, 1.0, 1.5, -0.1};
    const auto h = histogram(v, edges);
    CHECK(h == std::vector<std::size_t>{2, 1, 1, 2});
}
