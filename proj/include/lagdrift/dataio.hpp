// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/dynamics.hpp"
#include "lagdrift/flowfield.hpp"
#include "lagdrift/geo.hpp"
#include "lagdrift/integrate.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lagdrift::dataio {

struct DrifterSample {
    double time = 0.0;  // s since epoch
    GeoPoint position;
    Vec2 velocity;  // m/s
};

struct DrifterRecord {
    std::string drifter_id;
    double deployment_time = 0.0;
    GeoPoint deployment_position;
    std::vector<DrifterSample> samples;  // strictly increasing times, drogued only
    std::optional<double> drogue_lost_time;
};

/// CSV columns (any order, extra columns ignored):
/// drifter_id, iso_time, lon, lat, u_mps, v_mps, drogue. Lines starting with '#' are
/// comments. Samples at or after the first drogue == 0 row are dropped; drifters with
/// no drogued samples are omitted. Records keep the order of first appearance.
std::vector<DrifterRecord> load_drifters(const std::string& path);
void write_drifters(const std::string& path, const std::vector<DrifterRecord>& records,
                    const std::vector<std::string>& comment = {});

inline constexpr double kResampleStep = 900.0;
inline constexpr double kMaxGap = 6.0 * 3600.0;

/// Linear interpolation onto t_first + k * 900 s. Gaps longer than 6 h split the
/// record; extra segments get ids "<id>.1", "<id>.2", ... Segments with a single
/// sample are dropped.
std::vector<DrifterRecord> resample_15min(const DrifterRecord& record);

integrate::Trajectory to_trajectory(const DrifterRecord& record);
DrifterRecord from_trajectory(const integrate::Trajectory& track);

enum class SplitMode { Random, NonRepetitive };
std::string to_string(SplitMode m);
SplitMode split_mode_from_string(const std::string& s);

struct SplitSpec {
    SplitMode mode = SplitMode::Random;
    double test_fraction = 0.2;
    std::uint64_t rng_seed = 0;
    double cluster_radius_km = 2.0;
    double cluster_window_hours = 2.0;

    void validate() const;
};

/// Allowed |achieved - requested| test fraction for non-repetitive splits.
inline constexpr double kSplitTolerance = 0.10;

struct SplitResult {
    std::vector<std::string> training;
    std::vector<std::string> test;
    std::size_t cluster_count = 0;
    double achieved_fraction = 0.0;
};

/// Random: seeded shuffle, round(fraction * n) drifters (at least one per side) go to
/// test. Non-repetitive: single-linkage clusters of deployments (distance <= radius and
/// |dt| <= window) are kept whole; clusters are visited largest first (seeded order
/// among equal sizes) and moved to test while that brings the count closer to target.
SplitResult split(const std::vector<DrifterRecord>& records, const SplitSpec& spec);

std::string split_manifest_json(const SplitResult& result, const SplitSpec& spec);
/// Reads the id lists back from a manifest.
SplitResult read_split_manifest(const std::string& path);

/// Desk-scale synthetic ocean: a double gyre current, a spatially uniform rotating
/// wind and drifters that obey the full inertial equations plus a known slip
/// H = slip_ekman * u_e + slip_current * u (m/s, on the slow manifold).
struct SyntheticSpec {
    std::uint64_t seed = 0;
    int n_clusters = 12;
    int per_cluster = 6;
    double start_time = 1453248000.0;  // 2016-01-20T00:00:00Z
    double duration = 10.0 * 86400.0;
    double deployment_window = 3.0 * 86400.0;
    double cluster_radius = 1000.0;  // m
    double cluster_window = 1800.0;  // s

    // Coarse export box and resolution.
    double lon_min = -96.0, lon_max = -83.0;
    double lat_min = 23.0, lat_max = 30.5;
    double grid_step = 0.25;  // degrees
    int box_samples = 5;      // per axis for box averages
    double current_dt = 86400.0;
    double wind_dt = 21600.0;

    // Deployment box.
    double deploy_lon_min = -93.5, deploy_lon_max = -85.5;
    double deploy_lat_min = 25.0, deploy_lat_max = 28.5;

    // Current: double gyre anchored at gyre_origin.
    GeoPoint gyre_origin{-94.5, 24.5};
    double gyre_scale = 5.0e5;  // m
    double gyre_amplitude = 0.1;
    double gyre_eps = 0.25;
    double gyre_period = 10.0 * 86400.0;

    // Wind: direction turns once per wind_turn_period, magnitude
    // wind_mean + wind_swing * sin(2 pi t / wind_swing_period).
    double wind_mean = 8.0;
    double wind_swing = 3.0;
    double wind_turn_period = 5.0 * 86400.0;
    double wind_swing_period = 7.0 * 86400.0;

    double slip_ekman = 0.05;
    double slip_current = 0.02;

    dynamics::PhysicalDrifterParams physical{};
    double length_scale = 1.0e4;  // m
    double velocity_scale = 0.5;  // m/s
    double output_dt = 900.0;
    double integration_dt = 60.0;

    dynamics::DrifterParams params() const;
    /// Throws InvalidArgument for unusable settings, including integration steps
    /// longer than a fifth of the drag relaxation time.
    void validate() const;
};

/// Analytic truth flow (SI) at a point: total current, Ekman part, wind, material
/// derivative of the total current and Coriolis parameter.
dynamics::FlowSample synthetic_flow(const SyntheticSpec& spec, const GeoPoint& p, double t);
/// The geostrophic-analog part alone.
Vec2 synthetic_current(const SyntheticSpec& spec, const GeoPoint& p, double t);
Vec2 synthetic_wind(const SyntheticSpec& spec, double t);

struct SyntheticDataset {
    std::vector<DrifterRecord> records;
    flowfield::GriddedVelocityField current;  // box-averaged geostrophic analog
    flowfield::GriddedVelocityField wind;     // 10 m wind
    dynamics::DrifterParams params;
    std::size_t truncated_tracks = 0;  // tracks cut short at the export margin
};

SyntheticDataset generate_synthetic_truth(const SyntheticSpec& spec);

/// Integrates one truth drifter from rest relative to the flow (v = u) and records
/// every output_dt until `duration` or until it leaves the export box minus a
/// two-cell margin.
DrifterRecord integrate_truth_drifter(const SyntheticSpec& spec, const std::string& id,
                                      const GeoPoint& start, double t0, double duration,
                                      bool* truncated = nullptr);

}  // namespace lagdrift::dataio
