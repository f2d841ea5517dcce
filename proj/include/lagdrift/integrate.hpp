// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lagdrift/geo.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace lagdrift::integrate {

enum class SampleStatus : std::uint8_t { Ok, LeftDomain, MaskedFlow };

std::string_view to_string(SampleStatus s);
SampleStatus status_from_string(std::string_view s);

/// Default step: the 15 minute cadence of the drifter data.
inline constexpr double kDefaultStep = 900.0;

struct Trajectory {
    std::string drifter_id;
    std::vector<double> times;  // s since epoch, uniform
    std::vector<GeoPoint> positions;
    std::vector<Vec2> velocities;  // m/s
    std::vector<SampleStatus> status;

    std::size_t size() const { return times.size(); }
    bool all_ok() const;
    void push_back(double t, const GeoPoint& p, const Vec2& v, SampleStatus s) {
        times.push_back(t);
        positions.push_back(p);
        velocities.push_back(v);
        status.push_back(s);
    }
};

/// Velocity of a model at a point. Models may throw lagdrift::Error; rk4_step maps
/// OutOfDomain / InsufficientMargin to LeftDomain and MaskedSupport to MaskedFlow.
using VelocityModel = std::function<Vec2(const GeoPoint& p, double t)>;

/// Called once at every recorded sample before its velocity is evaluated; stateful
/// models (e.g. recurrent corrections) advance their history here.
using StepHook = std::function<void(const GeoPoint& p, double t)>;

struct StepResult {
    GeoPoint position;
    SampleStatus status = SampleStatus::Ok;
};

/// Evaluates the model, converting sampling failures into a status.
struct Evaluation {
    Vec2 velocity;
    SampleStatus status = SampleStatus::Ok;
};
Evaluation evaluate(const VelocityModel& model, const GeoPoint& p, double t);

/// Classical RK4 in (lon, lat); each stage velocity is converted to degree rates with
/// the equirectangular metric at that stage's latitude.
StepResult rk4_step(const VelocityModel& model, const GeoPoint& pos, double t, double dt);

/// n_steps + 1 samples starting at (start, t0). Once a step fails, the remaining
/// samples keep the last position, zero velocity and the failure status.
Trajectory integrate_trajectory(const VelocityModel& model, const GeoPoint& start, double t0,
                                int n_steps, double dt = kDefaultStep, std::string drifter_id = {},
                                const StepHook& hook = {});

struct EnsembleSpec {
    GeoPoint center;
    double radius = 1000.0;  // m, must be < 10 km
    int count = 1;
    std::uint64_t rng_seed = 0;
};

inline constexpr double kMaxEnsembleRadius = 10000.0;

/// Area-uniform points in the disk around `center`; deterministic per seed.
std::vector<GeoPoint> seed_ensemble(const EnsembleSpec& spec);

/// Model (velocity + optional hook) for one ensemble member; built fresh per member
/// so members never share state.
struct MemberModel {
    VelocityModel velocity;
    StepHook hook;
};
using MemberFactory = std::function<MemberModel(std::size_t member)>;

/// Integrates every start point; results are ordered by member index regardless of
/// `threads` (<= 1 runs serially).
std::vector<Trajectory> integrate_ensemble(const MemberFactory& factory,
                                           const std::vector<GeoPoint>& starts, double t0,
                                           int n_steps, double dt, const std::string& id_prefix,
                                           unsigned threads = 1);

/// Componentwise median over members with status Ok at each time. Samples where fewer
/// than half of the members are Ok are flagged LeftDomain and hold the last position.
Trajectory median_trajectory(const std::vector<Trajectory>& ensemble);

/// CSV: drifter_id,iso_time,lon,lat,u,v,status. `comment` lines are written first,
/// each prefixed by "# ".
void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories,
                            const std::vector<std::string>& comment = {});
/// Reads the CSV written above (comment lines skipped); order of first appearance kept.
std::vector<Trajectory> read_trajectories_csv(const std::string& path);
/// GeoJSON FeatureCollection with one LineString per trajectory (Ok samples only).
void write_trajectories_geojson(const std::string& path,
                                const std::vector<Trajectory>& trajectories);

}  // namespace lagdrift::integrate
