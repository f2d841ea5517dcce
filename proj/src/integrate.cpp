// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/integrate.hpp"

#include "lagdrift/error.hpp"
#include "lagdrift/rng.hpp"
#include "lagdrift/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace lagdrift::integrate {

std::string_view to_string(SampleStatus s) {
    switch (s) {
        case SampleStatus::Ok: return "ok";
        case SampleStatus::LeftDomain: return "left_domain";
        case SampleStatus::MaskedFlow: return "masked_flow";
    }
    return "ok";
}

SampleStatus status_from_string(std::string_view s) {
    if (s == "ok") return SampleStatus::Ok;
    if (s == "left_domain") return SampleStatus::LeftDomain;
    if (s == "masked_flow") return SampleStatus::MaskedFlow;
    throw Error(ErrorCode::ParseError, "unknown status '" + std::string(s) + "'");
}

bool Trajectory::all_ok() const {
    return std::all_of(status.begin(), status.end(),
                       [](SampleStatus s) { return s == SampleStatus::Ok; });
}

Evaluation evaluate(const VelocityModel& model, const GeoPoint& p, double t) {
    try {
        const Vec2 v = model(p, t);
        if (!v.finite()) return {{}, SampleStatus::MaskedFlow};
        return {v, SampleStatus::Ok};
    } catch (const Error& e) {
        switch (e.code()) {
            case ErrorCode::OutOfDomain:
            case ErrorCode::InsufficientMargin:
            case ErrorCode::EquatorialBand:
                return {{}, SampleStatus::LeftDomain};
            case ErrorCode::MaskedSupport:
                return {{}, SampleStatus::MaskedFlow};
            default:
                throw;
        }
    }
}

StepResult rk4_step(const VelocityModel& model, const GeoPoint& pos, double t, double dt) {
    auto rate = [&](const GeoPoint& p, double tt, GeoPoint& out) {
        const Evaluation e = evaluate(model, p, tt);
        if (e.status != SampleStatus::Ok) return e.status;
        out = velocity_to_degree_rate(e.velocity, p.lat);
        return SampleStatus::Ok;
    };
    auto offset = [](const GeoPoint& p, const GeoPoint& k, double h) {
        return GeoPoint{p.lon + h * k.lon, p.lat + h * k.lat};
    };

    GeoPoint k1, k2, k3, k4;
    SampleStatus s = rate(pos, t, k1);
    if (s == SampleStatus::Ok) s = rate(offset(pos, k1, 0.5 * dt), t + 0.5 * dt, k2);
    if (s == SampleStatus::Ok) s = rate(offset(pos, k2, 0.5 * dt), t + 0.5 * dt, k3);
    if (s == SampleStatus::Ok) s = rate(offset(pos, k3, dt), t + dt, k4);
    if (s != SampleStatus::Ok) return {pos, s};
    const double w = dt / 6.0;
    return {{pos.lon + w * (k1.lon + 2.0 * k2.lon + 2.0 * k3.lon + k4.lon),
             pos.lat + w * (k1.lat + 2.0 * k2.lat + 2.0 * k3.lat + k4.lat)},
            SampleStatus::Ok};
}

Trajectory integrate_trajectory(const VelocityModel& model, const GeoPoint& start, double t0,
                                int n_steps, double dt, std::string drifter_id,
                                const StepHook& hook) {
    if (n_steps < 0) throw Error(ErrorCode::InvalidArgument, "n_steps must be >= 0");
    Trajectory traj;
    traj.drifter_id = std::move(drifter_id);
    GeoPoint pos = start;
    SampleStatus failed = SampleStatus::Ok;
    for (int k = 0; k <= n_steps; ++k) {
        const double t = t0 + k * dt;
        if (failed != SampleStatus::Ok) {
            traj.push_back(t, pos, {}, failed);
            continue;
        }
        Evaluation e{{}, SampleStatus::Ok};
        try {
            if (hook) hook(pos, t);
            e = evaluate(model, pos, t);
        } catch (const Error& err) {
            if (err.code() == ErrorCode::OutOfDomain || err.code() == ErrorCode::InsufficientMargin ||
                err.code() == ErrorCode::EquatorialBand) {
                e.status = SampleStatus::LeftDomain;
            } else if (err.code() == ErrorCode::MaskedSupport) {
                e.status = SampleStatus::MaskedFlow;
            } else {
                throw;
            }
        }
        if (e.status != SampleStatus::Ok) {
            failed = e.status;
            traj.push_back(t, pos, {}, failed);
            continue;
        }
        traj.push_back(t, pos, e.velocity, SampleStatus::Ok);
        if (k == n_steps) break;
        const StepResult r = rk4_step(model, pos, t, dt);
        if (r.status != SampleStatus::Ok) {
            failed = r.status;
        } else {
            pos = r.position;
        }
    }
    return traj;
}

std::vector<GeoPoint> seed_ensemble(const EnsembleSpec& spec) {
    if (!(spec.radius >= 0.0) || spec.radius >= kMaxEnsembleRadius) {
        throw Error(ErrorCode::InvalidArgument, "ensemble radius must be in [0, 10 km)");
    }
    if (spec.count < 1) throw Error(ErrorCode::InvalidArgument, "ensemble count must be >= 1");
    const LocalFrame frame(spec.center);
    Rng rng(spec.rng_seed);
    std::vector<GeoPoint> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) {
        const double r = spec.radius * std::sqrt(rng.uniform());
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        out.push_back(frame.to_geo({r * std::cos(theta), r * std::sin(theta)}));
    }
    return out;
}

std::vector<Trajectory> integrate_ensemble(const MemberFactory& factory,
                                           const std::vector<GeoPoint>& starts, double t0,
                                           int n_steps, double dt, const std::string& id_prefix,
                                           unsigned threads) {
    std::vector<Trajectory> out(starts.size());
    auto run_member = [&](std::size_t m) {
        MemberModel model = factory(m);
        out[m] = integrate_trajectory(model.velocity, starts[m], t0, n_steps, dt,
                                      id_prefix + "m" + std::to_string(m), model.hook);
    };
    if (threads <= 1 || starts.size() <= 1) {
        for (std::size_t m = 0; m < starts.size(); ++m) run_member(m);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(starts.size()));
    for (unsigned w = 0; w < n; ++w) {
        pool.emplace_back([&] {
            for (std::size_t m = next++; m < starts.size(); m = next++) {
                try {
                    run_member(m);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

namespace {

double median_of(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Trajectory median_trajectory(const std::vector<Trajectory>& ensemble) {
    if (ensemble.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty ensemble");
    const auto& ref = ensemble.front();
    for (const auto& m : ensemble) {
        if (m.times != ref.times) {
            throw Error(ErrorCode::InvalidArgument, "ensemble members do not share a time axis");
        }
    }
    Trajectory med;
    med.drifter_id = ref.drifter_id + "_median";
    GeoPoint last = ref.positions.empty() ? GeoPoint{} : ref.positions.front();
    std::vector<double> lon, lat, u, v;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        lon.clear(), lat.clear(), u.clear(), v.clear();
        for (const auto& m : ensemble) {
            if (m.status[k] != SampleStatus::Ok) continue;
            lon.push_back(m.positions[k].lon);
            lat.push_back(m.positions[k].lat);
            u.push_back(m.velocities[k].x);
            v.push_back(m.velocities[k].y);
        }
        if (2 * lon.size() < ensemble.size()) {
            med.push_back(ref.times[k], last, {}, SampleStatus::LeftDomain);
            continue;
        }
        last = {median_of(lon), median_of(lat)};
        med.push_back(ref.times[k], last, {median_of(u), median_of(v)}, SampleStatus::Ok);
    }
    return med;
}

void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories,
                            const std::vector<std::string>& comment) {
    std::string body;
    for (const auto& c : comment) body += "# " + c + "\n";
    body += "drifter_id,iso_time,lon,lat,u,v,status\n";
    for (const auto& tr : trajectories) {
        for (std::size_t k = 0; k < tr.size(); ++k) {
            body += tr.drifter_id + ',' + format_iso_time(tr.times[k]) + ',' +
                    format_double(tr.positions[k].lon) + ',' + format_double(tr.positions[k].lat) +
                    ',' + format_double(tr.velocities[k].x) + ',' +
                    format_double(tr.velocities[k].y) + ',' + std::string(to_string(tr.status[k])) +
                    '\n';
        }
    }
    write_text_file(path, body);
}

std::vector<Trajectory> read_trajectories_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.starts_with('#') || trim(line).empty()) continue;
        header = split_csv_line(line);
        break;
    }
    const std::vector<std::string> expected{"drifter_id", "iso_time", "lon", "lat",
                                            "u",          "v",        "status"};
    if (header != expected) {
        throw Error(ErrorCode::MissingColumn, "'" + path + "' is not a trajectory CSV");
    }
    std::vector<Trajectory> out;
    std::map<std::string, std::size_t> where;
    while (std::getline(in, line)) {
        if (line.starts_with('#') || trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw Error(ErrorCode::ParseError, "bad row in '" + path + "'");
        auto [it, inserted] = where.try_emplace(f[0], out.size());
        if (inserted) {
            out.emplace_back();
            out.back().drifter_id = f[0];
        }
        out[it->second].push_back(parse_iso_time(f[1]), {parse_double(f[2]), parse_double(f[3])},
                                  {parse_double(f[4]), parse_double(f[5])},
                                  status_from_string(f[6]));
    }
    return out;
}

void write_trajectories_geojson(const std::string& path,
                                const std::vector<Trajectory>& trajectories) {
    nlohmann::json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = nlohmann::json::array();
    for (const auto& tr : trajectories) {
        nlohmann::json coords = nlohmann::json::array();
        for (std::size_t k = 0; k < tr.size(); ++k) {
            if (tr.status[k] == SampleStatus::Ok) {
                coords.push_back({tr.positions[k].lon, tr.positions[k].lat});
            }
        }
        nlohmann::json feature;
        feature["type"] = "Feature";
        feature["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
        feature["properties"] = {
            {"drifter_id", tr.drifter_id},
            {"start", tr.size() ? format_iso_time(tr.times.front()) : std::string{}},
            {"end", tr.size() ? format_iso_time(tr.times.back()) : std::string{}}};
        fc["features"].push_back(std::move(feature));
    }
    write_text_file(path, fc.dump() + "\n");
}

}  // namespace lagdrift::integrate
