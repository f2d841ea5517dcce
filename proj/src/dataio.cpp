// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/dataio.hpp"

#include "lagdrift/analytic.hpp"
#include "lagdrift/error.hpp"
#include "lagdrift/rng.hpp"
#include "lagdrift/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace lagdrift::dataio {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Drifter CSV

std::vector<DrifterRecord> load_drifters(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        header = split_csv_line(t);
        break;
    }
    if (header.empty()) throw Error(ErrorCode::MissingColumn, path + ": missing header row");

    const char* required[] = {"drifter_id", "iso_time", "lon", "lat", "u_mps", "v_mps", "drogue"};
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
    for (const char* name : required) {
        if (!col.count(name)) {
            throw Error(ErrorCode::MissingColumn, path + ": missing column '" + name + "'");
        }
    }
    const std::size_t width = header.size();

    std::vector<DrifterRecord> records;
    std::map<std::string, std::size_t> slot;
    std::map<std::string, double> last_time;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto f = split_csv_line(t);
        if (f.size() < width) {
            throw Error(ErrorCode::ParseError,
                        path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(width) + " fields");
        }
        const std::string id(trim(f[col["drifter_id"]]));
        DrifterSample s;
        s.time = parse_iso_time(trim(f[col["iso_time"]]));
        s.position = {parse_double(f[col["lon"]]), parse_double(f[col["lat"]])};
        s.velocity = {parse_double(f[col["u_mps"]]), parse_double(f[col["v_mps"]])};
        const bool drogued = parse_int(f[col["drogue"]]) != 0;
        if (!s.position.finite() || !s.velocity.finite()) {
            throw Error(ErrorCode::ParseError,
                        path + ":" + std::to_string(line_no) + ": non-finite sample");
        }

        auto it = slot.find(id);
        if (it == slot.end()) {
            it = slot.emplace(id, records.size()).first;
            records.push_back({});
            records.back().drifter_id = id;
            last_time[id] = -INFINITY;
        }
        DrifterRecord& r = records[it->second];
        double& last = last_time[id];
        if (!(s.time > last)) {
            throw Error(ErrorCode::UnorderedTimestamps,
                        path + ":" + std::to_string(line_no) + ": timestamps of '" + id +
                            "' are not increasing");
        }
        last = s.time;
        if (r.drogue_lost_time) continue;
        if (!drogued) {
            r.drogue_lost_time = s.time;
            continue;
        }
        r.samples.push_back(s);
    }

    std::vector<DrifterRecord> out;
    for (auto& r : records) {
        if (r.samples.empty()) continue;
        r.deployment_time = r.samples.front().time;
        r.deployment_position = r.samples.front().position;
        out.push_back(std::move(r));
    }
    return out;
}

void write_drifters(const std::string& path, const std::vector<DrifterRecord>& records,
                    const std::vector<std::string>& comment) {
    std::string out;
    for (const auto& c : comment) out += "# " + c + "\n";
    out += "drifter_id,iso_time,lon,lat,u_mps,v_mps,drogue\n";
    for (const auto& r : records) {
        for (const auto& s : r.samples) {
            out += r.drifter_id + "," + format_iso_time(s.time) + "," +
                   format_double(s.position.lon) + "," + format_double(s.position.lat) + "," +
                   format_double(s.velocity.x) + "," + format_double(s.velocity.y) + ",1\n";
        }
    }
    write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

DrifterRecord resample_segment(const DrifterRecord& src, std::size_t b, std::size_t e,
                               std::string id) {
    DrifterRecord out;
    out.drifter_id = std::move(id);
    out.drogue_lost_time = src.drogue_lost_time;
    const auto& s = src.samples;
    const double t0 = s[b].time, t1 = s[e - 1].time;
    std::size_t seg = b;
    for (long k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * kResampleStep;
        if (t > t1 + 1e-6) break;
        while (seg + 2 < e && s[seg + 1].time <= t) ++seg;
        const auto& a = s[seg];
        const auto& c = s[std::min(seg + 1, e - 1)];
        DrifterSample r;
        r.time = t;
        if (t == a.time || c.time == a.time) {
            r.position = a.position;
            r.velocity = a.velocity;
        } else if (t == c.time) {
            r.position = c.position;
            r.velocity = c.velocity;
        } else {
            const double w = (t - a.time) / (c.time - a.time);
            r.position = {a.position.lon + w * (c.position.lon - a.position.lon),
                          a.position.lat + w * (c.position.lat - a.position.lat)};
            r.velocity = a.velocity + w * (c.velocity - a.velocity);
        }
        out.samples.push_back(r);
    }
    out.deployment_time = out.samples.front().time;
    out.deployment_position = out.samples.front().position;
    return out;
}

}  // namespace

std::vector<DrifterRecord> resample_15min(const DrifterRecord& record) {
    const auto& s = record.samples;
    if (s.size() < 2) {
        throw Error(ErrorCode::InvalidArgument,
                    "resampling '" + record.drifter_id + "' needs >= 2 samples");
    }
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t begin = 0;
    for (std::size_t k = 1; k <= s.size(); ++k) {
        if (k == s.size() || s[k].time - s[k - 1].time > kMaxGap) {
            if (k - begin >= 2) ranges.emplace_back(begin, k);
            begin = k;
        }
    }
    std::vector<DrifterRecord> out;
    for (std::size_t n = 0; n < ranges.size(); ++n) {
        std::string id = record.drifter_id;
        if (n > 0) id += "." + std::to_string(n);
        out.push_back(resample_segment(record, ranges[n].first, ranges[n].second, id));
    }
    return out;
}

integrate::Trajectory to_trajectory(const DrifterRecord& record) {
    integrate::Trajectory t;
    t.drifter_id = record.drifter_id;
    for (const auto& s : record.samples) {
        t.push_back(s.time, s.position, s.velocity, integrate::SampleStatus::Ok);
    }
    return t;
}

DrifterRecord from_trajectory(const integrate::Trajectory& track) {
    DrifterRecord r;
    r.drifter_id = track.drifter_id;
    for (std::size_t k = 0; k < track.size(); ++k) {
        if (track.status[k] != integrate::SampleStatus::Ok) break;
        r.samples.push_back({track.times[k], track.positions[k], track.velocities[k]});
    }
    if (!r.samples.empty()) {
        r.deployment_time = r.samples.front().time;
        r.deployment_position = r.samples.front().position;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Splits

std::string to_string(SplitMode m) {
    return m == SplitMode::Random ? "random" : "non_repetitive";
}

SplitMode split_mode_from_string(const std::string& s) {
    if (s == "random") return SplitMode::Random;
    if (s == "non_repetitive") return SplitMode::NonRepetitive;
    throw Error(ErrorCode::ConfigError, "unknown split mode '" + s + "'");
}

void SplitSpec::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "test fraction must lie in (0, 1)");
    }
    if (!(cluster_radius_km >= 0.0) || !(cluster_window_hours >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "cluster thresholds must be non-negative");
    }
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

SplitResult split(const std::vector<DrifterRecord>& records, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = records.size();
    if (n < 2) throw Error(ErrorCode::SplitInfeasible, "splitting needs >= 2 drifters");
    Rng rng(derive_seed(spec.rng_seed, 0x5911));
    std::vector<std::uint8_t> is_test(n, 0);
    SplitResult out;

    if (spec.mode == SplitMode::Random) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * n));
        n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
        for (std::size_t k = 0; k < n_test; ++k) is_test[order[k]] = 1;
        out.cluster_count = n;
    } else {
        UnionFind uf(n);
        const double radius = spec.cluster_radius_km * 1000.0;
        const double window = spec.cluster_window_hours * 3600.0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                if (std::abs(records[a].deployment_time - records[b].deployment_time) <= window &&
                    haversine(records[a].deployment_position, records[b].deployment_position) <=
                        radius) {
                    uf.unite(a, b);
                }
            }
        }
        std::map<std::size_t, std::vector<std::size_t>> by_root;
        for (std::size_t i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
        std::vector<std::vector<std::size_t>> clusters;
        for (auto& [root, members] : by_root) clusters.push_back(std::move(members));
        out.cluster_count = clusters.size();
        rng.shuffle(clusters);
        std::stable_sort(clusters.begin(), clusters.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });

        const double target = spec.test_fraction * static_cast<double>(n);
        std::size_t count = 0;
        for (const auto& c : clusters) {
            const double now = std::abs(static_cast<double>(count) - target);
            const double next = std::abs(static_cast<double>(count + c.size()) - target);
            if (next < now && count + c.size() < n) {
                for (std::size_t i : c) is_test[i] = 1;
                count += c.size();
            }
        }
        const double achieved = static_cast<double>(count) / static_cast<double>(n);
        if (count == 0 || std::abs(achieved - spec.test_fraction) > kSplitTolerance) {
            std::ostringstream msg;
            msg << "non-repetitive split infeasible: " << clusters.size() << " clusters (largest "
                << clusters.front().size() << " of " << n << " drifters) give test fraction "
                << achieved << " for requested " << spec.test_fraction << " (tolerance "
                << kSplitTolerance << ")";
            throw Error(ErrorCode::SplitInfeasible, msg.str());
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        (is_test[i] ? out.test : out.training).push_back(records[i].drifter_id);
    }
    out.achieved_fraction = static_cast<double>(out.test.size()) / static_cast<double>(n);
    return out;
}

std::string split_manifest_json(const SplitResult& result, const SplitSpec& spec) {
    json j;
    j["spec"] = {{"mode", to_string(spec.mode)},
                 {"test_fraction", spec.test_fraction},
                 {"rng_seed", spec.rng_seed},
                 {"cluster_radius_km", spec.cluster_radius_km},
                 {"cluster_window_hours", spec.cluster_window_hours}};
    j["training"] = result.training;
    j["test"] = result.test;
    j["cluster_count"] = result.cluster_count;
    j["achieved_test_fraction"] = result.achieved_fraction;
    if (spec.mode == SplitMode::NonRepetitive) {
        j["approximation"] =
            "deployment clusters found by single-linkage thresholds stand in for a hand-curated "
            "separation";
    }
    return j.dump(2) + "\n";
}

SplitResult read_split_manifest(const std::string& path) {
    try {
        const json j = json::parse(read_text_file(path));
        SplitResult r;
        r.training = j.at("training").get<std::vector<std::string>>();
        r.test = j.at("test").get<std::vector<std::string>>();
        r.cluster_count = j.value("cluster_count", std::size_t{0});
        r.achieved_fraction = j.value("achieved_test_fraction", 0.0);
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Synthetic truth

dynamics::DrifterParams SyntheticSpec::params() const {
    return dynamics::nondimensionalize(physical, length_scale, velocity_scale);
}

void SyntheticSpec::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
    if (n_clusters < 1 || per_cluster < 1) fail("need at least one drifter");
    if (!(duration >= output_dt) || !(output_dt > 0.0) || !(integration_dt > 0.0)) {
        fail("durations and steps must be positive");
    }
    const double ratio = output_dt / integration_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
        fail("integration_dt must divide output_dt");
    }
    if (!(lon_max > lon_min) || !(lat_max > lat_min) || !(grid_step > 0.0) || box_samples < 1) {
        fail("bad export grid");
    }
    if (!(deploy_lon_min >= lon_min && deploy_lon_max <= lon_max && deploy_lat_min >= lat_min &&
          deploy_lat_max <= lat_max && deploy_lon_max >= deploy_lon_min &&
          deploy_lat_max >= deploy_lat_min)) {
        fail("deployment box must lie inside the export box");
    }
    if (std::min(std::abs(lat_min), std::abs(lat_max)) < 2.0 || lat_min * lat_max <= 0.0) {
        fail("synthetic domain must stay off the equatorial band");
    }
    if (!(current_dt > 0.0) || !(wind_dt > 0.0)) fail("field steps must be positive");
    if (!std::isfinite(slip_ekman) || !std::isfinite(slip_current) || std::abs(slip_ekman) > 1.0 ||
        std::abs(slip_current) > 1.0) {
        fail("slip coefficients must be bounded by 1");
    }
    const auto p = params();
    if (!(p.eps > 0.0)) fail("eps must be positive");
    if (integration_dt > p.relaxation_time() / 5.0) {
        fail("integration_dt " + format_double(integration_dt) +
             " s is unstable for relaxation time " + format_double(p.relaxation_time()) + " s");
    }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

flowfield::DoubleGyre gyre_of(const SyntheticSpec& s) {
    return {s.gyre_amplitude, s.gyre_eps, kTwoPi / s.gyre_period, s.gyre_scale};
}

// Gyre jet with gradients per meter of the local east/north metric at p.
flowfield::FieldJet current_jet(const SyntheticSpec& s, const GeoPoint& p, double t) {
    const LocalFrame frame(s.gyre_origin);
    flowfield::FieldJet j =
        flowfield::analytic_jet(gyre_of(s), frame.to_local(p), t - s.start_time);
    const double scale = frame.meters_per_degree_lon() / meters_per_degree_lon(p.lat);
    j.grad.xx *= scale;
    j.grad.yx *= scale;
    return j;
}

flowfield::FieldJet wind_jet(const SyntheticSpec& s, double t) {
    const double tau = t - s.start_time;
    const double wt = kTwoPi / s.wind_turn_period, ws = kTwoPi / s.wind_swing_period;
    const double mag = s.wind_mean + s.wind_swing * std::sin(ws * tau);
    const double dmag = s.wind_swing * ws * std::cos(ws * tau);
    const double c = std::cos(wt * tau), sn = std::sin(wt * tau);
    flowfield::FieldJet j;
    j.value = {mag * c, mag * sn};
    j.d_dt = {dmag * c - mag * wt * sn, dmag * sn + mag * wt * c};
    return j;
}

flowfield::GriddedVelocityField box_averaged(const SyntheticSpec& s, double dt,
                                             const std::function<Vec2(const GeoPoint&, double)>& fn) {
    flowfield::GridSpec g;
    g.lon0 = s.lon_min;
    g.lat0 = s.lat_min;
    g.dlon = g.dlat = s.grid_step;
    g.nlon = static_cast<int>(std::llround((s.lon_max - s.lon_min) / s.grid_step)) + 1;
    g.nlat = static_cast<int>(std::llround((s.lat_max - s.lat_min) / s.grid_step)) + 1;
    g.t0 = s.start_time;
    g.dt = dt;
    const double end = s.start_time + s.deployment_window + s.duration;
    g.nt = static_cast<int>(std::ceil((end - s.start_time) / dt - 1e-9)) + 2;
    const int m = s.box_samples;
    return flowfield::make_field(g, [&](double lon, double lat, double t) {
        Vec2 acc;
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                const double dx = ((a + 0.5) / m - 0.5) * s.grid_step;
                const double dy = ((b + 0.5) / m - 0.5) * s.grid_step;
                acc += fn({lon + dx, lat + dy}, t);
            }
        }
        return acc / static_cast<double>(m * m);
    });
}

}  // namespace

Vec2 synthetic_current(const SyntheticSpec& spec, const GeoPoint& p, double t) {
    const LocalFrame frame(spec.gyre_origin);
    return flowfield::analytic_jet(gyre_of(spec), frame.to_local(p), t - spec.start_time).value;
}

Vec2 synthetic_wind(const SyntheticSpec& spec, double t) { return wind_jet(spec, t).value; }

dynamics::FlowSample synthetic_flow(const SyntheticSpec& spec, const GeoPoint& p, double t) {
    const auto sf = flowfield::combine_surface_flow(current_jet(spec, p, t), wind_jet(spec, t), p.lat);
    return {sf.u, sf.dudt, sf.u_e, sf.u_wind, dynamics::coriolis_parameter(p.lat)};
}

DrifterRecord integrate_truth_drifter(const SyntheticSpec& spec, const std::string& id,
                                      const GeoPoint& start, double t0, double duration,
                                      bool* truncated) {
    const auto params = spec.params();
    const double a = spec.slip_ekman, b = spec.slip_current, eps = params.eps;
    const dynamics::HTerm H = [a, b, eps](const Vec2& ue, const Vec2& u) {
        return (a * ue + b * u) / eps;
    };
    const double margin = 2.0 * spec.grid_step;
    auto inside = [&](const GeoPoint& p) {
        return p.lon >= spec.lon_min + margin && p.lon <= spec.lon_max - margin &&
               p.lat >= spec.lat_min + margin && p.lat <= spec.lat_max - margin;
    };

    struct State {
        GeoPoint p;
        Vec2 v;
    };
    auto rhs = [&](const State& s, double t, GeoPoint& dp, Vec2& dv) {
        const auto flow = synthetic_flow(spec, s.p, t);
        dp = velocity_to_degree_rate(s.v, s.p.lat);
        dv = dynamics::full_mr_acceleration_si(s.v, flow, params, H);
    };
    auto advance = [](const State& s, const GeoPoint& dp, const Vec2& dv, double h) {
        return State{{s.p.lon + h * dp.lon, s.p.lat + h * dp.lat}, s.v + h * dv};
    };

    DrifterRecord rec;
    rec.drifter_id = id;
    State s{start, synthetic_flow(spec, start, t0).u};
    // Largest step <= integration_dt that divides the output interval.
    const int substeps = static_cast<int>(std::ceil(spec.output_dt / spec.integration_dt - 1e-9));
    const int outputs = static_cast<int>(std::floor(duration / spec.output_dt + 1e-9));
    const double h = spec.output_dt / substeps;
    if (truncated) *truncated = false;
    if (!inside(start)) throw Error(ErrorCode::OutOfDomain, "deployment outside export box");
    rec.samples.push_back({t0, s.p, s.v});
    for (int k = 1; k <= outputs; ++k) {
        for (int m = 0; m < substeps; ++m) {
            const double t = t0 + (k - 1) * spec.output_dt + m * h;
            GeoPoint p1, p2, p3, p4;
            Vec2 v1, v2, v3, v4;
            rhs(s, t, p1, v1);
            rhs(advance(s, p1, v1, h / 2), t + h / 2, p2, v2);
            rhs(advance(s, p2, v2, h / 2), t + h / 2, p3, v3);
            rhs(advance(s, p3, v3, h), t + h, p4, v4);
            s.p.lon += h / 6 * (p1.lon + 2 * p2.lon + 2 * p3.lon + p4.lon);
            s.p.lat += h / 6 * (p1.lat + 2 * p2.lat + 2 * p3.lat + p4.lat);
            s.v += h / 6 * (v1 + 2 * v2 + 2 * v3 + v4);
        }
        if (!s.p.finite() || !s.v.finite()) {
            throw Error(ErrorCode::NumericalFailure, "truth integration of '" + id + "' diverged");
        }
        if (!inside(s.p)) {
            if (truncated) *truncated = true;
            break;
        }
        rec.samples.push_back({t0 + k * spec.output_dt, s.p, s.v});
    }
    rec.deployment_time = t0;
    rec.deployment_position = start;
    return rec;
}

SyntheticDataset generate_synthetic_truth(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticDataset ds;
    ds.params = spec.params();
    Rng rng(derive_seed(spec.seed, 0x5e7));
    const double step = spec.output_dt;
    for (int c = 0; c < spec.n_clusters; ++c) {
        const GeoPoint center{rng.uniform(spec.deploy_lon_min, spec.deploy_lon_max),
                              rng.uniform(spec.deploy_lat_min, spec.deploy_lat_max)};
        const double t_cluster =
            spec.start_time +
            std::floor(rng.uniform(0.0, spec.deployment_window) / step) * step;
        for (int d = 0; d < spec.per_cluster; ++d) {
            const double r = spec.cluster_radius * std::sqrt(rng.uniform());
            const double th = kTwoPi * rng.uniform();
            const GeoPoint start{center.lon + r * std::cos(th) / meters_per_degree_lon(center.lat),
                                 center.lat + r * std::sin(th) / kMetersPerDegree};
            const auto slots = static_cast<std::size_t>(std::floor(spec.cluster_window / step)) + 1;
            const double t0 = t_cluster + static_cast<double>(rng.index(slots)) * step;
            char id[32];
            std::snprintf(id, sizeof id, "syn%02d_%d", c, d);
            bool cut = false;
            auto rec = integrate_truth_drifter(spec, id, start, t0, spec.duration, &cut);
            if (cut) ++ds.truncated_tracks;
            if (rec.samples.size() >= 2) ds.records.push_back(std::move(rec));
        }
    }
    ds.current = box_averaged(spec, spec.current_dt, [&](const GeoPoint& p, double t) {
        return synthetic_current(spec, p, t);
    });
    ds.wind = box_averaged(spec, spec.wind_dt,
                           [&](const GeoPoint&, double t) { return synthetic_wind(spec, t); });
    return ds;
}

}  // namespace lagdrift::dataio
