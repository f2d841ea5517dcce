// SPDX-License-Identifier: Apache-2.0
#include "lagdrift/app/pipeline.hpp"

#include "lagdrift/integrate.hpp"
#include "lagdrift/learn/blended.hpp"
#include "lagdrift/metrics.hpp"
#include "lagdrift/rng.hpp"
#include "lagdrift/util.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace lagdrift::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void log(const std::string& msg) { std::clog << "lagdrift: " << msg << '\n'; }

// Seed salts for the pipeline stages.
constexpr std::uint64_t kSaltSplit = 11, kSaltTrain = 12, kSaltSynth = 13, kSaltEnsemble = 14;

std::string join(const std::vector<std::string>& lines, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) out += (i ? sep : "") + lines[i];
    return out;
}

template <typename F>
auto as_config_error(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::ConfigError, e.what());
        throw;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiment

dynamics::DrifterParams Experiment::drifter_params() const {
    return as_config_error(
        [&] { return dynamics::nondimensionalize(physical, length_scale, velocity_scale); });
}

std::vector<std::string> Experiment::provenance_lines() const {
    std::vector<std::string> out{"lagdrift run=" + run_id + " seed=" + std::to_string(seed)};
    for (const auto& l : config_echo) out.push_back("config " + l);
    return out;
}

std::string Experiment::output(const std::string& name) const {
    return (fs::path(output_dir) / name).string();
}

Experiment make_experiment(const Config& c, const RunOptions& o) {
    Experiment e;
    const auto config_seed = static_cast<std::uint64_t>(c.get_int("run.seed", 0));
    e.seed = o.seed ? *o.seed : config_seed;
    const long long threads = c.get_int("run.threads", 0);
    if (threads < 0) throw Error(ErrorCode::ConfigError, "run.threads must be >= 0");
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    e.threads = o.serial ? 1u : (threads > 0 ? static_cast<unsigned>(threads) : hw);
    e.baseline_only = o.baseline_only;

    // Defaults derived from an already resolved directory must not be resolved twice.
    auto path_or = [&](const std::string& key, const fs::path& derived) {
        return c.has(key) ? c.get_path(key, "") : derived.lexically_normal().string();
    };
    e.dataset_dir = c.get_path("paths.dataset", "data");
    const fs::path ds(e.dataset_dir);
    e.current_path = path_or("paths.current", ds / "current.json");
    e.wind_path = path_or("paths.wind", ds / "wind.json");
    e.drifters_path = path_or("paths.drifters", ds / "drifters.csv");
    e.output_dir = c.get_path("paths.output", "out");
    e.model_path = path_or("paths.model", fs::path(e.output_dir) / "model.json");

    auto& p = e.physical;
    p.rho_p = c.get_double("drifter.rho_p", p.rho_p);
    p.rho_f = c.get_double("drifter.rho_f", p.rho_f);
    p.rho_a = c.get_double("drifter.rho_a", p.rho_a);
    p.nu_f = c.get_double("drifter.nu_f", p.nu_f);
    p.nu_a = c.get_double("drifter.nu_a", p.nu_a);
    p.a = c.get_double("drifter.radius", p.a);
    p.alpha = c.get_double("drifter.alpha", p.alpha);
    e.length_scale = c.get_double("drifter.length_scale", e.length_scale);
    e.velocity_scale = c.get_double("drifter.velocity_scale", e.velocity_scale);
    e.sampling.mask_fallback = c.get_bool("fields.mask_fallback", false);

    auto& s = e.synthetic;
    s.seed = derive_seed(e.seed, kSaltSynth);
    s.n_clusters = static_cast<int>(c.get_int("synthetic.n_clusters", s.n_clusters));
    s.per_cluster = static_cast<int>(c.get_int("synthetic.per_cluster", s.per_cluster));
    s.duration = 86400.0 * c.get_double("synthetic.duration_days", s.duration / 86400.0);
    s.deployment_window =
        86400.0 * c.get_double("synthetic.deployment_window_days", s.deployment_window / 86400.0);
    s.cluster_radius = c.get_double("synthetic.cluster_radius_m", s.cluster_radius);
    s.cluster_window = c.get_double("synthetic.cluster_window_s", s.cluster_window);
    s.gyre_amplitude = c.get_double("synthetic.gyre_amplitude", s.gyre_amplitude);
    s.gyre_period = 86400.0 * c.get_double("synthetic.gyre_period_days", s.gyre_period / 86400.0);
    s.wind_mean = c.get_double("synthetic.wind_mean", s.wind_mean);
    s.wind_swing = c.get_double("synthetic.wind_swing", s.wind_swing);
    s.slip_ekman = c.get_double("synthetic.slip_ekman", s.slip_ekman);
    s.slip_current = c.get_double("synthetic.slip_current", s.slip_current);
    s.integration_dt = c.get_double("synthetic.integration_dt", s.integration_dt);
    s.grid_step = c.get_double("synthetic.grid_step", s.grid_step);
    s.physical = e.physical;
    s.length_scale = e.length_scale;
    s.velocity_scale = e.velocity_scale;

    auto& sp = e.split;
    sp.mode = dataio::split_mode_from_string(c.get_string("split.mode", "random"));
    sp.test_fraction = c.get_double("split.test_fraction", sp.test_fraction);
    sp.cluster_radius_km = c.get_double("split.cluster_radius_km", sp.cluster_radius_km);
    sp.cluster_window_hours = c.get_double("split.cluster_window_hours", sp.cluster_window_hours);
    sp.rng_seed = derive_seed(e.seed, kSaltSplit);

    auto& t = e.train;
    t.hidden = static_cast<int>(c.get_int("train.hidden", t.hidden));
    t.epochs = static_cast<int>(c.get_int("train.epochs", t.epochs));
    t.truncation = static_cast<int>(c.get_int("train.truncation", t.truncation));
    t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
    t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
    t.clip_norm = c.get_double("train.clip_norm", t.clip_norm);
    t.final_lr_fraction = c.get_double("train.final_lr_fraction", t.final_lr_fraction);
    t.rng_seed = derive_seed(e.seed, kSaltTrain);
    t.threads = e.threads;
    e.resume = c.get_bool("train.resume", false);

    e.ensemble_count = static_cast<int>(c.get_int("ensemble.count", e.ensemble_count));
    e.ensemble_radius = c.get_double("ensemble.radius_m", e.ensemble_radius);

    const auto unused = c.unused_keys();
    if (!unused.empty()) {
        throw Error(ErrorCode::ConfigError, "unknown config keys: " + join(unused, ", "));
    }
    as_config_error([&] {
        sp.validate();
        t.validate();
        return 0;
    });
    if (e.ensemble_count < 1 || !(e.ensemble_radius >= 0.0) ||
        e.ensemble_radius >= integrate::kMaxEnsembleRadius) {
        throw Error(ErrorCode::ConfigError, "ensemble count must be >= 1 and radius in [0, 10 km)");
    }
    (void)e.drifter_params();

    e.config_echo = c.canonical_lines();
    e.run_id = hex64(fnv1a64(join(e.config_echo, "\n") + "\nseed=" + std::to_string(e.seed)));
    return e;
}

// ---------------------------------------------------------------------------
// Shared loading

namespace {

json provenance_json(const Experiment& exp) {
    return {{"run", exp.run_id}, {"seed", exp.seed}, {"config", exp.config_echo}};
}

struct LoadedData {
    std::shared_ptr<const flowfield::GriddedVelocityField> current;
    std::shared_ptr<const flowfield::GriddedVelocityField> wind;
    std::vector<dataio::DrifterRecord> records;  // resampled segments
};

std::vector<dataio::DrifterRecord> load_records(const Experiment& exp) {
    std::vector<dataio::DrifterRecord> out;
    for (const auto& r : dataio::load_drifters(exp.drifters_path)) {
        if (r.samples.size() < 2) continue;
        for (auto& seg : dataio::resample_15min(r)) out.push_back(std::move(seg));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyInput, "no usable drifter tracks");
    return out;
}

LoadedData load_data(const Experiment& exp) {
    LoadedData d;
    d.current = std::make_shared<const flowfield::GriddedVelocityField>(
        flowfield::load_field(exp.current_path));
    d.wind = std::make_shared<const flowfield::GriddedVelocityField>(
        flowfield::load_field(exp.wind_path));
    d.records = load_records(exp);
    return d;
}

dataio::SplitResult obtain_split(const Experiment& exp,
                                 const std::vector<dataio::DrifterRecord>& records, bool write) {
    const std::string path = exp.output("split.json");
    if (!write && fs::exists(path)) return dataio::read_split_manifest(path);
    const auto result = dataio::split(records, exp.split);
    json j = json::parse(dataio::split_manifest_json(result, exp.split));
    j["provenance"] = provenance_json(exp);
    write_text_file(path, j.dump(2) + "\n");
    return result;
}

std::vector<const dataio::DrifterRecord*> select(const std::vector<dataio::DrifterRecord>& records,
                                                 const std::vector<std::string>& ids) {
    std::map<std::string, const dataio::DrifterRecord*> by_id;
    for (const auto& r : records) by_id[r.drifter_id] = &r;
    std::vector<const dataio::DrifterRecord*> out;
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw Error(ErrorCode::RunMismatch, "split lists drifter '" + id + "' not in dataset");
        }
        out.push_back(it->second);
    }
    return out;
}

std::string csv_header(const Experiment& exp, const std::string& columns) {
    std::string out;
    for (const auto& l : exp.provenance_lines()) out += "# " + l + "\n";
    return out + columns + "\n";
}

// First comment line of an output must carry this run's id.
void check_run_id(const Experiment& exp, const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string first;
    std::getline(in, first);
    const std::string key = "run=";
    const auto pos = first.find(key);
    const std::string found = pos == std::string::npos ? "" : first.substr(pos + 4, 16);
    if (found != exp.run_id) {
        throw Error(ErrorCode::RunMismatch, path + " was produced by run '" + found +
                                                "', expected '" + exp.run_id + "'");
    }
}

std::unique_ptr<learn::LstmModel> maybe_load_model(const Experiment& exp) {
    if (exp.baseline_only || !fs::exists(exp.model_path)) return nullptr;
    return std::make_unique<learn::LstmModel>(learn::load_model(exp.model_path));
}

}  // namespace

// ---------------------------------------------------------------------------
// synth

dataio::SyntheticDataset cmd_synth(const Experiment& exp) {
    as_config_error([&] {
        exp.synthetic.validate();
        return 0;
    });
    log("generating synthetic dataset in " + exp.dataset_dir);
    auto ds = dataio::generate_synthetic_truth(exp.synthetic);
    fs::create_directories(exp.dataset_dir);
    const auto strip = [](const std::string& p) {
        return p.size() > 5 && p.ends_with(".json") ? p.substr(0, p.size() - 5) : p;
    };
    flowfield::save_field(ds.current, strip(exp.current_path));
    flowfield::save_field(ds.wind, strip(exp.wind_path));
    dataio::write_drifters(exp.drifters_path, ds.records, exp.provenance_lines());

    const auto& s = exp.synthetic;
    json j;
    j["provenance"] = provenance_json(exp);
    j["drifters"] = ds.records.size();
    j["truncated_tracks"] = ds.truncated_tracks;
    j["clusters"] = s.n_clusters;
    j["per_cluster"] = s.per_cluster;
    j["slip"] = {{"ekman", s.slip_ekman}, {"current", s.slip_current}};
    j["drifter_params"] = {{"R", ds.params.R},     {"St", ds.params.St},
                           {"eps", ds.params.eps}, {"delta_p", ds.params.delta_p},
                           {"T", ds.params.T},     {"relaxation_time_s", ds.params.relaxation_time()}};
    j["fields"] = {{"current", exp.current_path}, {"wind", exp.wind_path}};
    write_text_file((fs::path(exp.dataset_dir) / "manifest.json").string(), j.dump(2) + "\n");
    log("wrote " + std::to_string(ds.records.size()) + " drifters");
    return ds;
}

// ---------------------------------------------------------------------------
// train

TrainSummary cmd_train(const Experiment& exp) {
    const auto data = load_data(exp);
    const auto split = obtain_split(exp, data.records, true);
    const auto train_records = select(data.records, split.training);
    if (train_records.empty()) throw Error(ErrorCode::EmptyInput, "training side is empty");

    std::vector<integrate::Trajectory> tracks;
    for (const auto* r : train_records) tracks.push_back(dataio::to_trajectory(*r));
    const learn::DeterministicModel det(data.current, data.wind, exp.drifter_params(),
                                        exp.sampling);
    const auto samples = learn::build_training_samples(tracks, det, exp.train.truncation);
    if (samples.empty()) {
        throw Error(ErrorCode::EmptyInput, "training side has no samples inside field coverage");
    }

    std::unique_ptr<learn::LstmModel> initial;
    if (exp.resume && fs::exists(exp.model_path)) {
        initial = std::make_unique<learn::LstmModel>(learn::load_model(exp.model_path));
        log("resuming from " + exp.model_path);
    }
    log("training on " + std::to_string(samples.size()) + " windows from " +
        std::to_string(tracks.size()) + " drifters");
    const auto result = learn::train(samples, exp.train, initial.get());

    learn::save_model(result.model, exp.model_path, join(exp.provenance_lines(), "\n"));
    std::string loss = csv_header(exp, "epoch,loss");
    for (std::size_t k = 0; k < result.epoch_loss.size(); ++k) {
        loss += std::to_string(k + 1) + "," + format_double(result.epoch_loss[k]) + "\n";
    }
    write_text_file(exp.output("train_loss.csv"), loss);
    log("final loss " + format_double(result.epoch_loss.back()));

    TrainSummary out;
    out.training_drifters = split.training.size();
    out.test_drifters = split.test.size();
    out.windows = samples.size();
    out.epoch_loss = result.epoch_loss;
    return out;
}

// ---------------------------------------------------------------------------
// predict

PredictMode predict_mode_from_string(const std::string& s) {
    if (s == "single_step") return PredictMode::SingleStep;
    if (s == "forecast") return PredictMode::Forecast;
    throw Error(ErrorCode::ConfigError, "unknown predict mode '" + s + "'");
}

void cmd_predict(const Experiment& exp, PredictMode mode) {
    const auto data = load_data(exp);
    const auto split = obtain_split(exp, data.records, false);
    const auto test = select(data.records, split.test);
    const auto model = maybe_load_model(exp);
    const learn::DeterministicModel det(data.current, data.wind, exp.drifter_params(),
                                        exp.sampling);
    log(std::string(model ? "blended" : "deterministic baseline") + " prediction for " +
        std::to_string(test.size()) + " test drifters");

    if (mode == PredictMode::SingleStep) {
        std::string body = csv_header(
            exp, "drifter_id,iso_time,lon,lat,u_real,v_real,u_det,v_det,u_blend,v_blend,valid");
        for (const auto* r : test) {
            const auto track = dataio::to_trajectory(*r);
            const auto pred = learn::predict_single_step(track, det, model.get());
            for (std::size_t k = 0; k < track.size(); ++k) {
                const Vec2 d = pred.deterministic[k], b = pred.blended[k];
                body += track.drifter_id + "," + format_iso_time(track.times[k]) + "," +
                        format_double(track.positions[k].lon) + "," +
                        format_double(track.positions[k].lat) + "," +
                        format_double(track.velocities[k].x) + "," +
                        format_double(track.velocities[k].y) + "," + format_double(d.x) + "," +
                        format_double(d.y) + "," + format_double(b.x) + "," + format_double(b.y) +
                        "," + (pred.valid[k] ? "1" : "0") + "\n";
            }
        }
        write_text_file(exp.output("single_step.csv"), body);
        return;
    }

    std::vector<integrate::Trajectory> members, medians;
    const std::uint64_t ens_seed = derive_seed(exp.seed, kSaltEnsemble);
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& r = *test[i];
        const auto start = r.samples.front();
        det.evaluate(start.position, start.time);  // coverage check, throws when outside
        integrate::EnsembleSpec spec;
        spec.center = start.position;
        spec.radius = exp.ensemble_radius;
        spec.count = exp.ensemble_count;
        spec.rng_seed = derive_seed(ens_seed, i);
        const auto starts = integrate::seed_ensemble(spec);
        const int n_steps = static_cast<int>(r.samples.size()) - 1;

        const auto det_runs = integrate::integrate_ensemble(
            [&](std::size_t) { return integrate::MemberModel{det.as_velocity_model(), {}}; },
            starts, start.time, n_steps, dataio::kResampleStep, r.drifter_id + "/det/", exp.threads);
        auto blend_runs = det_runs;
        if (model) {
            blend_runs = integrate::integrate_ensemble(
                [&](std::size_t) { return learn::make_blended_member(det, model.get()); }, starts,
                start.time, n_steps, dataio::kResampleStep, r.drifter_id + "/blend/", exp.threads);
        } else {
            for (std::size_t m = 0; m < blend_runs.size(); ++m) {
                blend_runs[m].drifter_id = r.drifter_id + "/blend/m" + std::to_string(m);
            }
        }
        auto det_median = integrate::median_trajectory(det_runs);
        det_median.drifter_id = r.drifter_id + "/det";
        auto blend_median = integrate::median_trajectory(blend_runs);
        blend_median.drifter_id = r.drifter_id + "/blend";
        members.insert(members.end(), det_runs.begin(), det_runs.end());
        members.insert(members.end(), blend_runs.begin(), blend_runs.end());
        medians.push_back(std::move(det_median));
        medians.push_back(std::move(blend_median));
    }
    auto comment = exp.provenance_lines();
    comment.push_back(std::string("model ") + (model ? exp.model_path : "none"));
    integrate::write_trajectories_csv(exp.output("forecast_members.csv"), members, comment);
    integrate::write_trajectories_csv(exp.output("forecast_median.csv"), medians, comment);
    integrate::write_trajectories_geojson(exp.output("forecast_median.geojson"), medians);
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

struct SingleStepRows {
    std::vector<Vec2> real, det, blend;
};

std::map<std::string, SingleStepRows> read_single_step(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::map<std::string, SingleStepRows> out;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 11) throw Error(ErrorCode::ParseError, path + ": expected 11 fields");
        if (f[10] != "1") continue;
        auto& rows = out[f[0]];
        rows.real.push_back({parse_double(f[4]), parse_double(f[5])});
        rows.det.push_back({parse_double(f[6]), parse_double(f[7])});
        rows.blend.push_back({parse_double(f[8]), parse_double(f[9])});
    }
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> zonal(const dataio::DrifterRecord& r) {
    std::vector<double> u;
    u.reserve(r.samples.size());
    for (const auto& s : r.samples) u.push_back(s.velocity.x);
    return u;
}

}  // namespace

EvaluationSummary cmd_evaluate(const Experiment& exp) {
    const std::string single_path = exp.output("single_step.csv");
    const std::string members_path = exp.output("forecast_members.csv");
    check_run_id(exp, single_path);
    check_run_id(exp, members_path);

    const auto records = load_records(exp);
    const auto split = obtain_split(exp, records, false);
    const auto test = select(records, split.test);
    const auto train = select(records, split.training);

    EvaluationSummary out;
    {
        double speed = 0.0, n = 0.0;
        for (const auto& r : records) {
            for (const auto& s : r.samples) {
                speed += s.velocity.norm();
                n += 1.0;
            }
        }
        out.u_bar = speed / n;
    }
    {
        std::istringstream in(read_text_file(members_path));
        std::string line;
        while (std::getline(in, line) && !line.empty() && line.front() == '#') {
            if (line.rfind("# model ", 0) == 0) out.model_used = line != "# model none";
        }
    }

    const auto single = read_single_step(single_path);
    std::map<std::string, std::vector<integrate::Trajectory>> det_members, blend_members;
    for (auto& tr : integrate::read_trajectories_csv(members_path)) {
        const auto slash = tr.drifter_id.find('/');
        if (slash == std::string::npos) {
            throw Error(ErrorCode::ParseError, "unexpected member id '" + tr.drifter_id + "'");
        }
        const std::string id = tr.drifter_id.substr(0, slash);
        const bool blend = tr.drifter_id.compare(slash, 7, "/blend/") == 0;
        (blend ? blend_members : det_members)[id].push_back(std::move(tr));
    }

    std::vector<std::vector<double>> train_u;
    std::vector<metrics::Deployment> train_dep;
    for (const auto* r : train) {
        train_u.push_back(zonal(*r));
        train_dep.push_back({r->drifter_id, r->deployment_position, r->deployment_time});
    }
    std::vector<std::span<const double>> train_spans(train_u.begin(), train_u.end());

    for (const auto* r : test) {
        DrifterEvaluation ev;
        ev.drifter_id = r->drifter_id;
        const auto s_it = single.find(r->drifter_id);
        if (s_it == single.end() || s_it->second.real.empty()) {
            throw Error(ErrorCode::RunMismatch,
                        "no single-step prediction for test drifter '" + r->drifter_id + "'");
        }
        const auto& rows = s_it->second;
        ev.rmse_deterministic = metrics::rmse_zonal(rows.det, rows.real, out.u_bar);
        ev.rmse_blended = metrics::rmse_zonal(rows.blend, rows.real, out.u_bar);

        const auto real = dataio::to_trajectory(*r);
        auto mean_skill = [&](const std::map<std::string, std::vector<integrate::Trajectory>>& m) {
            const auto it = m.find(r->drifter_id);
            if (it == m.end() || it->second.empty()) {
                throw Error(ErrorCode::RunMismatch,
                            "no forecast for test drifter '" + r->drifter_id + "'");
            }
            double s = 0.0;
            for (const auto& tr : it->second) s += metrics::skill_score(tr, real).s;
            return s / static_cast<double>(it->second.size());
        };
        ev.skill_deterministic = mean_skill(det_members);
        ev.skill_blended = mean_skill(blend_members);

        const auto u = zonal(*r);
        ev.max_correlation = metrics::max_cross_correlation(u, train_spans);
        ev.max_coherence = u.size() >= 2 * metrics::kCoherenceSegment
                               ? metrics::max_mean_ms_coherence(u, train_spans)
                               : std::nan("");
        const auto near = metrics::nearest_trained(
            {r->drifter_id, r->deployment_position, r->deployment_time}, train_dep);
        ev.dist_to_trained_km = near.distance_km;
        ev.time_to_trained_hours = near.time_hours;
        out.drifters.push_back(ev);
    }

    std::vector<double> rd, rb, dist, hours;
    std::size_t better = 0;
    for (const auto& ev : out.drifters) {
        rd.push_back(ev.rmse_deterministic);
        rb.push_back(ev.rmse_blended);
        dist.push_back(ev.dist_to_trained_km);
        hours.push_back(ev.time_to_trained_hours);
        if (ev.skill_blended > ev.skill_deterministic) ++better;
    }
    out.median_rmse_deterministic = median(rd);
    out.median_rmse_blended = median(rb);
    out.fraction_blended_better =
        out.drifters.empty() ? 0.0 : static_cast<double>(better) / out.drifters.size();
    out.mean_dist_to_trained_km = mean(dist);
    out.mean_time_to_trained_hours = mean(hours);

    std::string rmse = csv_header(exp, "drifter_id,rmse_det,rmse_blend");
    std::string skill = csv_header(exp, "drifter_id,skill_det,skill_blend");
    std::string sim = csv_header(
        exp, "drifter_id,max_correlation,max_mean_ms_coherence,dist_to_trained_km,"
             "time_to_trained_hours");
    for (const auto& ev : out.drifters) {
        rmse += ev.drifter_id + "," + format_double(ev.rmse_deterministic) + "," +
                format_double(ev.rmse_blended) + "\n";
        skill += ev.drifter_id + "," + format_double(ev.skill_deterministic) + "," +
                 format_double(ev.skill_blended) + "\n";
        sim += ev.drifter_id + "," + format_double(ev.max_correlation) + "," +
               format_double(ev.max_coherence) + "," + format_double(ev.dist_to_trained_km) + "," +
               format_double(ev.time_to_trained_hours) + "\n";
    }
    write_text_file(exp.output("rmse.csv"), rmse);
    write_text_file(exp.output("skill.csv"), skill);
    write_text_file(exp.output("similarity.csv"), sim);

    double hi = 0.0;
    for (double v : rd) hi = std::max(hi, v);
    for (double v : rb) hi = std::max(hi, v);
    const auto edges = metrics::uniform_edges(0.0, hi > 0.0 ? hi : 1.0, 20);
    const auto hd = metrics::histogram(rd, edges), hb = metrics::histogram(rb, edges);
    std::string hist = csv_header(exp, "bin_lo,bin_hi,count_det,count_blend");
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        hist += format_double(edges[b]) + "," + format_double(edges[b + 1]) + "," +
                std::to_string(hd[b]) + "," + std::to_string(hb[b]) + "\n";
    }
    write_text_file(exp.output("rmse_histogram.csv"), hist);

    json j;
    j["provenance"] = provenance_json(exp);
    j["test_drifters"] = out.drifters.size();
    j["model_used"] = out.model_used;
    j["u_bar"] = out.u_bar;
    j["median_rmse_deterministic"] = out.median_rmse_deterministic;
    j["median_rmse_blended"] = out.median_rmse_blended;
    j["fraction_blended_skill_better"] = out.fraction_blended_better;
    j["mean_dist_to_trained_km"] = out.mean_dist_to_trained_km;
    j["mean_time_to_trained_hours"] = out.mean_time_to_trained_hours;
    j["split_mode"] = dataio::to_string(exp.split.mode);
    write_text_file(exp.output("summary.json"), j.dump(2) + "\n");
    return out;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::ConfigError:
            return 2;
        case ErrorCode::NumericalFailure:
            return 4;
        default:
            return 3;
    }
}

}  // namespace lagdrift::app
