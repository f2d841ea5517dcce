#include "lagdrift/app/pipeline.hpp"
#include "lagdrift/learn/blended.hpp"
#include "lagdrift/util.hpp"
#include "support.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

using namespace lagdrift;
using namespace lagdrift::app;
using testing::error_of;
namespace fs = std::filesystem;

namespace {

// CSV text without the leading '#' provenance lines.
std::string csv_body(const fs::path& path) {
    std::istringstream in(read_text_file(path.string()));
    std::string line, out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') continue;
        out += line + "\n";
    }
    return out;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& path) {
    std::istringstream in(csv_body(path));
    std::string line;
    std::vector<std::vector<std::string>> rows;
    std::getline(in, line);  // header
    while (std::getline(in, line)) rows.push_back(split_csv_line(line));
    return rows;
}

const char* kSmallConfig = R"(
[run]
seed = 7
threads = 1

[paths]
dataset = "data"
output = "out"

[synthetic]
n_clusters = 3
per_cluster = 3
duration_days = 2
deployment_window_days = 0.5

[train]
hidden = 4
epochs = 2
truncation = 48
batch_size = 8
learning_rate = 0.01

[ensemble]
count = 2
radius_m = 500
)";

Experiment small_experiment(const fs::path& dir, const std::string& extra = "",
                            RunOptions opts = {}) {
    write_text_file((dir / "exp.toml").string(), std::string(kSmallConfig) + extra);
    return make_experiment(Config::load((dir / "exp.toml").string()), opts);
}

// Tracks that follow the deterministic model exactly, so every residual is zero.
void write_zero_residual_dataset(const fs::path& dir, int drifters, int steps) {
    flowfield::GridSpec g;
    g.lon0 = -92.0;
    g.lat0 = 24.0;
    g.dlon = g.dlat = 0.25;
    g.nlon = 33;
    g.nlat = 25;
    g.t0 = 1453248000.0;
    g.dt = 86400.0;
    g.nt = 4;
    const LocalFrame frame({-88.0, 27.0});
    const auto current = flowfield::make_field(g, [&](double lon, double lat, double t) {
        const Vec2 x = frame.to_local({lon, lat});
        const double phase = (t - g.t0) / 86400.0;
        return Vec2{0.12 * std::cos(x.y / 2e5 + 0.3 * phase), 0.08 * std::sin(x.x / 2.5e5)};
    });
    auto wg = g;
    wg.dt = 21600.0;
    wg.nt = 13;
    const auto wind = flowfield::make_field(wg, [&](double, double, double t) {
        const double a = (t - g.t0) / 86400.0;
        return Vec2{7.0 * std::cos(a), 7.0 * std::sin(a)};
    });
    flowfield::save_field(current, (dir / "current").string());
    flowfield::save_field(wind, (dir / "wind").string());

    auto cur = std::make_shared<flowfield::GriddedVelocityField>(flowfield::load_field((dir / "current.json").string()));
    auto win = std::make_shared<flowfield::GriddedVelocityField>(flowfield::load_field((dir / "wind.json").string()));
    const learn::DeterministicModel det(cur, win, dynamics::nondimensionalize({}, 1e4, 0.5));
    std::vector<dataio::DrifterRecord> recs;
    for (int d = 0; d < drifters; ++d) {
        const GeoPoint start = frame.to_geo({-1.5e5 + 3.3e4 * d, 2e4 * (d % 3)});
        const auto tr = integrate::integrate_trajectory(det.as_velocity_model(), start, g.t0 + 3600.0 * d, steps,
                                                        900.0, "z" + std::to_string(d));
        REQUIRE(tr.all_ok());
        recs.push_back(dataio::from_trajectory(tr));
    }
    dataio::write_drifters((dir / "drifters.csv").string(), recs);
}

const char* kZeroConfig = R"(
[run]
seed = 3
threads = 1

[paths]
dataset = "."
output = "out"

[train]
hidden = 4
truncation = 48
batch_size = 64

[ensemble]
count = 1
radius_m = 0
)";

}  // namespace

TEST_CASE("config parsing") {
    const auto c = Config::parse(R"(
# comment
top = 1
[a]
x = 2.5   # trailing
name = "hello # not a comment"
flag = true
path = "sub/file.txt"
)",
                                 "/base");
    CHECK(c.get_int("top", 0) == 1);
    CHECK(c.get_double("a.x", 0.0) == 2.5);
    CHECK(c.get_string("a.name", "") == "hello # not a comment");
    CHECK(c.get_bool("a.flag", false));
    CHECK(c.get_path("a.path", "") == "/base/sub/file.txt");
    CHECK(c.get_path("a.none", "/abs/x") == "/abs/x");
    CHECK(c.get_int("a.missing", 42) == 42);
    CHECK(c.unused_keys().empty());
    CHECK(c.canonical_lines().front() == "a.flag = true");

    CHECK(error_of([&] { c.get_int("a.x", 0); }) == ErrorCode::ConfigError);
    CHECK(error_of([&] { c.get_bool("a.x", false); }) == ErrorCode::ConfigError);
    CHECK(error_of([] { Config::parse("a = 1\na = 2\n"); }) == ErrorCode::ConfigError);
    CHECK(error_of([] { Config::parse("just words\n"); }) == ErrorCode::ConfigError);
    CHECK(error_of([] { Config::parse("[open\n"); }) == ErrorCode::ConfigError);
    CHECK(error_of([] { Config::parse("s = \"open\n"); }) == ErrorCode::ConfigError);
    CHECK(error_of([] { Config::load("/nonexistent/exp.toml"); }) == ErrorCode::ConfigError);
}

TEST_CASE("experiment construction") {
    const auto dir = testing::scratch_dir("app_exp");
    const auto e = small_experiment(dir);
    CHECK(e.run_id.size() == 16);
    CHECK(e.seed == 7);
    CHECK(e.output_dir == (dir / "out").string());
    CHECK(e.model_path == (dir / "out" / "model.json").string());
    CHECK(e.drifters_path == (dir / "data" / "drifters.csv").string());
    CHECK(e.train.hidden == 4);
    CHECK(e.ensemble_count == 2);
    CHECK(e.provenance_lines().front() == "lagdrift run=" + e.run_id + " seed=7");

    CHECK(small_experiment(dir).run_id == e.run_id);
    RunOptions other;
    other.seed = 8;
    const auto e8 = small_experiment(dir, "", other);
    CHECK(e8.seed == 8);
    CHECK(e8.run_id != e.run_id);
    CHECK(e8.split.rng_seed != e.split.rng_seed);
    RunOptions serial;
    serial.serial = true;
    CHECK(small_experiment(dir, "", serial).threads == 1);

    CHECK(error_of([&] { small_experiment(dir, "[split]\nmod = random\n"); }) == ErrorCode::ConfigError);
    CHECK(error_of([&] { small_experiment(dir, "[split]\ntest_fraction = 1.5\n"); }) == ErrorCode::ConfigError);
    CHECK(error_of([&] { small_experiment(dir, "[split]\nmode = clustered\n"); }) == ErrorCode::ConfigError);
    CHECK(error_of([&] { small_experiment(dir, "[drifter]\nlength_scale = -1\n"); }) == ErrorCode::ConfigError);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(Error(ErrorCode::ConfigError, "")) == 2);
    CHECK(exit_code_for(Error(ErrorCode::InvalidArgument, "")) == 2);
    CHECK(exit_code_for(Error(ErrorCode::NumericalFailure, "")) == 4);
    CHECK(exit_code_for(Error(ErrorCode::ParseError, "")) == 3);
    CHECK(exit_code_for(Error(ErrorCode::RunMismatch, "")) == 3);
    CHECK(predict_mode_from_string("forecast") == PredictMode::Forecast);
    CHECK(error_of([] { predict_mode_from_string("x"); }) == ErrorCode::ConfigError);
}

TEST_CASE("small synthetic pipeline") {
    const auto dir = testing::scratch_dir("app_pipe");
    const auto exp = small_experiment(dir);
    const auto ds = cmd_synth(exp);
    CHECK(ds.records.size() == 9);
    CHECK(fs::exists(dir / "data" / "current.json"));
    CHECK(fs::exists(dir / "data" / "wind_u.csv"));
    CHECK(fs::exists(dir / "data" / "manifest.json"));
    CHECK(read_text_file((dir / "data" / "drifters.csv").string()).rfind("# lagdrift run=" + exp.run_id, 0) == 0);

    SUBCASE("same seed gives identical dataset bodies") {
        const auto dir2 = testing::scratch_dir("app_pipe2");
        cmd_synth(small_experiment(dir2));
        for (const char* f : {"drifters.csv", "current_u.csv", "wind_v.csv"}) {
            CHECK(csv_body(dir / "data" / f) == csv_body(dir2 / "data" / f));
        }
    }

    CHECK(!fs::exists(dir / "out"));
    const auto summary = cmd_train(exp);
    CHECK(fs::exists(dir / "out" / "model.json"));
    CHECK(summary.epoch_loss.size() == 2);
    CHECK(csv_rows(dir / "out" / "train_loss.csv").size() == 2);
    CHECK(summary.training_drifters + summary.test_drifters == 9);
    const auto manifest = nlohmann::json::parse(read_text_file((dir / "out" / "split.json").string()));
    CHECK(manifest["provenance"]["run"] == exp.run_id);

    cmd_predict(exp, PredictMode::SingleStep);
    cmd_predict(exp, PredictMode::Forecast);
    const auto first_members = read_text_file((dir / "out" / "forecast_members.csv").string());
    CHECK(first_members.find("# model " + exp.model_path) != std::string::npos);
    const auto ev = cmd_evaluate(exp);
    CHECK(ev.model_used);
    CHECK(ev.drifters.size() == summary.test_drifters);
    CHECK(ev.fraction_blended_better >= 0.0);
    CHECK(ev.fraction_blended_better <= 1.0);
    for (const char* f : {"rmse.csv", "skill.csv", "similarity.csv", "rmse_histogram.csv", "summary.json"}) {
        CHECK(fs::exists(dir / "out" / f));
    }
    CHECK(csv_rows(dir / "out" / "rmse_histogram.csv").size() == 20);

    SUBCASE("reruns are identical") {
        cmd_predict(exp, PredictMode::Forecast);
        CHECK(read_text_file((dir / "out" / "forecast_members.csv").string()) == first_members);
    }
    SUBCASE("evaluation refuses outputs of another run") {
        RunOptions other;
        other.seed = 99;
        const auto exp99 = small_experiment(dir, "", other);
        CHECK(error_of([&] { cmd_evaluate(exp99); }) == ErrorCode::RunMismatch);
    }
    SUBCASE("no model means blended equals deterministic") {
        RunOptions base;
        base.baseline_only = true;
        const auto b = small_experiment(dir, "", base);
        cmd_predict(b, PredictMode::SingleStep);
        for (const auto& r : csv_rows(dir / "out" / "single_step.csv")) {
            CHECK(r[6] == r[8]);
            CHECK(r[7] == r[9]);
        }
        cmd_predict(b, PredictMode::Forecast);
        CHECK(read_text_file((dir / "out" / "forecast_members.csv").string()).find("# model none") !=
              std::string::npos);
        const auto e = cmd_evaluate(b);
        CHECK(!e.model_used);
        for (const auto& d : e.drifters) {
            CHECK(d.rmse_blended == d.rmse_deterministic);
            CHECK(d.skill_blended == d.skill_deterministic);
        }
        CHECK(e.fraction_blended_better == 0.0);
    }
}

TEST_CASE("training options") {
    const auto dir = testing::scratch_dir("app_train");
    auto text = std::string(kSmallConfig);
    text.replace(text.find("epochs = 2"), 10, "epochs = 1");
    write_text_file((dir / "exp.toml").string(), text);
    auto exp = make_experiment(Config::load((dir / "exp.toml").string()));
    cmd_synth(exp);
    cmd_train(exp);
    CHECK(csv_rows(dir / "out" / "train_loss.csv").size() == 1);

    write_text_file((dir / "exp.toml").string(), text + "resume = true\n");  // lands in [ensemble]
    CHECK(error_of([&] { make_experiment(Config::load((dir / "exp.toml").string())); }) ==
          ErrorCode::ConfigError);
    text.replace(text.find("epochs = 1"), 10, "epochs = 1\nresume = true");
    write_text_file((dir / "exp.toml").string(), text);
    exp = make_experiment(Config::load((dir / "exp.toml").string()));
    CHECK(exp.resume);
    cmd_train(exp);  // resumes from the saved model
    write_text_file(exp.model_path, "{\"format\": \"lagdrift-lstm\", \"version\": 1,");
    CHECK(error_of([&] { cmd_train(exp); }) == ErrorCode::ParseError);
}

TEST_CASE("zero-residual dataset") {
    const auto dir = testing::scratch_dir("app_zero");
    write_zero_residual_dataset(dir, 10, 192);
    write_text_file((dir / "exp.toml").string(), kZeroConfig);
    RunOptions base;
    base.baseline_only = true;
    const auto exp = make_experiment(Config::load((dir / "exp.toml").string()), base);

    SUBCASE("the deterministic model evaluated against its own tracks is perfect") {
        fs::create_directories(dir / "out");
        cmd_predict(exp, PredictMode::SingleStep);
        cmd_predict(exp, PredictMode::Forecast);
        const auto ev = cmd_evaluate(exp);
        REQUIRE(ev.drifters.size() == 2);
        for (const auto& d : ev.drifters) {
            CHECK(d.rmse_deterministic == 0.0);
            CHECK(d.skill_deterministic == 1.0);
            CHECK(d.skill_blended == d.skill_deterministic);
        }
    }
    SUBCASE("an ensemble of one with zero radius is the single integrated trajectory") {
        cmd_predict(exp, PredictMode::Forecast);
        const auto members = integrate::read_trajectories_csv(exp.output("forecast_members.csv"));
        const auto recs = dataio::load_drifters(exp.drifters_path);
        for (const auto& m : members) {
            const std::string id = m.drifter_id.substr(0, m.drifter_id.find('/'));
            const auto it = std::find_if(recs.begin(), recs.end(), [&](const auto& r) { return r.drifter_id == id; });
            REQUIRE(it != recs.end());
            const auto real = dataio::to_trajectory(*it);
            CHECK(m.positions == real.positions);
        }
    }
    SUBCASE("training drives the loss to zero") {
        // Adam converges slowly near a zero residual; a tiny net with many full-batch
        // epochs gets there in about two seconds.
        auto text = std::string(kZeroConfig);
        text.replace(text.find("hidden = 4"), 10, "hidden = 2\nepochs = 4000\nlearning_rate = 0.01");
        write_text_file((dir / "exp.toml").string(), text);
        const auto e = make_experiment(Config::load((dir / "exp.toml").string()));
        const auto s = cmd_train(e);
        MESSAGE("loss " << s.epoch_loss.front() << " -> " << s.epoch_loss.back());
        CHECK(s.epoch_loss.back() < 1e-6 * s.epoch_loss.front());
    }
}

TEST_CASE("paths resolve once against a relative config directory") {
    const auto dir = testing::scratch_dir("app_rel");
    const auto cwd = fs::current_path();
    fs::current_path(dir);
    write_text_file("cfg/exp.toml", "[paths]\ndataset = \"d\"\noutput = \"o\"\n");
    const auto e = make_experiment(Config::load("cfg/exp.toml"));
    fs::current_path(cwd);
    CHECK(e.dataset_dir == "cfg/d");
    CHECK(e.drifters_path == "cfg/d/drifters.csv");
    CHECK(e.current_path == "cfg/d/current.json");
    CHECK(e.model_path == "cfg/o/model.json");
}
