#include "lagdrift/integrate.hpp"
#include "lagdrift/util.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <json.hpp>

#include <cmath>

using namespace lagdrift;
using namespace lagdrift::integrate;
using testing::error_of;

namespace {

VelocityModel uniform(Vec2 c) {
    return [c](const GeoPoint&, double) { return c; };
}

// Uniform stream restricted to a lon/lat box.
VelocityModel boxed(Vec2 c, double lon_max) {
    return [c, lon_max](const GeoPoint& p, double) {
        if (p.lon > lon_max) throw Error(ErrorCode::OutOfDomain, "outside");
        return c;
    };
}

}  // namespace

TEST_CASE("rk4_step examples") {
    const GeoPoint p{-88.0, 27.0};
    const auto still = rk4_step(uniform({0, 0}), p, 0.0, 900.0);
    CHECK(still.position == p);
    CHECK(still.status == SampleStatus::Ok);

    const auto moved = rk4_step(uniform({1.0, 0.0}), {0.0, 0.0}, 0.0, 900.0);
    const double expected = 900.0 / (std::numbers::pi / 180.0 * 6371000.0);
    CHECK(moved.position.lon == doctest::Approx(expected).epsilon(1e-14));
    CHECK(moved.position.lon == doctest::Approx(8.0939e-3).epsilon(1e-4));
    CHECK(moved.position.lat == 0.0);

    const auto out = rk4_step(boxed({1.0, 0.0}, -88.001), p, 0.0, 900.0);
    CHECK(out.status == SampleStatus::LeftDomain);
    CHECK(out.position == p);

    const VelocityModel masked = [](const GeoPoint&, double) -> Vec2 {
        throw Error(ErrorCode::MaskedSupport, "coast");
    };
    CHECK(rk4_step(masked, p, 0.0, 900.0).status == SampleStatus::MaskedFlow);
}

TEST_CASE("rk4 closure error on a solid rotation is fourth order") {
    std::vector<double> err;
    for (int n : {24, 48, 96, 192}) err.push_back(oracles::rotation_closure_error(n));
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        const double ratio = err[i] / err[i + 1];
        MESSAGE("closure ratio " << ratio);
        CHECK(ratio >= 12.0);
        CHECK(ratio <= 20.0);
    }
}

TEST_CASE("integrate_trajectory examples") {
    const GeoPoint start{-88.0, 27.0};
    const auto single = integrate_trajectory(uniform({0.3, 0.1}), start, 100.0, 0);
    REQUIRE(single.size() == 1);
    CHECK(single.positions[0] == start);
    CHECK(single.times[0] == 100.0);

    const auto line = integrate_trajectory(uniform({0.0, 0.5}), start, 0.0, 4, 900.0, "d1");
    REQUIRE(line.size() == 5);
    CHECK(line.drifter_id == "d1");
    const double step = 0.5 * 900.0 / kMetersPerDegree;
    for (std::size_t k = 0; k < line.size(); ++k) {
        CHECK(line.positions[k].lon == start.lon);
        CHECK(line.positions[k].lat == doctest::Approx(start.lat + k * step).epsilon(1e-14));
        CHECK(line.times[k] == 900.0 * k);
        CHECK(line.velocities[k] == Vec2{0.0, 0.5});
    }
    CHECK(line.all_ok());

    const auto outside = integrate_trajectory(boxed({1, 0}, -90.0), start, 0.0, 3);
    REQUIRE(outside.size() == 4);
    for (auto s : outside.status) CHECK(s == SampleStatus::LeftDomain);
    for (const auto& p : outside.positions) CHECK(p == start);
}

TEST_CASE("leaving the domain freezes the position") {
    const GeoPoint start{-88.0, 27.0};
    const auto tr = integrate_trajectory(boxed({1.0, 0.0}, -87.95), start, 0.0, 20);
    std::size_t first_bad = tr.size();
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (tr.status[k] != SampleStatus::Ok) {
            first_bad = k;
            break;
        }
    }
    REQUIRE(first_bad < tr.size());
    REQUIRE(first_bad > 0);
    for (std::size_t k = first_bad; k < tr.size(); ++k) {
        CHECK(tr.status[k] == SampleStatus::LeftDomain);
        CHECK(tr.positions[k] == tr.positions[first_bad - 1]);
    }
}

TEST_CASE("seed_ensemble") {
    EnsembleSpec spec;
    spec.center = {-88.0, 27.0};
    spec.count = 1;
    spec.radius = 0.0;
    const auto one = seed_ensemble(spec);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == spec.center);

    spec.count = 50;
    spec.radius = 5000.0;
    spec.rng_seed = 42;
    CHECK(seed_ensemble(spec) == seed_ensemble(spec));
    spec.rng_seed = 43;
    const auto other = seed_ensemble(spec);
    spec.rng_seed = 42;
    CHECK(seed_ensemble(spec) != other);

    spec.count = 10000;
    double mean = 0.0, max_r = 0.0;
    for (const auto& p : seed_ensemble(spec)) {
        const double r = LocalFrame(spec.center).to_local(p).norm();
        mean += r;
        max_r = std::max(max_r, r);
    }
    mean /= spec.count;
    CHECK(mean == doctest::Approx(2.0 / 3.0 * spec.radius).epsilon(0.02));
    CHECK(max_r <= spec.radius * (1 + 1e-12));

    spec.radius = 10000.0;
    CHECK(error_of([&] { seed_ensemble(spec); }) == ErrorCode::InvalidArgument);
    spec.radius = 100.0;
    spec.count = 0;
    CHECK(error_of([&] { seed_ensemble(spec); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("median_trajectory") {
    const GeoPoint start{-88.0, 27.0};
    const auto a = integrate_trajectory(uniform({0.4, 0.0}), start, 0.0, 6);
    CHECK(median_trajectory({a}).positions == a.positions);

    SUBCASE("three parallel tracks") {
        const auto lo = integrate_trajectory(uniform({0.4, 0.0}), {start.lon, start.lat - 0.1}, 0.0, 6);
        const auto hi = integrate_trajectory(uniform({0.4, 0.0}), {start.lon, start.lat + 0.1}, 0.0, 6);
        const auto med = median_trajectory({hi, a, lo});
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(med.positions[k].lat == a.positions[k].lat);
            CHECK(med.positions[k].lon == doctest::Approx(a.positions[k].lon).epsilon(1e-3));
        }
    }
    SUBCASE("mirrored pairs about a center path") {
        Trajectory center;
        std::vector<Trajectory> members;
        for (int k = 0; k < 5; ++k) center.push_back(k * 900.0, {-88.0 + 0.01 * k, 27.0 + 0.02 * k}, {}, SampleStatus::Ok);
        for (double off : {0.05, 0.13, 0.2}) {
            Trajectory plus, minus;
            for (std::size_t k = 0; k < center.size(); ++k) {
                const GeoPoint c = center.positions[k];
                plus.push_back(center.times[k], {c.lon + off, c.lat - off * 0.5}, {}, SampleStatus::Ok);
                minus.push_back(center.times[k], {c.lon - off, c.lat + off * 0.5}, {}, SampleStatus::Ok);
            }
            members.push_back(plus);
            members.push_back(minus);
        }
        const auto med = median_trajectory(members);
        for (std::size_t k = 0; k < center.size(); ++k) {
            CHECK(med.positions[k].lon == doctest::Approx(center.positions[k].lon).epsilon(1e-12));
            CHECK(med.positions[k].lat == doctest::Approx(center.positions[k].lat).epsilon(1e-12));
        }
    }
    SUBCASE("flags samples where fewer than half the members are ok") {
        const auto bad = integrate_trajectory(boxed({1.0, 0.0}, -87.97), start, 0.0, 6);
        const auto med = median_trajectory({bad, bad, a});
        CHECK(med.status.front() == SampleStatus::Ok);
        CHECK(med.status.back() == SampleStatus::LeftDomain);
    }
    CHECK(error_of([] { median_trajectory({}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("ensemble integration matches member-by-member runs for any thread count") {
    EnsembleSpec spec{{-88.0, 27.0}, 3000.0, 7, 5};
    const auto starts = seed_ensemble(spec);
    const auto model = oracles::degree_rotation({-88.2, 27.1}, 1e-5);
    const MemberFactory factory = [&](std::size_t) { return MemberModel{model, {}}; };
    const auto serial = integrate_ensemble(factory, starts, 0.0, 30, 900.0, "e/", 1);
    const auto parallel = integrate_ensemble(factory, starts, 0.0, 30, 900.0, "e/", 4);
    REQUIRE(serial.size() == starts.size());
    for (std::size_t m = 0; m < starts.size(); ++m) {
        const auto solo = integrate_trajectory(model, starts[m], 0.0, 30, 900.0);
        CHECK(serial[m].positions == solo.positions);
        CHECK(parallel[m].positions == solo.positions);
        CHECK(serial[m].drifter_id == "e/m" + std::to_string(m));
    }
}

TEST_CASE("trajectory CSV and GeoJSON output") {
    const auto dir = testing::scratch_dir("traj_io");
    auto a = integrate_trajectory(uniform({0.2, -0.1}), {-88.0, 27.0}, 1453248000.0, 5, 900.0, "a");
    auto b = integrate_trajectory(boxed({1.0, 0.0}, -87.98), {-88.0, 27.5}, 1453248000.0, 5, 900.0, "b");
    const std::string csv = (dir / "t.csv").string();
    write_trajectories_csv(csv, {a, b}, {"lagdrift run=abc seed=1"});
    CHECK(read_text_file(csv).rfind("# lagdrift run=abc seed=1\n", 0) == 0);
    const auto back = read_trajectories_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[0].drifter_id == "a");
    CHECK(back[0].positions == a.positions);
    CHECK(back[0].times == a.times);
    CHECK(back[1].status == b.status);

    write_trajectories_geojson((dir / "t.geojson").string(), {a, b});
    const auto j = nlohmann::json::parse(read_text_file((dir / "t.geojson").string()));
    CHECK(j["type"] == "FeatureCollection");
    CHECK(j["features"].size() == 2);
    CHECK(j["features"][0]["geometry"]["type"] == "LineString");
    CHECK(j["features"][0]["geometry"]["coordinates"].size() == a.size());
}
