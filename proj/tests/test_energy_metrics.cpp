#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "harmonizer/energy_metrics.hpp"
#include "oracles.hpp"

using namespace harmonizer;

namespace {

// Constant-speed trace with `steps` updates after the initial sample.
VehicleTrace cruise(int id, VehicleKind kind, double v, long steps, double dt, double gap = 50.0) {
    VehicleTrace t;
    t.id = id;
    t.kind = kind;
    for (long k = 0; k <= steps; ++k)
        t.samples.push_back({v * dt * static_cast<double>(k), v, 0.0, gap, gap / std::max(v, 0.1)});
    return t;
}

RunResult fake_run(std::vector<VehicleTrace> traces, double dt, std::uint64_t seed = 1) {
    RawTrajectories raw;
    raw.dt = dt;
    raw.vehicles = std::move(traces);
    SimConfig config;
    config.seed = seed;
    auto r = aggregate_metrics(std::move(raw), config);
    r.identity.scenario = "unit";
    return r;
}

}  // namespace

TEST_CASE("fuel_rate") {
    const EnergyParams p;
    CHECK(fuel_rate(0.0, 0.0, p) == 0.14631965);
    CHECK(fuel_rate(10.0, -3.0, p) == 0.01311175);
    CHECK(fuel_rate(30.0, 0.0, p) == doctest::Approx(0.14631965 + 30 * 0.01217904 + 27000 * 0.00002743).epsilon(1e-14));
    CHECK(fuel_rate(30.0, 0.0, p) == doctest::Approx(1.2523).epsilon(1e-4));

    SUBCASE("matches the oracle and never drops below beta") {
        std::mt19937_64 rng(37);
        std::uniform_real_distribution<double> v(0.0, 45.0), a(-5.0, 3.0);
        for (int i = 0; i < 10000; ++i) {
            const double vv = v(rng), aa = a(rng);
            const double f = fuel_rate(vv, aa, p);
            REQUIRE(oracle::close(f, oracle::fuel(vv, aa), 1e-12));
            REQUIRE(f >= p.beta);
        }
    }
    SUBCASE("non-decreasing in acceleration on [0, 45] m/s") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> v(0.0, 45.0), a(-5.0, 3.0), d(0.0, 1.0);
        for (int i = 0; i < 10000; ++i) {
            const double vv = v(rng), aa = a(rng);
            REQUIRE(fuel_rate(vv, aa + d(rng), p) >= fuel_rate(vv, aa, p));
        }
    }
}

TEST_CASE("mpg") {
    CHECK(mpg(0.0, 10.0) == 0.0);
    CHECK_THROWS(mpg(100.0, 0.0));
    CHECK(mpg(1000.0, 2.0) == doctest::Approx(mpg(2000.0, 4.0)).epsilon(1e-15));

    const double fuel = fuel_rate(30.0, 0.0, EnergyParams{}) * 3600.0;
    CHECK(fuel == doctest::Approx(4508.3).epsilon(1e-4));
    CHECK(mpg(108000.0, fuel) == doctest::Approx(oracle::mpg(108000.0, fuel)).epsilon(1e-14));
    CHECK(std::abs(mpg(108000.0, fuel) - 41.5) < 0.1);
}

TEST_CASE("percent_delta") {
    CHECK(percent_delta(13.71, 13.60) == doctest::Approx(-0.80).epsilon(0.005));
    CHECK(std::round(percent_delta(13.71, 13.60) * 100) / 100 == -0.80);
    CHECK(std::round(percent_delta(45.41, 52.76) * 100) / 100 == 16.19);
    CHECK(percent_delta(10.0, 10.0) == 0.0);
}

TEST_CASE("aggregate_metrics") {
    SUBCASE("single vehicle at constant speed") {
        const auto r = fake_run({cruise(1, VehicleKind::Human, 30.0, 36000, 0.1)}, 0.1);
        const double distance = 30.0 * 0.1 * 36000;
        CHECK(r.total.total_distance_m == doctest::Approx(distance).epsilon(1e-12));
        CHECK(r.vehicles[0].fuel_g == doctest::Approx(36000 * 0.1 * oracle::fuel(30.0, 0.0)).epsilon(1e-9));
        CHECK(r.mpg_total() == doctest::Approx(oracle::mpg(distance, 3600.0 * oracle::fuel(30.0, 0.0))).epsilon(1e-9));
        CHECK_FALSE(r.automated.has_value());
        CHECK_FALSE(r.distance_km().has_value());
        CHECK_FALSE(r.mpg_avs().has_value());
    }
    SUBCASE("two identical vehicles match one") {
        const auto one = fake_run({cruise(1, VehicleKind::Human, 20.0, 600, 0.1)}, 0.1);
        const auto two = fake_run({cruise(1, VehicleKind::Human, 20.0, 600, 0.1), cruise(2, VehicleKind::Human, 20.0, 600, 0.1)}, 0.1);
        CHECK(two.mpg_total() == doctest::Approx(one.mpg_total()).epsilon(1e-14));
        CHECK(two.total.total_distance_m == doctest::Approx(2 * one.total.total_distance_m));
    }
    SUBCASE("leader is excluded and classes are split") {
        auto leader = cruise(0, VehicleKind::Human, 5.0, 100, 0.1);
        leader.is_leader = true;
        const auto r = fake_run({leader, cruise(1, VehicleKind::Human, 20.0, 100, 0.1, 40.0),
                                 cruise(2, VehicleKind::Automated, 10.0, 100, 0.1, 40.0)},
                                0.1);
        CHECK(r.vehicles.size() == 2);
        CHECK(r.total.vehicles == 2);
        REQUIRE(r.automated.has_value());
        CHECK(r.automated->vehicles == 1);
        CHECK(*r.distance_km() == doctest::Approx(0.1));
        CHECK(r.human.time_gap_mean == doctest::Approx(2.0));
        CHECK(r.automated->time_gap_mean == doctest::Approx(4.0));
        CHECK(r.total.total_distance_m == doctest::Approx(r.human.total_distance_m + r.automated->total_distance_m));
    }
    SUBCASE("fuel is the sum of fuel_rate * dt over steps") {
        std::mt19937_64 rng(43);
        std::uniform_real_distribution<double> v(0.0, 35.0), a(-3.0, 2.0);
        VehicleTrace t;
        t.id = 1;
        double x = 0.0, sum = 0.0;
        for (int k = 0; k <= 5000; ++k) {
            const double vv = v(rng), aa = a(rng);
            x += vv * 0.1;
            t.samples.push_back({x, vv, aa, 30.0, 1.5});
            if (k > 0) sum += oracle::fuel(vv, aa) * 0.1;
        }
        const auto r = fake_run({t}, 0.1);
        CHECK(r.total.total_fuel_g == doctest::Approx(sum).epsilon(1e-9));
    }
    SUBCASE("histograms and percentiles") {
        VehicleTrace t;
        t.id = 1;
        // 100 samples with time gaps 0.05, 0.15, ..., 9.95
        for (int k = 0; k < 100; ++k) {
            const double h = 0.05 + 0.1 * k;
            t.samples.push_back({static_cast<double>(k), 10.0, 0.0, 10.0 * h, h});
        }
        const auto r = fake_run({t}, 0.1);
        CHECK(r.total.time_gap_p95 == doctest::Approx(9.45));  // 95th of 100 by nearest rank
        CHECK(r.total.min_time_gap == doctest::Approx(0.05));
        CHECK(r.total.time_gap_hist.total() == 100);
        CHECK(r.total.time_gap_hist.counts.size() == 50);
        CHECK(r.total.time_gap_hist.counts[0] == 2);
        CHECK(r.total.gap_hist.counts.size() == 50);
        CHECK(r.total.gap_hist.overflow == 0);
    }
}

TEST_CASE("histogram edges") {
    Histogram h(0.0, 10.0, 2.0);
    CHECK(h.counts.size() == 5);
    h.add(-0.1);
    h.add(0.0);
    h.add(1.999);
    h.add(2.0);
    h.add(9.999);
    h.add(10.0);
    CHECK(h.underflow == 1);
    CHECK(h.counts[0] == 2);
    CHECK(h.counts[1] == 1);
    CHECK(h.counts[4] == 1);
    CHECK(h.overflow == 1);
    CHECK(h.total() == 6);
}

TEST_CASE("speed spread") {
    VehicleTrace t;
    for (double v : {10.0, 20.0, 10.0, 20.0}) t.samples.push_back({0.0, v, 0.0, 0.0, 0.0});
    CHECK(speed_std(t) == doctest::Approx(5.0));
    RawTrajectories raw;
    t.id = 3;
    raw.vehicles.push_back(t);
    auto u = t;
    u.id = 4;
    for (auto& s : u.samples) s.speed += 10.0;
    raw.vehicles.push_back(u);
    // pooled over {10,20,10,20,20,30,20,30}: mean 20, variance 50
    CHECK(pooled_speed_std(raw, {3, 4}) == doctest::Approx(std::sqrt(50.0)));
    CHECK(pooled_speed_std(raw, {3}) == doctest::Approx(5.0));
}

TEST_CASE("compare_runs") {
    const auto humans = [](double v_av) {
        return std::vector<VehicleTrace>{cruise(1, VehicleKind::Human, 20.0, 1000, 0.1),
                                         cruise(2, VehicleKind::Automated, v_av, 1000, 0.1)};
    };
    auto base_traces = humans(20.0);
    base_traces[1].kind = VehicleKind::Human;
    const auto baseline = fake_run(base_traces, 0.1);
    const auto controlled = fake_run(humans(18.0), 0.1);

    SUBCASE("identity comparison") {
        const auto self = compare_runs(baseline, baseline);
        CHECK(self.delta_distance_pct == 0.0);
        CHECK(self.delta_mpg_total_pct == 0.0);
        CHECK_FALSE(self.delta_mpg_avs_pct.has_value());
    }
    SUBCASE("deltas recompute from the absolutes") {
        const auto r = compare_runs(baseline, controlled);
        CHECK(r.baseline.distance_km == doctest::Approx(2.0));
        CHECK(r.controlled.distance_km == doctest::Approx(1.8));
        CHECK(r.delta_distance_pct == doctest::Approx(percent_delta(r.baseline.distance_km, r.controlled.distance_km)));
        CHECK(r.delta_distance_pct == doctest::Approx(-10.0));
        REQUIRE(r.delta_mpg_avs_pct.has_value());
        CHECK(*r.delta_mpg_avs_pct == doctest::Approx(percent_delta(r.baseline.mpg_total, *r.controlled.mpg_avs)));
        CHECK(r.delta_mpg_total_pct == doctest::Approx(percent_delta(baseline.mpg_total(), controlled.mpg_total())));

        const auto table = format_comparison_table({r});
        CHECK(table.find("Human-driven") != std::string::npos);
        CHECK(table.find("Mixed-autonomy") != std::string::npos);
        CHECK(table.find("(-10.00%)") != std::string::npos);

        const auto doc = comparison_to_json(r);
        CHECK(doc.at("delta_pct").at("distance_km").get<double>() == r.delta_distance_pct);
    }
    SUBCASE("mismatched scenario") {
        auto other = controlled;
        other.identity.seed = 99;
        CHECK_THROWS_AS(compare_runs(baseline, other), ComparisonError);
        other = controlled;
        other.identity.trajectory_fingerprint = 5;
        CHECK_THROWS_AS(compare_runs(baseline, other), ComparisonError);
    }
    SUBCASE("average row is the mean of the rows") {
        auto a = compare_runs(baseline, controlled);
        auto b = a;
        b.delta_mpg_total_pct = a.delta_mpg_total_pct + 4.0;
        const auto avg = average_reports({a, b});
        CHECK(avg.delta_mpg_total_pct == doctest::Approx(a.delta_mpg_total_pct + 2.0));
        CHECK(format_comparison_table({a, b}, avg).find("Average") != std::string::npos);
    }
}

TEST_CASE("run result JSON round-trip") {
    const auto r = fake_run({cruise(1, VehicleKind::Human, 20.0, 100, 0.1), cruise(2, VehicleKind::Automated, 19.0, 100, 0.1)}, 0.1);
    const auto doc = run_result_to_json(r);
    for (const char* key : {"distance_km", "mpg_avs", "mpg_total"}) CHECK(doc.contains(key));
    const auto back = run_result_from_json(doc);
    CHECK(run_result_to_json(back) == doc);
    CHECK(back.mpg_total() == r.mpg_total());
}
