#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "harmonizer/csv_io.hpp"
#include "harmonizer/traffic_state.hpp"
#include "oracles.hpp"

using namespace harmonizer;

namespace {

std::vector<SegmentRecord> two_segments(double left, double right) {
    return {{0.0, 1000.0, 0.0, left}, {1000.0, 2000.0, 0.0, right}};
}

SpeedField make_field(const std::vector<SegmentRecord>& records) { return ingest_segments(records).field; }

}  // namespace

TEST_CASE("ingest_segments") {
    SUBCASE("two adjacent segments") {
        const auto r = ingest_segments(two_segments(10.0, 20.0));
        CHECK(r.warnings.empty());
        CHECK(r.field.segments().size() == 2);
        CHECK(r.field.extent_begin() == 0.0);
        CHECK(r.field.extent_end() == 2000.0);
    }
    SUBCASE("records arrive in any order") {
        const std::vector<SegmentRecord> shuffled{
            {1000.0, 2000.0, 60.0, 18.0}, {0.0, 1000.0, 0.0, 10.0}, {1000.0, 2000.0, 0.0, 20.0}};
        const auto f = make_field(shuffled);
        REQUIRE(f.segments().size() == 2);
        CHECK(f.segments()[1].times == std::vector<double>{0.0, 60.0});
        CHECK(f.segments()[1].speeds == std::vector<double>{20.0, 18.0});
    }
    SUBCASE("duplicate timestamp keeps the last write and warns") {
        auto recs = two_segments(10.0, 20.0);
        recs.push_back({0.0, 1000.0, 0.0, 12.0});
        const auto r = ingest_segments(recs);
        CHECK(r.warnings.size() == 1);
        CHECK(r.field.speed_at(500.0, 0.0) == 12.0);
        recs.push_back({0.0, 1000.0, 0.0, 11.0});
        CHECK(ingest_segments(recs).field.speed_at(500.0, 0.0) == 11.0);
    }
    SUBCASE("gap between segments names the hole") {
        try {
            ingest_segments({{0.0, 800.0, 0.0, 10.0}, {900.0, 1700.0, 0.0, 10.0}});
            FAIL("expected a gap error");
        } catch (const TrafficStateError& e) {
            CHECK(std::string(e.what()).find("[800, 900]") != std::string::npos);
        }
    }
    SUBCASE("overlap with a different geometry") {
        CHECK_THROWS_AS(ingest_segments({{0.0, 1000.0, 0.0, 10.0}, {500.0, 1500.0, 0.0, 10.0}}), TrafficStateError);
    }
    SUBCASE("bad records") {
        CHECK_THROWS_AS(ingest_segments({{0.0, 1000.0, 0.0, -1.0}}), TrafficStateError);
        CHECK_THROWS_AS(ingest_segments({{1000.0, 0.0, 0.0, 10.0}}), TrafficStateError);
    }
    SUBCASE("offsets shift position and time; zero offsets are the identity") {
        const auto recs = two_segments(10.0, 20.0);
        CHECK(ingest_segments(recs, {0.0, 0.0}).field == make_field(recs));
        const auto shifted = ingest_segments(recs, {500.0, 30.0}).field;
        CHECK(shifted.extent_begin() == 500.0);
        CHECK(shifted.segments()[0].times.front() == 30.0);
        CHECK_THROWS(shifted.snapshot(10.0));
        CHECK(shifted.speed_at(1000.0, 30.0) == 10.0);
    }
}

TEST_CASE("speed_at") {
    const auto f = make_field(two_segments(10.0, 20.0));
    CHECK(speed_at(f, 500.0, 0.0) == 10.0);
    CHECK(speed_at(f, 1500.0, 0.0) == 20.0);
    CHECK(speed_at(f, 1000.0, 0.0) == 15.0);
    CHECK(speed_at(f, 1250.0, 0.0) == 17.5);
    CHECK(speed_at(f, 5000.0, 0.0) == 20.0);
    CHECK(speed_at(f, -5000.0, 0.0) == 10.0);

    SUBCASE("piecewise constant in time") {
        auto recs = two_segments(10.0, 20.0);
        recs.push_back({0.0, 1000.0, 60.0, 30.0});
        const auto g = make_field(recs);
        CHECK(speed_at(g, 500.0, 59.9) == 10.0);
        CHECK(speed_at(g, 500.0, 60.0) == 30.0);
        CHECK(speed_at(g, 500.0, 1e6) == 30.0);
        CHECK_THROWS(g.snapshot(-1.0));
    }

    SUBCASE("never overshoots the stored speeds") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> spd(0.0, 35.0), len(10.0, 1000.0), x(-2000.0, 12000.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<SegmentRecord> recs;
            double start = 0.0;
            for (int k = 0; k < 10; ++k) {
                const double end = start + len(rng);
                recs.push_back({start, end, 0.0, spd(rng)});
                recs.push_back({start, end, 60.0, spd(rng)});
                start = end;
            }
            const auto g = make_field(recs);
            const double lo = g.min_speed(), hi = g.max_speed();
            for (int i = 0; i < 200; ++i) {
                const double v = g.speed_at(x(rng), (i % 2) * 60.0);
                REQUIRE(v >= lo);
                REQUIRE(v <= hi);
            }
        }
    }
}

TEST_CASE("fuse_pings") {
    const auto base = make_field(two_segments(30.0, 20.0));

    SUBCASE("no pings leaves the field unchanged") {
        CHECK(fuse_pings(base, {}, 100.0) == base);
    }
    SUBCASE("a fresh ping replaces the segment speed") {
        const auto f = fuse_pings(base, {{1, 100.0, 500.0, 10.0}}, 100.0);
        CHECK(f.speed_at(500.0, 100.0) == 10.0);
        CHECK(f.speed_at(1500.0, 100.0) == 20.0);
        // earlier snapshots stay untouched
        CHECK(f.speed_at(500.0, 99.0) == 30.0);
    }
    SUBCASE("a stale ping barely moves it") {
        FusionParams p;
        p.max_age = 1e9;
        const auto f = fuse_pings(base, {{1, 0.0, 500.0, 10.0}}, 1000.0, p);
        CHECK(std::abs(f.speed_at(500.0, 1000.0) - 30.0) < 1e-3);
    }
    SUBCASE("pings past max age are ignored") {
        const auto f = fuse_pings(base, {{1, 0.0, 500.0, 10.0}}, 121.0);
        CHECK(f.speed_at(500.0, 121.0) == 30.0);
    }
    SUBCASE("weight decays exponentially with age") {
        const auto f = fuse_pings(base, {{1, 40.0, 500.0, 10.0}}, 100.0);
        const double w = std::exp(-60.0 / 60.0);
        CHECK(f.speed_at(500.0, 100.0) == doctest::Approx((1.0 - w) * 30.0 + w * 10.0).epsilon(1e-14));
    }
    SUBCASE("convex combination of segment and ping mean") {
        std::mt19937_64 rng(29);
        std::uniform_real_distribution<double> spd(0.0, 35.0), pos(0.0, 2000.0), age(0.0, 150.0);
        for (int trial = 0; trial < 500; ++trial) {
            const double s0 = spd(rng), s1 = spd(rng);
            const auto field = make_field(two_segments(s0, s1));
            std::vector<VehiclePing> pings;
            for (int k = 0; k < 5; ++k) pings.push_back({k, 200.0 - age(rng), pos(rng), spd(rng)});
            const auto fused = fuse_pings(field, pings, 200.0);
            const auto snap = fused.snapshot(200.0);
            for (int seg = 0; seg < 2; ++seg) {
                double sum = 0.0;
                int n = 0;
                for (const auto& p : pings)
                    if (fused.segment_index(p.position) == seg && 200.0 - p.timestamp <= 120.0) {
                        sum += p.speed;
                        ++n;
                    }
                const double original = seg == 0 ? s0 : s1;
                const double mean = n ? sum / n : original;
                REQUIRE(snap[seg] >= std::min(original, mean) - 1e-12);
                REQUIRE(snap[seg] <= std::max(original, mean) + 1e-12);
            }
        }
    }
}

TEST_CASE("plan_target_profile") {
    SUBCASE("constant field") {
        const auto f = make_field(two_segments(22.0, 22.0));
        for (const auto& p : plan_target_profile(f, 0.0, -1000.0, 5000.0, 3000.0)) CHECK(p.target_speed == 22.0);
    }
    SUBCASE("step field") {
        // thin segments at the drop make the midpoint-linear field a 1 m ramp
        // centred on 5000, so window means have a closed form
        const auto f = make_field({{0.0, 4999.0, 0.0, 30.0},
                                   {4999.0, 5000.0, 0.0, 30.0},
                                   {5000.0, 5001.0, 0.0, 10.0},
                                   {5001.0, 10000.0, 0.0, 10.0}});
        const auto profile = plan_target_profile(f, 0.0, 0.0, 10000.0, 3000.0, 10.0);
        CHECK(profile.size() == 1001);
        const oracle::Profile ref{{2499.5, 4999.5, 5000.5, 7500.5}, {30.0, 30.0, 10.0, 10.0}};
        for (const auto& p : profile) {
            REQUIRE(oracle::close(p.target_speed, ref.window_mean(p.position, 3000.0), 1e-9));
            if (p.position < 2000.0) REQUIRE(p.target_speed == 30.0);
        }
        CHECK(profile[200].position == 2000.0);
        CHECK(profile[200].target_speed < 30.0);
        CHECK(profile[400].target_speed == doctest::Approx(50.0 / 3.0).epsilon(1e-12));  // x = 4000
        CHECK(profile[100].target_speed == 30.0);                                         // x = 1000
    }
    SUBCASE("a monotone field gives a monotone profile") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> drop(0.0, 5.0), len(50.0, 900.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<SegmentRecord> recs;
            double start = 0.0, v = 35.0;
            for (int k = 0; k < 12; ++k) {
                const double end = start + len(rng);
                recs.push_back({start, end, 0.0, v});
                v = std::max(0.0, v - drop(rng));
                start = end;
            }
            const auto profile = plan_target_profile(make_field(recs), 0.0, -500.0, start + 500.0, 1500.0, 7.0);
            for (std::size_t k = 1; k < profile.size(); ++k)
                REQUIRE(profile[k].target_speed <= profile[k - 1].target_speed + 1e-12);
        }
    }
    SUBCASE("bad arguments") {
        const auto f = make_field(two_segments(10.0, 20.0));
        CHECK_THROWS(plan_target_profile(f, 0.0, 100.0, 0.0, 3000.0));
        CHECK_THROWS(plan_target_profile(f, 0.0, 0.0, 100.0, 0.0));
        CHECK_THROWS(plan_target_profile(f, 0.0, 0.0, 100.0, 3000.0, 0.0));
    }
}

TEST_CASE("segment and ping CSV") {
    const std::vector<SegmentRecord> recs{{0.0, 804.67, 0.0, 12.5}, {804.67, 1609.34, 60.0, 0.1 + 0.2}};
    std::stringstream buf;
    write_segments_csv(buf, recs);
    CHECK(read_segments_csv(buf) == recs);

    std::stringstream pings;
    write_pings_csv(pings, {{7, 1.5, 300.25, 12.0}});
    const auto back = read_pings_csv(pings);
    REQUIRE(back.size() == 1);
    CHECK(back[0].vehicle_id == 7);
    CHECK(back[0].position == 300.25);

    std::stringstream bad("segment_start_m,segment_end_m,timestamp_s\n0,1,2\n");
    CHECK_THROWS_AS(read_segments_csv(bad), CsvError);
    std::stringstream junk("segment_start_m,segment_end_m,timestamp_s,speed_mps\n0,1,x,2\n");
    CHECK_THROWS_AS(read_segments_csv(junk), CsvError);
}
