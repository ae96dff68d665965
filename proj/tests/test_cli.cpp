#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "harmonizer/csv_io.hpp"
#include "harmonizer/energy_metrics.hpp"

using namespace harmonizer;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Sandbox {
   public:
    explicit Sandbox(const std::string& name) : dir_(fs::temp_directory_path() / ("harmonizer_cli_" + name)) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        std::ofstream(dir_ / "small.json") << R"({"platoon_size": 30})";
    }
    ~Sandbox() { fs::remove_all(dir_); }

    const fs::path& dir() const { return dir_; }

    Outcome cli(const std::string& args) const {
        const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && '" + HARMONIZER_CLI + "' " + args + " > '" +
                                out.string() + "' 2> '" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        Outcome o;
        o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        o.out = slurp(out);
        o.err = slurp(err);
        return o;
    }

   private:
    fs::path dir_;
};

const std::string kTiny = "--config small.json run --name tiny --duration 30 --base-speed 20 --osc 2:20";

}  // namespace

TEST_CASE("errors are JSON on stderr with distinct exit codes") {
    Sandbox box("errors");
    SUBCASE("usage") {
        const auto o = box.cli("run --penetration x");
        CHECK(o.code == 1);
        const auto doc = nlohmann::json::parse(o.err);
        CHECK(doc["error"]["type"] == "usage");
        CHECK(box.cli("").code == 1);
    }
    SUBCASE("bad config file") {
        std::ofstream(box.dir() / "bad.json") << R"({"dt": 0})";
        const auto o = box.cli("--config bad.json run --duration 10");
        CHECK(o.code == 2);
        const auto doc = nlohmann::json::parse(o.err);
        CHECK(doc["error"]["type"] == "config");
        CHECK(doc["error"]["message"].get<std::string>().find("dt must be positive") != std::string::npos);
    }
    SUBCASE("failing run names the scenario") {
        const auto o = box.cli("--config small.json run --duration -5");
        CHECK(o.code == 2);
        CHECK(nlohmann::json::parse(o.err)["error"]["message"].get<std::string>().find("seed 0") != std::string::npos);
    }
}

TEST_CASE("gen-traj and derive-field") {
    Sandbox box("gen");
    REQUIRE(box.cli("gen-traj --duration 60 --base-speed 15 -o leader.csv").code == 0);
    std::ifstream in(box.dir() / "leader.csv");
    const auto traj = read_trajectory_csv(in);
    CHECK(traj.size() == 601);
    for (const auto& s : traj.samples) REQUIRE(s.velocity == 15.0);

    REQUIRE(box.cli("derive-field --trajectory leader.csv --segment-length 300 -o field.csv").code == 0);
    std::ifstream fin(box.dir() / "field.csv");
    const auto records = read_segments_csv(fin);
    REQUIRE_FALSE(records.empty());
    for (const auto& r : records) CHECK(r.mean_speed == 15.0);
}

TEST_CASE("run writes a report and a comparison") {
    Sandbox box("run");
    const auto o = box.cli(kTiny + " --no-trajectories");
    REQUIRE(o.code == 0);
    CHECK(o.out.find("Mixed-autonomy") != std::string::npos);
    const auto root = box.dir() / "out" / "tiny";
    const auto report = nlohmann::json::parse(slurp(root / "report.json"));
    CHECK(report["runs"].size() == 2);
    CHECK(report["comparisons"].size() == 1);
    CHECK_FALSE(fs::exists(root / "p0_seed0" / "trajectories.csv"));

    const auto cmp = box.cli("compare out/tiny/p0_seed0/metrics.json out/tiny/p4_seed0/metrics.json --json");
    REQUIRE(cmp.code == 0);
    const auto doc = nlohmann::json::parse(cmp.out);
    CHECK(doc == report["comparisons"][0]);

    // a run against itself is all zeros
    const auto self = box.cli("compare out/tiny/p0_seed0/metrics.json out/tiny/p0_seed0/metrics.json --json");
    REQUIRE(self.code == 0);
    CHECK(nlohmann::json::parse(self.out)["delta_pct"]["mpg_total"] == 0.0);
}

TEST_CASE("full-rate trajectories reproduce the metrics report") {
    Sandbox box("roundtrip");
    REQUIRE(box.cli(kTiny + " --stride 1 --lane-changes").code == 0);
    for (const auto* run : {"p0_seed0", "p4_seed0"}) {
        const auto dir = fs::path("out/tiny") / run;
        const auto o = box.cli("metrics --trajectories " + (dir / "trajectories.csv").string() + " --report " +
                               (dir / "metrics.json").string() + " -o again.json");
        REQUIRE(o.code == 0);
        CHECK(slurp(box.dir() / "again.json") == slurp(box.dir() / dir / "metrics.json"));
    }
}

TEST_CASE("metrics refuses a decimated file") {
    Sandbox box("roundtrip_coarse");
    REQUIRE(box.cli(kTiny + " --stride 10").code == 0);
    const auto o =
        box.cli("metrics --trajectories out/tiny/p0_seed0/trajectories.csv --report out/tiny/p0_seed0/metrics.json");
    CHECK(o.code == 2);
}

TEST_CASE("plan-profile") {
    Sandbox box("plan");
    const std::string field = std::string(HARMONIZER_SOURCE_DIR) + "/scenarios/step_field.csv";
    const auto o = box.cli("plan-profile --field '" + field + "' --from 0 --to 10000 --dx 100 --window 3000");
    REQUIRE(o.code == 0);
    std::istringstream in(o.out);
    const auto profile = read_profile_csv(in);
    REQUIRE(profile.size() == 101);
    CHECK(profile[0].target_speed == 30.0);
    CHECK(profile[20].position == 2000.0);
    CHECK(profile[20].target_speed < 30.0);
    CHECK(profile[19].target_speed == 30.0);
    CHECK(profile.back().target_speed == 10.0);

    CHECK(box.cli("plan-profile --field missing.csv").code == 1);
}
