// Scenario runner for the speed-harmonization microsimulation.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "harmonizer/config_io.hpp"
#include "harmonizer/csv_io.hpp"
#include "harmonizer/experiment.hpp"
#include "harmonizer/scenario.hpp"
#include "harmonizer/sim_engine.hpp"
#include "harmonizer/traffic_state.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace harmonizer;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

void report_error(const std::string& type, const std::string& message) {
    std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
}

struct Globals {
    std::optional<std::string> config_file;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int jobs = 1;

    SimConfig config() const {
        if (!config_file) return SimConfig{};
        SimConfig c = load_config(*config_file);
        const auto report = validate_config(c);
        if (!report.runnable()) {
            std::string msg = *config_file + ":";
            for (const auto& e : report.errors()) msg += " " + e + ";";
            throw ConfigError(msg);
        }
        for (const auto& w : report.warnings()) std::cerr << "warning: " << w << "\n";
        return c;
    }
};

// "8:180" -> (8, 180)
std::pair<Scalar, Scalar> parse_pair(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError(std::string(what) + " expects A:B, got '" + text + "'");
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError(std::string(what) + " expects numbers, got '" + text + "'");
    }
}

struct TrajectoryArgs {
    std::string preset;
    std::string file;
    std::optional<Scalar> duration;
    std::optional<Scalar> base_speed;
    std::vector<std::string> oscillations;
    std::vector<std::string> stops;

    void add_to(CLI::App* app, bool allow_file) {
        app->add_option("--preset", preset, "Synthetic preset: moderate or heavy")
            ->check(CLI::IsMember({"moderate", "heavy"}));
        if (allow_file) app->add_option("--trajectory", file, "Leading trajectory CSV")->check(CLI::ExistingFile);
        app->add_option("--duration", duration, "Synthetic duration [s]");
        app->add_option("--base-speed", base_speed, "Synthetic base speed [m/s]");
        app->add_option("--osc", oscillations, "Oscillation AMPLITUDE:PERIOD (repeatable)");
        app->add_option("--stop", stops, "Stop event TIME:HOLD (repeatable)");
    }

    bool synthetic_overrides() const {
        return duration || base_speed || !oscillations.empty() || !stops.empty();
    }

    SyntheticSpec spec() const {
        SyntheticSpec spec = preset.empty() ? SyntheticSpec{} : *preset_by_name(preset);
        if (duration) spec.duration = *duration;
        if (base_speed) spec.base_speed = *base_speed;
        if (!oscillations.empty()) {
            spec.oscillations.clear();
            for (const auto& o : oscillations) {
                const auto [amp, period] = parse_pair(o, "--osc");
                spec.oscillations.push_back({amp, period});
            }
        }
        if (!stops.empty()) {
            spec.stop_events.clear();
            for (const auto& s : stops) {
                const auto [time, hold] = parse_pair(s, "--stop");
                spec.stop_events.push_back({time, hold});
            }
        }
        return spec;
    }

    LeadingTrajectory load(std::uint64_t seed) const {
        if (!file.empty())
            return with_input_file(file, [](std::istream& in) { return read_trajectory_csv(in); });
        return generate_synthetic_trajectory(spec(), seed);
    }
};

std::vector<std::uint64_t> seed_list(const std::vector<std::uint64_t>& explicit_seeds, int count,
                                     std::uint64_t first) {
    if (!explicit_seeds.empty()) return explicit_seeds;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    return seeds;
}

json read_json_file(const fs::path& path) {
    return with_input_file(path, [&](std::istream& in) {
        try {
            return json::parse(in);
        } catch (const json::exception& e) {
            throw CsvError(std::string("invalid JSON: ") + e.what());
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-layer speed harmonization in a mixed-autonomy platoon"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    Globals g;
    app.add_option("--config", g.config_file, "JSON config file (keys mirror SimConfig)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Base random seed");
    app.add_option("--out-dir", g.out_dir, "Output directory");
    app.add_option("--jobs", g.jobs, "Parallel runs")->check(CLI::PositiveNumber);

    // run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Baseline/controlled batch over penetrations and seeds");
    TrajectoryArgs run_traj;
    run_traj.add_to(run_cmd, true);
    std::string run_name;
    std::string run_field;
    std::vector<Scalar> penetrations{0.0, 4.0};
    std::vector<std::uint64_t> seeds;
    int n_seeds = 1;
    std::optional<int> stride;
    bool lane_changes = false;
    bool no_trajectories = false;
    Scalar field_dx = 0.0;
    Scalar field_dt = 0.0;
    run_cmd->add_option("--name", run_name, "Scenario name (output subdirectory)");
    run_cmd->add_option("--field", run_field, "Segment speed CSV (default: derive from the leader)")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--field-dx", field_dx, "Position offset applied to the field [m]");
    run_cmd->add_option("--field-dt", field_dt, "Time offset applied to the field [s]");
    run_cmd->add_option("--penetration", penetrations, "Penetration rates [%]")->delimiter(',');
    run_cmd->add_option("--seeds", seeds, "Explicit seed list")->delimiter(',');
    run_cmd->add_option("--n-seeds", n_seeds, "Number of consecutive seeds starting at --seed")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--stride", stride, "CSV decimation stride (1 = every step)")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--lane-changes", lane_changes, "Enable stochastic cut-ins and removals");
    run_cmd->add_flag("--no-trajectories", no_trajectories, "Skip the per-vehicle and time-space CSVs");

    // gen-traj ----------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("gen-traj", "Generate a synthetic leading trajectory CSV");
    TrajectoryArgs gen_traj;
    gen_traj.add_to(gen_cmd, false);
    std::string gen_out;
    gen_cmd->add_option("-o,--output", gen_out, "Output CSV (default <out-dir>/trajectory.csv)");

    // derive-field ------------------------------------------------------
    auto* derive_cmd = app.add_subcommand("derive-field", "Segment speeds from a leading trajectory");
    TrajectoryArgs derive_traj;
    derive_traj.add_to(derive_cmd, true);
    DeriveFieldOptions derive_opts;
    bool derive_platoon_extent = false;
    std::string derive_out;
    derive_cmd->add_option("--segment-length", derive_opts.segment_length, "Segment length [m]")
        ->check(CLI::PositiveNumber);
    derive_cmd->add_option("--update-period", derive_opts.update_period, "Update period [s]")
        ->check(CLI::PositiveNumber);
    derive_cmd->add_flag("--platoon-extent", derive_platoon_extent,
                         "Cover the initial platoon and the AV look-ahead window");
    derive_cmd->add_option("-o,--output", derive_out, "Output CSV (default <out-dir>/field.csv)");

    // plan-profile ------------------------------------------------------
    auto* plan_cmd = app.add_subcommand("plan-profile", "Windowed-mean target speed profile over a field");
    std::string plan_field;
    Scalar plan_time = 0.0;
    std::optional<Scalar> plan_from;
    std::optional<Scalar> plan_to;
    std::optional<Scalar> plan_window;
    Scalar plan_dx = kDefaultProfileStep;
    std::string plan_out;
    plan_cmd->add_option("--field", plan_field, "Segment speed CSV")->required()->check(CLI::ExistingFile);
    plan_cmd->add_option("--time", plan_time, "Field time [s]");
    plan_cmd->add_option("--from", plan_from, "Route start [m] (default field start)");
    plan_cmd->add_option("--to", plan_to, "Route end [m] (default field end)");
    plan_cmd->add_option("--window", plan_window, "Averaging window w [m] (default from config)");
    plan_cmd->add_option("--dx", plan_dx, "Profile spacing [m]")->check(CLI::PositiveNumber);
    plan_cmd->add_option("-o,--output", plan_out, "Output CSV (default stdout)");

    // compare -----------------------------------------------------------
    auto* compare_cmd = app.add_subcommand("compare", "Compare two metrics.json reports");
    std::string cmp_baseline;
    std::string cmp_controlled;
    bool cmp_json = false;
    compare_cmd->add_option("baseline", cmp_baseline, "Baseline metrics.json")->required()->check(CLI::ExistingFile);
    compare_cmd->add_option("controlled", cmp_controlled, "Controlled metrics.json")
        ->required()
        ->check(CLI::ExistingFile);
    compare_cmd->add_flag("--json", cmp_json, "Print the comparison as JSON");

    // metrics -----------------------------------------------------------
    auto* metrics_cmd = app.add_subcommand("metrics", "Recompute a metrics report from a full-rate trajectory CSV");
    std::string met_traj;
    std::string met_report;
    std::string met_out;
    metrics_cmd->add_option("--trajectories", met_traj, "Per-vehicle CSV written with --stride 1")
        ->required()
        ->check(CLI::ExistingFile);
    metrics_cmd->add_option("--report", met_report, "metrics.json supplying identity, config and events")
        ->required()
        ->check(CLI::ExistingFile);
    metrics_cmd->add_option("-o,--output", met_out, "Output JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return kExitUsage;
    }

    try {
        const fs::path out_dir = g.out_dir;

        if (*run_cmd) {
            if (!run_traj.file.empty() && (!run_traj.preset.empty() || run_traj.synthetic_overrides()))
                throw CLI::ValidationError("--trajectory excludes the synthetic options");
            Scenario scenario;
            if (!run_traj.file.empty()) {
                scenario.trajectory_file = run_traj.file;
                scenario.name = fs::path(run_traj.file).stem().string();
            } else {
                scenario.synthetic = run_traj.spec();
                scenario.name = run_traj.preset.empty() ? "synthetic" : run_traj.preset;
            }
            if (!run_name.empty()) scenario.name = run_name;
            if (!run_field.empty()) {
                scenario.field_file = run_field;
                scenario.field_sync = {field_dx, field_dt};
            }
            scenario.config = g.config();
            if (lane_changes && !scenario.config.lane_change) {
                LaneChangeParams lc;
                lc.target_count = scenario.config.platoon_size;
                scenario.config.lane_change = lc;
            }
            if (stride) scenario.config.output_stride = *stride;

            ExperimentOptions opts;
            opts.penetrations = penetrations;
            opts.seeds = seed_list(seeds, n_seeds, g.seed);
            opts.out_dir = out_dir;
            opts.jobs = g.jobs;
            opts.stride = scenario.config.output_stride;
            opts.write_trajectories = !no_trajectories;
            const auto summary = run_experiment(scenario, opts);
            if (!summary.table.empty()) std::cout << summary.table;
            std::cout << "wrote " << (out_dir / scenario.name).string() << "\n";
        } else if (*gen_cmd) {
            const auto traj = gen_traj.load(g.seed);
            validate_trajectory(traj);
            const fs::path path = gen_out.empty() ? out_dir / "trajectory.csv" : fs::path(gen_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            with_output_file(path, [&](std::ostream& out) { write_trajectory_csv(out, traj); });
            std::cout << "wrote " << path.string() << "\n";
        } else if (*derive_cmd) {
            const auto traj = derive_traj.load(g.seed);
            validate_trajectory(traj);
            const auto options = derive_platoon_extent ? derive_options_for(traj, g.config(), derive_opts) : derive_opts;
            const auto derived = derive_field_from_leader(traj, options);
            const fs::path path = derive_out.empty() ? out_dir / "field.csv" : fs::path(derive_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            with_output_file(path, [&](std::ostream& out) { write_segments_csv(out, derived.field.records()); });
            std::cout << "wrote " << path.string() << " (" << derived.field.segments().size() << " segments, "
                      << derived.borrowed_segments.size() << " borrowed, " << derived.filled_cells
                      << " filled cells)\n";
        } else if (*plan_cmd) {
            auto records = with_input_file(plan_field, [](std::istream& in) { return read_segments_csv(in); });
            const auto ingested = ingest_segments(records);
            for (const auto& w : ingested.warnings) std::cerr << "warning: " << w << "\n";
            const auto& field = ingested.field;
            const Scalar w = plan_window.value_or(g.config().controller.w);
            const auto profile = plan_target_profile(field, plan_time, plan_from.value_or(field.extent_begin()),
                                                     plan_to.value_or(field.extent_end()), w, plan_dx);
            if (plan_out.empty()) {
                write_profile_csv(std::cout, profile);
            } else {
                with_output_file(plan_out, [&](std::ostream& out) { write_profile_csv(out, profile); });
            }
        } else if (*compare_cmd) {
            const auto baseline = run_result_from_json(read_json_file(cmp_baseline));
            const auto controlled = run_result_from_json(read_json_file(cmp_controlled));
            const auto report = compare_runs(baseline, controlled);
            if (cmp_json) std::cout << comparison_to_json(report).dump(2) << "\n";
            else std::cout << format_comparison_table({report});
        } else if (*metrics_cmd) {
            const json source = read_json_file(met_report);
            const RunResult reference = run_result_from_json(source);
            auto raw = with_input_file(met_traj, [](std::istream& in) { return read_vehicle_csv(in); });
            if (raw.dt != reference.config.dt)
                throw CsvError(met_traj + ": row spacing " + format_number(raw.dt) + " s differs from dt " +
                               format_number(reference.config.dt) + " s (write it with --stride 1)");
            RunResult result = aggregate_metrics(std::move(raw), reference.config);
            result.identity = reference.identity;
            result.events = reference.events;
            const std::string text = run_result_to_json(result).dump(2) + "\n";
            if (met_out.empty()) std::cout << text;
            else with_output_file(met_out, [&](std::ostream& out) { out << text; });
        }
    } catch (const CLI::ValidationError& e) {
        report_error("usage", e.what());
        return kExitUsage;
    } catch (const ConfigError& e) {
        report_error("config", e.what());
        return kExitFailure;
    } catch (const CsvError& e) {
        report_error("io", e.what());
        return kExitFailure;
    } catch (const CollisionError& e) {
        report_error("collision", e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        report_error("runtime", e.what());
        return kExitFailure;
    }
    return 0;
}
