#include "harmonizer/experiment.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include "harmonizer/config_io.hpp"
#include "harmonizer/csv_io.hpp"
#include "harmonizer/sim_engine.hpp"

namespace harmonizer {

namespace fs = std::filesystem;
using nlohmann::json;

void Scenario::validate() const {
    if (trajectory_file.has_value() == synthetic.has_value())
        throw ExperimentError("scenario '" + name + "' needs exactly one trajectory source");
    const auto report = validate_config(config);
    if (!report.runnable()) {
        std::string msg = "scenario '" + name + "' has an invalid config:";
        for (const auto& e : report.errors()) msg += " " + e + ";";
        throw ExperimentError(msg);
    }
}

Scenario preset_scenario(const std::string& preset) {
    auto spec = preset_by_name(preset);
    if (!spec) throw ExperimentError("unknown preset '" + preset + "' (expected moderate or heavy)");
    Scenario scenario;
    scenario.name = preset;
    scenario.synthetic = *spec;
    return scenario;
}

DeriveFieldOptions derive_options_for(const LeadingTrajectory& traj, const SimConfig& config,
                                      DeriveFieldOptions base) {
    const auto& first = traj.samples.front();
    const Scalar pitch = std::max(2.0 * first.velocity, config.idm.s0) + config.vehicle_length;
    if (!base.x_begin)
        base.x_begin = first.position - pitch * static_cast<Scalar>(config.platoon_size) - base.segment_length;
    if (!base.x_end) base.x_end = traj.samples.back().position + config.controller.w;
    return base;
}

PreparedRun prepare_run(const Scenario& scenario, std::uint64_t seed) {
    scenario.validate();
    PreparedRun prepared;
    if (scenario.trajectory_file)
        prepared.trajectory = with_input_file(*scenario.trajectory_file, [](std::istream& in) { return read_trajectory_csv(in); });
    else
        prepared.trajectory = generate_synthetic_trajectory(*scenario.synthetic, seed);
    prepared.warnings = validate_trajectory(prepared.trajectory);

    if (scenario.field_file) {
        auto records = with_input_file(*scenario.field_file, [](std::istream& in) { return read_segments_csv(in); });
        auto ingested = ingest_segments(records, scenario.field_sync);
        prepared.warnings.insert(prepared.warnings.end(), ingested.warnings.begin(), ingested.warnings.end());
        prepared.field = std::make_shared<const SpeedField>(std::move(ingested.field));
    } else {
        auto derived = derive_field_from_leader(prepared.trajectory,
                                                derive_options_for(prepared.trajectory, scenario.config, scenario.derive));
        prepared.field = std::make_shared<const SpeedField>(std::move(derived.field));
    }
    return prepared;
}

RunResult run_scenario(const Scenario& scenario, Scalar penetration, std::uint64_t seed) {
    const PreparedRun prepared = prepare_run(scenario, seed);
    SimConfig config = scenario.config;
    config.penetration = penetration;
    config.seed = seed;
    RunOptions options;
    options.scenario = scenario.name;
    return run(prepared.trajectory, config, prepared.field, options);
}

std::string run_directory_name(Scalar penetration, std::uint64_t seed) {
    return "p" + format_number(penetration) + "_seed" + std::to_string(seed);
}

namespace {

void write_json(const fs::path& path, const json& doc) {
    with_output_file(path, [&](std::ostream& out) { out << doc.dump(2) << "\n"; });
}

json run_summary(const RunResult& run) {
    return {{"penetration", run.config.penetration},
            {"seed", run.identity.seed},
            {"distance_km", run.distance_km() ? json(*run.distance_km()) : json(nullptr)},
            {"mpg_avs", run.mpg_avs() ? json(*run.mpg_avs()) : json(nullptr)},
            {"mpg_total", run.mpg_total()},
            {"metrics_file", run_directory_name(run.config.penetration, run.identity.seed) + "/metrics.json"}};
}

}  // namespace

ExperimentSummary run_experiment(const Scenario& scenario, const ExperimentOptions& options) {
    scenario.validate();
    if (options.penetrations.empty() || options.seeds.empty())
        throw ExperimentError("experiment needs at least one penetration and one seed");

    const fs::path root = options.out_dir / scenario.name;
    fs::create_directories(root);
    save_config(scenario.config, root / "config.json");

    struct Task {
        Scalar penetration;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::uint64_t seed : options.seeds)
        for (Scalar p : options.penetrations) tasks.push_back({p, seed});

    std::vector<std::optional<RunResult>> results(tasks.size());
    std::vector<std::exception_ptr> failures(tasks.size());
    std::atomic<std::size_t> cursor{0};

    auto worker = [&] {
        for (std::size_t i = cursor++; i < tasks.size(); i = cursor++) {
            const auto& task = tasks[i];
            try {
                RunResult result = run_scenario(scenario, task.penetration, task.seed);
                const fs::path dir = root / run_directory_name(task.penetration, task.seed);
                fs::create_directories(dir);
                if (options.write_trajectories) {
                    with_output_file(dir / "trajectories.csv", [&](std::ostream& out) {
                        write_vehicle_csv(out, result.trajectories, result.config.energy, options.stride);
                    });
                    with_output_file(dir / "time_space.csv", [&](std::ostream& out) {
                        write_time_space_csv(out, result.trajectories, options.stride);
                    });
                }
                write_json(dir / "metrics.json", run_result_to_json(result));
                result.trajectories = {};
                results[i] = std::move(result);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };

    const auto n_threads = static_cast<std::size_t>(std::clamp<int>(options.jobs, 1, static_cast<int>(tasks.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!failures[i]) continue;
        std::string what = "unknown error";
        try {
            std::rethrow_exception(failures[i]);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        throw ExperimentError("run failed for scenario '" + scenario.name + "', penetration " +
                              format_number(tasks[i].penetration) + ", seed " + std::to_string(tasks[i].seed) + ": " +
                              what);
    }

    ExperimentSummary summary;
    for (auto& r : results) summary.runs.push_back(std::move(*r));

    for (const auto& baseline : summary.runs) {
        if (baseline.config.penetration != 0.0) continue;
        for (const auto& controlled : summary.runs)
            if (controlled.config.penetration > 0.0 && controlled.identity.seed == baseline.identity.seed)
                summary.comparisons.push_back(compare_runs(baseline, controlled));
    }
    if (summary.comparisons.size() > 1) summary.average = average_reports(summary.comparisons);

    json runs = json::array();
    for (const auto& r : summary.runs) runs.push_back(run_summary(r));
    json comparisons = json::array();
    for (const auto& c : summary.comparisons) comparisons.push_back(comparison_to_json(c));
    summary.report = {{"scenario", scenario.name},
                      {"runs", runs},
                      {"comparisons", comparisons},
                      {"average", summary.average ? comparison_to_json(*summary.average) : json(nullptr)}};
    write_json(root / "report.json", summary.report);

    if (!summary.comparisons.empty()) {
        summary.table = format_comparison_table(summary.comparisons, summary.average);
        with_output_file(root / "comparison.txt", [&](std::ostream& out) { out << summary.table; });
    }
    return summary;
}

}  // namespace harmonizer
