#ifndef HARMONIZER_EXPERIMENT_HPP
#define HARMONIZER_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harmonizer/core_types.hpp"
#include "harmonizer/energy_metrics.hpp"
#include "harmonizer/scenario.hpp"
#include "harmonizer/traffic_state.hpp"

namespace harmonizer {

// A leading trajectory and a traffic-state source plus the base config.
// Exactly one trajectory source and one field source must be set; a missing
// field file means "derive from the leader".
struct Scenario {
    std::string name = "custom";
    std::optional<std::filesystem::path> trajectory_file;
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::filesystem::path> field_file;
    IngestOptions field_sync;
    DeriveFieldOptions derive;
    SimConfig config;

    void validate() const;
};

Scenario preset_scenario(const std::string& preset);

struct PreparedRun {
    LeadingTrajectory trajectory;
    std::shared_ptr<const SpeedField> field;
    std::vector<std::string> warnings;
};

// Loads or generates the leader for `seed` and builds the matching field.
PreparedRun prepare_run(const Scenario& scenario, std::uint64_t seed);

// Field extent that covers the initial platoon and every AV look-ahead window.
DeriveFieldOptions derive_options_for(const LeadingTrajectory& traj, const SimConfig& config,
                                      DeriveFieldOptions base = {});

RunResult run_scenario(const Scenario& scenario, Scalar penetration, std::uint64_t seed);

struct ExperimentOptions {
    std::vector<Scalar> penetrations{0.0, 4.0};
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out_dir = "out";
    int jobs = 1;
    int stride = 10;
    bool write_trajectories = true;
};

struct ExperimentSummary {
    std::vector<RunResult> runs;  // trajectories dropped after export
    std::vector<ComparisonReport> comparisons;
    std::optional<ComparisonReport> average;
    nlohmann::json report;
    std::string table;
};

class ExperimentError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Runs the (penetration x seed) cross product and writes per-run CSV/JSON,
// report.json and comparison.txt under out_dir/<scenario>/.
ExperimentSummary run_experiment(const Scenario& scenario, const ExperimentOptions& options);

std::string run_directory_name(Scalar penetration, std::uint64_t seed);

}  // namespace harmonizer

#endif  // HARMONIZER_EXPERIMENT_HPP
