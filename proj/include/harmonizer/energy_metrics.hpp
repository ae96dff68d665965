#ifndef HARMONIZER_ENERGY_METRICS_HPP
#define HARMONIZER_ENERGY_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "harmonizer/core_types.hpp"

namespace harmonizer {

inline constexpr Scalar kMetersPerMile = 1609.344;

// Fuel mass rate [g/s] of the fitted polynomial model, floored at beta.
template <typename T>
T fuel_rate(T v, T a, const EnergyParams& p) {
    using std::max;
    const T a_pos = max(a, T(0));
    const T f = T(p.C0) + T(p.C1) * v + T(p.C2) * v * v + T(p.C3) * v * v * v + T(p.p0) * a + T(p.p1) * a * v +
                T(p.p2) * a * v * v + T(p.q0) * a_pos * a_pos + T(p.q1) * a_pos * a_pos * v;
    return max(f, T(p.beta));
}

// Miles per gallon; 0 for zero distance, throws for non-positive fuel.
Scalar mpg(Scalar distance_m, Scalar fuel_g, Scalar grams_per_gallon = EnergyParams{}.grams_per_gallon);

Scalar percent_delta(Scalar baseline, Scalar controlled);

// ---------------------------------------------------------------------------
// Raw per-vehicle traces produced by the simulator (one sample per step).

struct TraceSample {
    Scalar position = 0.0;
    Scalar speed = 0.0;
    Scalar accel = 0.0;
    Scalar gap = 0.0;       // NaN for the leader
    Scalar time_gap = 0.0;  // NaN for the leader
};

struct VehicleTrace {
    int id = 0;
    VehicleKind kind = VehicleKind::Human;
    bool is_leader = false;
    std::int64_t first_step = 0;
    std::vector<TraceSample> samples;
};

struct RawTrajectories {
    Scalar dt = 0.1;
    std::vector<VehicleTrace> vehicles;  // leader (if present) first

    const VehicleTrace* find(int id) const;
};

struct Histogram {
    Scalar lower = 0.0;
    Scalar bin_width = 1.0;
    Eigen::VectorXi counts;
    long underflow = 0;
    long overflow = 0;

    Histogram() = default;
    Histogram(Scalar lower, Scalar upper, Scalar bin_width);
    void add(Scalar value);
    long total() const;
};

struct ClassMetrics {
    int vehicles = 0;
    Scalar total_distance_m = 0.0;
    Scalar total_fuel_g = 0.0;
    Scalar mean_distance_km = 0.0;
    Scalar mpg = 0.0;
    Histogram gap_hist{0.0, 100.0, 2.0};
    Histogram time_gap_hist{0.0, 10.0, 0.2};
    Scalar time_gap_mean = 0.0;
    Scalar time_gap_p95 = 0.0;
    Scalar min_time_gap = 0.0;
    Scalar min_gap = 0.0;
};

struct VehicleSummary {
    int id = 0;
    VehicleKind kind = VehicleKind::Human;
    Scalar distance_m = 0.0;
    Scalar fuel_g = 0.0;
    std::int64_t steps = 0;
    bool full_lifetime = true;  // present from the first to the last step
};

struct ScenarioIdentity {
    std::string scenario;
    std::uint64_t trajectory_fingerprint = 0;
    int platoon_size = 0;
    std::uint64_t seed = 0;

    bool same_scenario(const ScenarioIdentity& other) const {
        return scenario == other.scenario && trajectory_fingerprint == other.trajectory_fingerprint &&
               platoon_size == other.platoon_size && seed == other.seed;
    }
};

struct SimEvent {
    Scalar time = 0.0;
    std::string what;

    bool operator==(const SimEvent&) const = default;
};

struct RunResult {
    ScenarioIdentity identity;
    SimConfig config;
    RawTrajectories trajectories;  // may be empty when reloaded from a report
    std::vector<VehicleSummary> vehicles;
    std::vector<SimEvent> events;

    std::optional<ClassMetrics> automated;  // absent without AVs
    ClassMetrics human;
    ClassMetrics total;

    // Mean distance of the automated vehicles [km]; absent without AVs.
    std::optional<Scalar> distance_km() const;
    std::optional<Scalar> mpg_avs() const;
    Scalar mpg_total() const { return total.mpg; }

    const VehicleSummary* find_vehicle(int id) const;
};

// Per-vehicle fuel over the trace [g]: sum of fuel_rate * dt over every step.
Scalar trace_fuel(const VehicleTrace& trace, Scalar dt, const EnergyParams& p);

RunResult aggregate_metrics(RawTrajectories run, const SimConfig& config);

// Pooled speed standard deviation over all samples of the listed vehicle ids.
Scalar pooled_speed_std(const RawTrajectories& run, const std::vector<int>& ids);
Scalar speed_std(const VehicleTrace& trace);

// ---------------------------------------------------------------------------

struct ComparisonRow {
    Scalar distance_km = 0.0;
    std::optional<Scalar> mpg_avs;
    Scalar mpg_total = 0.0;
};

struct ComparisonReport {
    ScenarioIdentity identity;
    Scalar penetration = 0.0;
    ComparisonRow baseline;    // distance and MPG of the AV slots while human-driven
    ComparisonRow controlled;
    Scalar delta_distance_pct = 0.0;
    std::optional<Scalar> delta_mpg_avs_pct;  // controlled AV MPG vs baseline total MPG
    Scalar delta_mpg_total_pct = 0.0;
};

class ComparisonError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

ComparisonReport compare_runs(const RunResult& baseline, const RunResult& controlled);

// Mean of each column; mirrors an "Average" row.
ComparisonReport average_reports(const std::vector<ComparisonReport>& reports);

// Reports in JSON (fixed field names) and as an aligned text table.
nlohmann::json run_result_to_json(const RunResult& run);
RunResult run_result_from_json(const nlohmann::json& doc);
nlohmann::json comparison_to_json(const ComparisonReport& report);
std::string format_comparison_table(const std::vector<ComparisonReport>& rows,
                                    const std::optional<ComparisonReport>& average = std::nullopt);

}  // namespace harmonizer

#endif  // HARMONIZER_ENERGY_METRICS_HPP
