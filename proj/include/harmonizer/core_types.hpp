#ifndef HARMONIZER_CORE_TYPES_HPP
#define HARMONIZER_CORE_TYPES_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace harmonizer {

using Scalar = double;

enum class VehicleKind : int { Human = 0, Automated = 1 };

std::string to_string(VehicleKind kind);
VehicleKind kind_from_string(const std::string& text);

// Kinematic state of one platoon member. Positions increase downstream.
struct VehicleState {
    int id = 0;
    Scalar position = 0.0;      // [m]
    Scalar velocity = 0.0;      // [m/s]
    Scalar acceleration = 0.0;  // [m/s^2], realized over the last step
    VehicleKind kind = VehicleKind::Human;

    bool operator==(const VehicleState&) const = default;
};

// Intelligent Driver Model parameters. v0 is read as m/s.
struct IdmParams {
    Scalar v0 = 45.0;
    Scalar T = 1.0;
    Scalar a = 1.3;
    Scalar b = 2.0;
    Scalar delta = 4.0;
    Scalar s0 = 2.0;
    Scalar noise_std = 0.3;

    bool operator==(const IdmParams&) const = default;
};

// Two-layer speed controller: gains and safety margins.
struct ControllerParams {
    Scalar kp = 2.0;
    Scalar kd = 0.5;
    Scalar h_des = 2.0;   // [s]
    Scalar w = 3000.0;    // [m]
    Scalar s_min = 5.0;   // [m]
    Scalar h_min = 0.5;   // [s]
    Scalar tau_s = 5.0;   // [s]

    bool operator==(const ControllerParams&) const = default;
};

// Fitted polynomial fuel model (RAV4 prototype), zero road grade.
// Fuel rates are interpreted as grams per second.
struct EnergyParams {
    Scalar C0 = 0.14631965;
    Scalar C1 = 0.01217904;
    Scalar C2 = 0.0;
    Scalar C3 = 0.00002743;
    Scalar p0 = 0.04553801;
    Scalar p1 = 0.04743683;
    Scalar p2 = 0.00180224;
    Scalar q0 = 0.0;
    Scalar q1 = 0.02609037;
    Scalar beta = 0.01311175;
    Scalar grade = 0.0;
    // gasoline density 737 g/L times 3.78541 L/gal
    Scalar grams_per_gallon = 2789.9;

    bool operator==(const EnergyParams&) const = default;
};

// Stochastic cut-in / cut-out perturbation model.
struct LaneChangeParams {
    Scalar gap_threshold = 40.0;       // [m]
    Scalar insert_prob_per_s = 0.05;   // [1/s]
    Scalar removal_period = 30.0;      // [s]
    int target_count = 200;            // followers

    bool operator==(const LaneChangeParams&) const = default;
};

struct AccelBounds {
    Scalar min = -3.0;
    Scalar max = 1.5;

    bool operator==(const AccelBounds&) const = default;
};

struct SimConfig {
    int platoon_size = 200;
    Scalar dt = 0.1;
    Scalar penetration = 0.0;  // percent
    std::uint64_t seed = 0;
    Scalar vehicle_length = 4.5;
    ControllerParams controller;
    IdmParams idm;
    EnergyParams energy;
    std::optional<LaneChangeParams> lane_change;
    AccelBounds av_accel_bounds;
    Scalar av_track_horizon = 1.0;  // [s] time to close the command error; dt gives one-step tracking
    int output_stride = 10;

    bool operator==(const SimConfig&) const = default;
};

// Spacing between automated vehicles for a penetration rate, 0 when p == 0.
int av_spacing(Scalar penetration);

struct ValidationIssue {
    enum class Severity { Warning, Error };
    Severity severity = Severity::Error;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool runnable() const;
    std::vector<std::string> errors() const;
    std::vector<std::string> warnings() const;
};

ValidationReport validate_config(const SimConfig& config);

// One (time, position, velocity) sample of the exogenous leader.
struct TrajectorySample {
    Scalar time = 0.0;
    Scalar position = 0.0;
    Scalar velocity = 0.0;

    bool operator==(const TrajectorySample&) const = default;
};

inline constexpr Scalar kTrajectoryStep = 0.1;

struct LeadingTrajectory {
    std::vector<TrajectorySample> samples;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
    Scalar duration() const;

    bool operator==(const LeadingTrajectory&) const = default;
};

// Hard errors throw; soft inconsistencies (integration drift) come back as warnings.
std::vector<std::string> validate_trajectory(const LeadingTrajectory& traj);

// Stable 64-bit fingerprint of the sample values, used to pair runs.
std::uint64_t fingerprint(const LeadingTrajectory& traj);

class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace harmonizer

#endif  // HARMONIZER_CORE_TYPES_HPP
