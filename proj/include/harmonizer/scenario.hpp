#ifndef HARMONIZER_SCENARIO_HPP
#define HARMONIZER_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harmonizer/core_types.hpp"
#include "harmonizer/traffic_state.hpp"

namespace harmonizer {

struct Oscillation {
    Scalar amplitude = 0.0;  // [m/s]
    Scalar period = 60.0;    // [s]
};

struct StopEvent {
    Scalar time = 0.0;           // start of the braking ramp [s]
    Scalar hold_duration = 0.0;  // time spent at standstill [s]
};

// Leader speed = base + sum of sinusoids (seeded phases), capped by a braking /
// standstill / launch envelope around every stop event.
struct SyntheticSpec {
    Scalar duration = 1200.0;
    Scalar base_speed = 25.0;
    std::vector<Oscillation> oscillations;
    std::vector<StopEvent> stop_events;
    Scalar ramp_rate = 1.5;  // [m/s^2] for stop ramps
};

LeadingTrajectory generate_synthetic_trajectory(const SyntheticSpec& spec, std::uint64_t seed);

// Alternating free-flow and congested driving.
SyntheticSpec moderate_preset();
// Sustained slow driving with repeated stops.
SyntheticSpec heavy_preset();
std::optional<SyntheticSpec> preset_by_name(const std::string& name);

inline constexpr Scalar kHalfMile = 804.67;  // [m]

struct DeriveFieldOptions {
    Scalar segment_length = kHalfMile;
    Scalar update_period = 60.0;
    // Route covered by the field; defaults to the span the leader drives.
    std::optional<Scalar> x_begin;
    std::optional<Scalar> x_end;
};

struct DerivedField {
    SpeedField field;
    // Segments the leader never entered; their series is copied from the
    // nearest occupied segment.
    std::vector<int> borrowed_segments;
    int filled_cells = 0;  // (segment, period) cells filled from a neighbour in time
};

// Per (segment, update period) mean of the leader's speed while it occupied the
// segment; empty periods take the nearest occupied period of the same segment.
DerivedField derive_field_from_leader(const LeadingTrajectory& traj, const DeriveFieldOptions& options = {});

}  // namespace harmonizer

#endif  // HARMONIZER_SCENARIO_HPP
