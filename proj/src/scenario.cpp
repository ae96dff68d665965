#include "harmonizer/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "harmonizer/rng.hpp"

namespace harmonizer {

namespace {

void validate_spec(const SyntheticSpec& spec) {
    if (!(spec.duration > 0.0)) throw std::invalid_argument("synthetic trajectory duration must be positive");
    if (!(spec.base_speed >= 0.0)) throw std::invalid_argument("synthetic base speed must be non-negative");
    if (!(spec.ramp_rate > 0.0)) throw std::invalid_argument("synthetic ramp rate must be positive");
    Scalar swing = 0.0;
    for (const auto& osc : spec.oscillations) {
        if (!(osc.period > 0.0)) throw std::invalid_argument("oscillation period must be positive");
        swing += std::abs(osc.amplitude);
    }
    if (spec.base_speed - swing < 0.0)
        throw std::invalid_argument("oscillations drive the synthetic speed negative (base " +
                                    std::to_string(spec.base_speed) + " m/s, swing " + std::to_string(swing) +
                                    " m/s)");
    for (const auto& stop : spec.stop_events)
        if (!(stop.hold_duration >= 0.0) || !(stop.time >= 0.0))
            throw std::invalid_argument("stop events need non-negative time and hold duration");
}

}  // namespace

LeadingTrajectory generate_synthetic_trajectory(const SyntheticSpec& spec, std::uint64_t seed) {
    validate_spec(spec);

    NoiseStream rng(seed, kTrajectoryStream);
    std::vector<Scalar> phases;
    for (std::size_t i = 0; i < spec.oscillations.size(); ++i) phases.push_back(2.0 * std::numbers::pi * rng.uniform());

    auto cruise = [&](Scalar t) {
        Scalar v = spec.base_speed;
        for (std::size_t i = 0; i < spec.oscillations.size(); ++i) {
            const auto& osc = spec.oscillations[i];
            v += osc.amplitude * std::sin(2.0 * std::numbers::pi * t / osc.period + phases[i]);
        }
        return v;
    };

    struct Envelope {
        Scalar start, entry_speed, stop_time, launch_time;
    };
    std::vector<Envelope> envelopes;
    for (const auto& stop : spec.stop_events) {
        const Scalar entry = std::max(0.0, cruise(stop.time));
        const Scalar stop_time = stop.time + entry / spec.ramp_rate;
        envelopes.push_back({stop.time, entry, stop_time, stop_time + stop.hold_duration});
    }
    auto envelope = [&](Scalar t) {
        Scalar cap = std::numeric_limits<Scalar>::infinity();
        for (const auto& e : envelopes) {
            if (t < e.start) continue;
            Scalar v;
            if (t < e.stop_time)
                v = e.entry_speed - spec.ramp_rate * (t - e.start);
            else if (t < e.launch_time)
                v = 0.0;
            else
                v = spec.ramp_rate * (t - e.launch_time);
            cap = std::min(cap, std::max(0.0, v));
        }
        return cap;
    };

    const auto steps = static_cast<std::size_t>(std::llround(spec.duration / kTrajectoryStep));
    LeadingTrajectory traj;
    traj.samples.reserve(steps + 1);
    Scalar position = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const Scalar t = static_cast<Scalar>(k) * kTrajectoryStep;
        const Scalar v = std::max(0.0, std::min(cruise(t), envelope(t)));
        if (k > 0) position += 0.5 * (traj.samples.back().velocity + v) * kTrajectoryStep;
        traj.samples.push_back({t, position, v});
    }
    return traj;
}

SyntheticSpec moderate_preset() {
    SyntheticSpec spec;
    spec.duration = 1200.0;
    spec.base_speed = 20.0;
    spec.oscillations = {{8.0, 180.0}, {4.0, 40.0}};
    return spec;
}

SyntheticSpec heavy_preset() {
    SyntheticSpec spec;
    spec.duration = 1200.0;
    spec.base_speed = 9.0;
    spec.oscillations = {{4.0, 90.0}, {3.0, 35.0}};
    spec.stop_events = {{200.0, 10.0}, {520.0, 15.0}, {850.0, 10.0}};
    return spec;
}

std::optional<SyntheticSpec> preset_by_name(const std::string& name) {
    if (name == "moderate") return moderate_preset();
    if (name == "heavy") return heavy_preset();
    return std::nullopt;
}

DerivedField derive_field_from_leader(const LeadingTrajectory& traj, const DeriveFieldOptions& options) {
    if (traj.empty()) throw std::invalid_argument("cannot derive a field from an empty trajectory");
    if (!(options.segment_length > 0.0)) throw std::invalid_argument("segment_length must be positive");
    if (!(options.update_period > 0.0)) throw std::invalid_argument("update_period must be positive");

    const Scalar x_begin = options.x_begin.value_or(traj.samples.front().position);
    const Scalar x_end = options.x_end.value_or(traj.samples.back().position);
    const auto n_segments = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil((x_end - x_begin) / options.segment_length - 1e-9)));
    const Scalar t0 = traj.samples.front().time;
    const auto n_periods =
        static_cast<std::size_t>(std::floor((traj.samples.back().time - t0) / options.update_period + 1e-9)) + 1;

    std::vector<Scalar> sum(n_segments * n_periods, 0.0);
    std::vector<int> count(n_segments * n_periods, 0);
    for (const auto& s : traj.samples) {
        const Scalar rel = (s.position - x_begin) / options.segment_length;
        if (rel < 0.0) continue;
        auto seg = static_cast<std::size_t>(std::floor(rel));
        if (seg >= n_segments) {
            if (s.position > x_begin + static_cast<Scalar>(n_segments) * options.segment_length) continue;
            seg = n_segments - 1;
        }
        const auto period = std::min(
            n_periods - 1, static_cast<std::size_t>(std::floor((s.time - t0) / options.update_period + 1e-9)));
        sum[seg * n_periods + period] += s.velocity;
        count[seg * n_periods + period] += 1;
    }

    DerivedField out;
    std::vector<std::vector<Scalar>> series(n_segments);
    std::vector<bool> occupied(n_segments, false);
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
        std::vector<int> filled_from(n_periods, -1);
        for (std::size_t p = 0; p < n_periods; ++p)
            if (count[seg * n_periods + p] > 0) filled_from[p] = static_cast<int>(p);
        occupied[seg] = std::any_of(filled_from.begin(), filled_from.end(), [](int f) { return f >= 0; });
        if (!occupied[seg]) continue;

        series[seg].resize(n_periods);
        for (std::size_t p = 0; p < n_periods; ++p) {
            std::size_t source = p;
            if (count[seg * n_periods + p] == 0) {
                // nearest occupied period, earlier wins ties
                for (std::size_t d = 1;; ++d) {
                    if (p >= d && count[seg * n_periods + p - d] > 0) {
                        source = p - d;
                        break;
                    }
                    if (p + d < n_periods && count[seg * n_periods + p + d] > 0) {
                        source = p + d;
                        break;
                    }
                }
                ++out.filled_cells;
            }
            series[seg][p] = sum[seg * n_periods + source] / count[seg * n_periods + source];
        }
    }

    for (std::size_t seg = 0; seg < n_segments; ++seg) {
        if (occupied[seg]) continue;
        // nearest occupied segment, upstream wins ties
        for (std::size_t d = 1; d < n_segments; ++d) {
            if (seg >= d && occupied[seg - d]) {
                series[seg] = series[seg - d];
                break;
            }
            if (seg + d < n_segments && occupied[seg + d]) {
                series[seg] = series[seg + d];
                break;
            }
        }
        out.borrowed_segments.push_back(static_cast<int>(seg));
    }

    std::vector<SpeedField::Segment> segments(n_segments);
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
        auto& s = segments[seg];
        s.start = x_begin + static_cast<Scalar>(seg) * options.segment_length;
        s.end = x_begin + static_cast<Scalar>(seg + 1) * options.segment_length;
        for (std::size_t p = 0; p < n_periods; ++p) s.times.push_back(t0 + static_cast<Scalar>(p) * options.update_period);
        s.speeds = std::move(series[seg]);
    }
    out.field = SpeedField(std::move(segments));
    return out;
}

}  // namespace harmonizer
