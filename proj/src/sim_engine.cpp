#include "harmonizer/sim_engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "harmonizer/driver_models.hpp"

namespace harmonizer {

CollisionError::CollisionError(int follower_id, int leader_id, Scalar time, Scalar gap, std::string state_dump)
    : std::runtime_error([&] {
          std::ostringstream msg;
          msg << "collision at t=" << time << " s: vehicle " << follower_id << " reached vehicle " << leader_id
              << " (gap " << gap << " m)";
          return msg.str();
      }()),
      follower_id_(follower_id),
      leader_id_(leader_id),
      time_(time),
      gap_(gap),
      state_dump_(std::move(state_dump)) {}

bool SimState::same_dynamics(const SimState& other) const {
    return step_index == other.step_index && dt == other.dt && vehicles == other.vehicles && noise == other.noise &&
           lane_change_rng == other.lane_change_rng && event_log == other.event_log && next_id == other.next_id &&
           removal_ticks == other.removal_ticks;
}

namespace {

std::int64_t steps_per_sample(Scalar dt) {
    const Scalar ratio = dt / kTrajectoryStep;
    const auto rounded = std::llround(ratio);
    if (rounded < 1 || std::abs(ratio - static_cast<Scalar>(rounded)) > 1e-9)
        throw SimulationError("dt must be a positive multiple of the 0.1 s trajectory sampling");
    return rounded;
}

void require_runnable(const SimConfig& config) {
    const auto report = validate_config(config);
    if (!report.runnable()) {
        std::string msg = "invalid config:";
        for (const auto& e : report.errors()) msg += " " + e + ";";
        throw ConfigError(msg);
    }
}

}  // namespace

SimState init_platoon(const LeadingTrajectory& traj, const SimConfig& config, std::shared_ptr<const SpeedField> field) {
    require_runnable(config);
    if (traj.empty()) throw SimulationError("leading trajectory is empty");
    steps_per_sample(config.dt);

    SimState state;
    state.dt = config.dt;
    state.field = std::move(field);
    state.lane_change_rng = NoiseStream(config.seed, kLaneChangeStream);

    const auto& first = traj.samples.front();
    state.vehicles.push_back({kLeaderId, first.position, first.velocity, 0.0, VehicleKind::Human});
    state.noise.emplace_back(config.seed, kLeaderId);

    // 2 s headways; a stopped leader falls back to the IDM jam gap
    const Scalar gap = std::max(2.0 * first.velocity, config.idm.s0);
    const Scalar pitch = gap + config.vehicle_length;
    const int spacing = av_spacing(config.penetration);
    for (int i = 1; i <= config.platoon_size; ++i) {
        VehicleState v;
        v.id = i;
        v.position = first.position - pitch * i;
        v.velocity = first.velocity;
        v.kind = (spacing > 0 && i % spacing == 0) ? VehicleKind::Automated : VehicleKind::Human;
        state.vehicles.push_back(v);
        state.noise.emplace_back(config.seed, static_cast<std::uint64_t>(i));
    }
    state.next_id = config.platoon_size + 1;
    return state;
}

std::string dump_state(const SimState& state, Scalar vehicle_length) {
    std::ostringstream out;
    out.precision(10);
    out << "t=" << state.clock() << " s, " << state.vehicles.size() << " vehicles\n";
    out << "index,id,kind,position_m,speed_mps,accel_mps2,gap_m\n";
    for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
        const auto& v = state.vehicles[i];
        out << i << "," << v.id << "," << (i == 0 ? "Leader" : to_string(v.kind)) << "," << v.position << ","
            << v.velocity << "," << v.acceleration << ",";
        if (i > 0) out << state.gap(i, vehicle_length);
        out << "\n";
    }
    return out.str();
}

void step(SimState& state, const LeadingTrajectory& traj, const SimConfig& config) {
    const std::int64_t stride = steps_per_sample(config.dt);
    const auto next_sample = static_cast<std::size_t>((state.step_index + 1) * stride);
    if (next_sample >= traj.size()) throw SimulationError("leading trajectory exhausted");

    const Scalar dt = config.dt;
    const Scalar length = config.vehicle_length;
    const Scalar now = state.clock();
    auto& vehicles = state.vehicles;
    const std::size_t n = vehicles.size();

    // accelerations from the pre-step state
    std::vector<Scalar> accel(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const auto obs = observe(vehicles[i], vehicles[i - 1], length);
        if (vehicles[i].kind == VehicleKind::Human) {
            const Scalar eps = config.idm.noise_std > 0.0 ? config.idm.noise_std * state.noise[i].normal() : 0.0;
            accel[i] = idm_accel(obs, config.idm, eps);
        } else {
            if (!state.field) throw SimulationError("automated vehicle has no traffic state field");
            const Scalar v_avg = state.field->window_mean(vehicles[i].position, now, config.controller.w);
            const Scalar v_c = command_speed(obs, v_avg, config.controller);
            // braking down to a binding safety bound happens as fast as the actuator allows
            const bool brake_to_bound = v_c < obs.v_alpha && v_c >= safety_speed(obs, config.controller);
            const Scalar horizon = brake_to_bound ? dt : std::max(dt, config.av_track_horizon);
            accel[i] = track_speed(obs.v_alpha, v_c, horizon, config.av_accel_bounds);
        }
    }

    for (std::size_t i = 1; i < n; ++i) {
        auto& v = vehicles[i];
        const Scalar next_speed = std::max(0.0, v.velocity + accel[i] * dt);
        v.acceleration = (next_speed - v.velocity) / dt;
        v.velocity = next_speed;
        v.position += next_speed * dt;
    }

    const auto& sample = traj.samples[next_sample];
    auto& leader = vehicles.front();
    leader.acceleration = (sample.velocity - leader.velocity) / dt;
    leader.velocity = sample.velocity;
    leader.position = sample.position;

    ++state.step_index;

    for (std::size_t i = 1; i < n; ++i) {
        const Scalar gap = state.gap(i, length);
        if (!(gap > 0.0))
            throw CollisionError(vehicles[i].id, vehicles[i - 1].id, state.clock(), gap, dump_state(state, length));
    }

    if (config.lane_change) apply_lane_changes(state, *config.lane_change, config);
}

void apply_lane_changes(SimState& state, const LaneChangeParams& params, const SimConfig& config) {
    const Scalar length = config.vehicle_length;
    const Scalar now = state.clock();
    const Scalar insert_probability = params.insert_prob_per_s * state.dt;

    struct Insertion {
        std::size_t index;
        VehicleState vehicle;
    };
    std::vector<Insertion> insertions;
    for (std::size_t i = 1; i < state.vehicles.size(); ++i) {
        const Scalar gap = state.gap(i, length);
        if (gap <= params.gap_threshold) continue;
        if (state.lane_change_rng.uniform() >= insert_probability) continue;

        const auto& ahead = state.vehicles[i - 1];
        const auto& behind = state.vehicles[i];
        const Scalar new_gap = 0.5 * (gap - length);
        std::ostringstream what;
        if (new_gap < config.controller.s_min) {
            what << "insertion skipped between " << ahead.id << " and " << behind.id << ": gap " << new_gap
                 << " m below s_min";
            state.event_log.push_back({now, what.str()});
            continue;
        }
        if (behind.kind == VehicleKind::Automated &&
            time_gap(new_gap, behind.velocity) < config.controller.h_min) {
            what << "insertion skipped ahead of automated vehicle " << behind.id << ": time gap below h_min";
            state.event_log.push_back({now, what.str()});
            continue;
        }

        VehicleState vehicle;
        vehicle.id = state.next_id++;
        vehicle.position = 0.5 * (ahead.position + behind.position);
        vehicle.velocity = ahead.velocity;
        vehicle.kind = VehicleKind::Human;
        insertions.push_back({i, vehicle});
        what << "inserted vehicle " << vehicle.id << " between " << ahead.id << " and " << behind.id;
        state.event_log.push_back({now, what.str()});
    }
    for (auto it = insertions.rbegin(); it != insertions.rend(); ++it) {
        const auto offset = static_cast<std::ptrdiff_t>(it->index);
        state.vehicles.insert(state.vehicles.begin() + offset, it->vehicle);
        state.noise.insert(state.noise.begin() + offset,
                           NoiseStream(config.seed, static_cast<std::uint64_t>(it->vehicle.id)));
    }

    const auto tick = static_cast<std::int64_t>(std::floor(now / params.removal_period + 1e-9));
    if (tick <= state.removal_ticks) return;
    state.removal_ticks = tick;
    if (static_cast<int>(state.follower_count()) <= params.target_count) return;

    std::vector<std::size_t> humans;
    for (std::size_t i = 1; i < state.vehicles.size(); ++i)
        if (state.vehicles[i].kind == VehicleKind::Human) humans.push_back(i);
    if (humans.empty()) return;
    const std::size_t victim = humans[state.lane_change_rng.below(humans.size())];
    std::ostringstream what;
    what << "removed vehicle " << state.vehicles[victim].id;
    state.event_log.push_back({now, what.str()});
    state.vehicles.erase(state.vehicles.begin() + static_cast<std::ptrdiff_t>(victim));
    state.noise.erase(state.noise.begin() + static_cast<std::ptrdiff_t>(victim));
}

namespace {

class TraceRecorder {
   public:
    TraceRecorder(Scalar dt, Scalar vehicle_length, std::size_t expected_samples)
        : length_(vehicle_length), expected_(expected_samples) {
        raw_.dt = dt;
    }

    void record(const SimState& state) {
        for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
            const auto& v = state.vehicles[i];
            auto& trace = trace_for(v, i == 0, state.step_index);
            TraceSample s;
            s.position = v.position;
            s.speed = v.velocity;
            s.accel = v.acceleration;
            if (i == 0) {
                s.gap = std::numeric_limits<Scalar>::quiet_NaN();
                s.time_gap = std::numeric_limits<Scalar>::quiet_NaN();
            } else {
                s.gap = state.gap(i, length_);
                s.time_gap = time_gap(s.gap, v.velocity);
            }
            trace.samples.push_back(s);
        }
    }

    RawTrajectories take() { return std::move(raw_); }

   private:
    VehicleTrace& trace_for(const VehicleState& v, bool is_leader, std::int64_t step_index) {
        const auto id = static_cast<std::size_t>(v.id);
        if (id >= index_.size()) index_.resize(id + 1, kNone);
        if (index_[id] == kNone) {
            index_[id] = raw_.vehicles.size();
            VehicleTrace trace;
            trace.id = v.id;
            trace.kind = v.kind;
            trace.is_leader = is_leader;
            trace.first_step = step_index;
            if (step_index == 0) trace.samples.reserve(expected_);
            raw_.vehicles.push_back(std::move(trace));
        }
        return raw_.vehicles[index_[id]];
    }

    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    RawTrajectories raw_;
    Scalar length_;
    std::size_t expected_;
    std::vector<std::size_t> index_;
};

}  // namespace

RunResult run(const LeadingTrajectory& traj, const SimConfig& config, std::shared_ptr<const SpeedField> field,
              const RunOptions& options) {
    validate_trajectory(traj);
    if (config.penetration > 0.0 && !field)
        throw SimulationError("automated vehicles need a traffic state field");

    SimState state = init_platoon(traj, config, std::move(field));
    const std::int64_t stride = steps_per_sample(config.dt);
    const auto total_steps = static_cast<std::int64_t>(traj.size() - 1) / stride;

    TraceRecorder recorder(config.dt, config.vehicle_length, static_cast<std::size_t>(total_steps) + 1);
    recorder.record(state);
    while (state.step_index < total_steps) {
        step(state, traj, config);
        recorder.record(state);
    }

    RunResult result = aggregate_metrics(recorder.take(), config);
    result.identity.scenario = options.scenario;
    result.identity.trajectory_fingerprint = fingerprint(traj);
    result.events = std::move(state.event_log);
    return result;
}

}  // namespace harmonizer
