#ifndef HARMONIZER_SIM_ENGINE_HPP
#define HARMONIZER_SIM_ENGINE_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "harmonizer/core_types.hpp"
#include "harmonizer/energy_metrics.hpp"
#include "harmonizer/rng.hpp"
#include "harmonizer/traffic_state.hpp"

namespace harmonizer {

inline constexpr int kLeaderId = 0;

// Platoon state between steps. vehicles[0] is the trajectory-replaying leader;
// noise[i] is the private noise stream of vehicles[i].
struct SimState {
    std::int64_t step_index = 0;
    Scalar dt = 0.1;
    std::vector<VehicleState> vehicles;
    std::vector<NoiseStream> noise;
    NoiseStream lane_change_rng;
    std::shared_ptr<const SpeedField> field;
    std::vector<SimEvent> event_log;
    int next_id = 0;
    std::int64_t removal_ticks = 0;

    Scalar clock() const { return static_cast<Scalar>(step_index) * dt; }
    std::size_t follower_count() const { return vehicles.empty() ? 0 : vehicles.size() - 1; }
    Scalar gap(std::size_t follower, Scalar vehicle_length) const {
        return vehicles[follower - 1].position - vehicles[follower].position - vehicle_length;
    }

    // Compares kinematics and generator state, not the shared field.
    bool same_dynamics(const SimState& other) const;
};

class CollisionError : public std::runtime_error {
   public:
    CollisionError(int follower_id, int leader_id, Scalar time, Scalar gap, std::string state_dump);

    int follower_id() const { return follower_id_; }
    int leader_id() const { return leader_id_; }
    Scalar time() const { return time_; }
    Scalar gap() const { return gap_; }
    const std::string& state_dump() const { return state_dump_; }

   private:
    int follower_id_;
    int leader_id_;
    Scalar time_;
    Scalar gap_;
    std::string state_dump_;
};

class SimulationError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Places N followers behind the leader at 2 s gaps and the leader's speed;
// every (100/p)-th follower is automated.
SimState init_platoon(const LeadingTrajectory& traj, const SimConfig& config,
                      std::shared_ptr<const SpeedField> field = nullptr);

// One synchronous update. Throws CollisionError if any gap closes.
void step(SimState& state, const LeadingTrajectory& traj, const SimConfig& config);

// Stochastic cut-ins into large gaps and periodic removals of human followers.
void apply_lane_changes(SimState& state, const LaneChangeParams& params, const SimConfig& config);

std::string dump_state(const SimState& state, Scalar vehicle_length);

struct RunOptions {
    std::string scenario = "custom";
};

// Steps until the leading trajectory is exhausted and aggregates metrics.
RunResult run(const LeadingTrajectory& traj, const SimConfig& config,
              std::shared_ptr<const SpeedField> field = nullptr, const RunOptions& options = {});

}  // namespace harmonizer

#endif  // HARMONIZER_SIM_ENGINE_HPP
