#ifndef HARMONIZER_DRIVER_MODELS_HPP
#define HARMONIZER_DRIVER_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "harmonizer/core_types.hpp"

namespace harmonizer {

class SpeedField;

// What an ego vehicle sees of itself and its immediate leader.
template <typename T = Scalar>
struct MicroObservation {
    T v_alpha{};  // ego speed [m/s]
    T v_l{};      // leader speed [m/s]
    T a_l{};      // leader acceleration [m/s^2]
    T s_alpha{};  // bumper-to-bumper gap [m]
    T h_alpha{};  // time gap [s]
};

inline constexpr Scalar kMinTimeGapSpeed = 0.1;  // [m/s]
inline constexpr Scalar kMaxTimeGap = 100.0;     // [s]

// Time gap with the standstill rule: speed floored at 0.1 m/s, result capped at 100 s.
template <typename T>
T time_gap(T gap, T speed) {
    using std::max;
    using std::min;
    return min(T(kMaxTimeGap), gap / max(speed, T(kMinTimeGapSpeed)));
}

template <typename T = Scalar>
MicroObservation<T> observe(const VehicleState& ego, const VehicleState& leader, Scalar vehicle_length) {
    MicroObservation<T> obs;
    obs.v_alpha = T(ego.velocity);
    obs.v_l = T(leader.velocity);
    obs.a_l = T(leader.acceleration);
    obs.s_alpha = T(leader.position - ego.position - vehicle_length);
    obs.h_alpha = time_gap(obs.s_alpha, obs.v_alpha);
    return obs;
}

// IDM desired space gap s*(v, dv). dv is the approach rate v_ego - v_leader,
// positive while closing in, so a closing ego asks for a larger gap.
template <typename T>
T idm_desired_gap(T v_alpha, T dv, const IdmParams& p) {
    using std::max;
    using std::sqrt;
    const T dynamic = v_alpha * T(p.T) + v_alpha * dv / (T(2) * sqrt(T(p.a) * T(p.b)));
    return T(p.s0) + max(T(0), dynamic);
}

// IDM acceleration plus an externally sampled noise term. Throws on a collided state.
template <typename T>
T idm_accel(const MicroObservation<T>& obs, const IdmParams& p, T eps) {
    using std::pow;
    if (!(obs.s_alpha > T(0))) throw std::domain_error("idm_accel: non-positive space gap (collision state)");
    const T approach = obs.v_alpha - obs.v_l;
    const T ratio = idm_desired_gap(obs.v_alpha, approach, p) / obs.s_alpha;
    return T(p.a) * (T(1) - pow(obs.v_alpha / T(p.v0), T(p.delta)) - ratio * ratio) + eps;
}

// Weighs the ego speed against the downstream average by time gap.
template <typename T>
T blend_desired_speed(T v_alpha, T h_alpha, T v_avg) {
    if (h_alpha < T(1)) return v_alpha;
    if (h_alpha <= T(2)) return (T(2) - h_alpha) * v_alpha + (h_alpha - T(1)) * v_avg;
    return v_avg;
}

// Upper speed bound keeping minimum space and time gaps over the decision horizon.
// Never negative.
template <typename T>
T safety_speed(const MicroObservation<T>& obs, const ControllerParams& p) {
    using std::max;
    const T tau = T(p.tau_s);
    const T numerator = obs.s_alpha - T(p.s_min) + obs.v_l * tau + T(0.5) * obs.a_l * tau * tau -
                        T(0.5) * obs.v_alpha * tau;
    const T denominator = T(p.h_min) + T(0.5) * tau;
    return max(T(0), numerator / denominator);
}

// Gap-regulated command around v_des, clipped into [0, v_fs].
template <typename T>
T command_speed_from_desired(const MicroObservation<T>& obs, T v_des, const ControllerParams& p) {
    using std::max;
    using std::min;
    const T regulated = v_des + T(p.kp) * (obs.h_alpha - T(p.h_des)) + T(p.kd) * (obs.v_l - obs.v_alpha);
    return max(T(0), min(regulated, safety_speed(obs, p)));
}

template <typename T>
T command_speed(const MicroObservation<T>& obs, T v_avg, const ControllerParams& p) {
    return command_speed_from_desired(obs, blend_desired_speed(obs.v_alpha, obs.h_alpha, v_avg), p);
}

// Acceleration that closes the command error over `horizon` (one step when
// horizon == dt), clipped to the actuator envelope.
template <typename T>
T track_speed(T v_current, T v_c, Scalar horizon, const AccelBounds& bounds) {
    using std::clamp;
    return clamp((v_c - v_current) / T(horizon), T(bounds.min), T(bounds.max));
}

// Uniform-kernel mean of the interpolated field over [x_alpha, x_alpha + w] at time t.
Scalar kernel_average_speed(const SpeedField& field, Scalar x_alpha, Scalar t, Scalar w);

}  // namespace harmonizer

#endif  // HARMONIZER_DRIVER_MODELS_HPP
