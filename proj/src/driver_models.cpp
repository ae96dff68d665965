#include "harmonizer/driver_models.hpp"

#include "harmonizer/traffic_state.hpp"

namespace harmonizer {

Scalar kernel_average_speed(const SpeedField& field, Scalar x_alpha, Scalar t, Scalar w) {
    if (field.empty()) throw TrafficStateError("no traffic state available");
    return field.window_mean(x_alpha, t, w);
}

}  // namespace harmonizer
