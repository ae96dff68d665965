#ifndef HARMONIZER_TRAFFIC_STATE_HPP
#define HARMONIZER_TRAFFIC_STATE_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "harmonizer/core_types.hpp"

namespace harmonizer {

// One aggregated speed measurement over a road segment.
struct SegmentRecord {
    Scalar segment_start = 0.0;  // [m]
    Scalar segment_end = 0.0;    // [m]
    Scalar timestamp = 0.0;      // [s]
    Scalar mean_speed = 0.0;     // [m/s]

    bool operator==(const SegmentRecord&) const = default;
};

struct VehiclePing {
    int vehicle_id = 0;
    Scalar timestamp = 0.0;
    Scalar position = 0.0;
    Scalar speed = 0.0;
};

class TrafficStateError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Spatiotemporal segment speeds. Space is interpolated linearly between segment
// midpoints (constant beyond the end midpoints); time is piecewise constant, each
// segment holding its latest value at or before the query time.
//
// Immutable once built: ingest and fusion return new fields.
class SpeedField {
   public:
    struct Segment {
        Scalar start = 0.0;
        Scalar end = 0.0;
        std::vector<Scalar> times;   // strictly increasing
        std::vector<Scalar> speeds;

        Scalar midpoint() const { return 0.5 * (start + end); }
        bool operator==(const Segment&) const = default;
    };

    SpeedField() = default;

    // Segments must be sorted, tile without gaps or overlap, and carry
    // non-empty strictly increasing time series.
    explicit SpeedField(std::vector<Segment> segments);

    bool empty() const { return segments_.empty(); }
    const std::vector<Segment>& segments() const { return segments_; }
    Scalar extent_begin() const;
    Scalar extent_end() const;

    const Eigen::VectorXd& midpoints() const { return midpoints_; }

    // Per-segment speeds in force at time t. Throws if some segment has no data yet.
    Eigen::VectorXd snapshot(Scalar t) const;

    Scalar speed_at(Scalar x, Scalar t) const;

    // Exact mean of the interpolated profile over [x, x + w].
    Scalar window_mean(Scalar x, Scalar t, Scalar w) const;

    Scalar min_speed() const;
    Scalar max_speed() const;

    // Index of the segment containing x (the last segment owns its end point), or -1.
    int segment_index(Scalar x) const;

    std::vector<SegmentRecord> records() const;

    bool operator==(const SpeedField& other) const { return segments_ == other.segments_; }

   private:
    std::vector<Segment> segments_;
    Eigen::VectorXd midpoints_;
};

// Integrates a piecewise-linear profile given by knots (clamped beyond both ends) over [lo, hi].
Scalar integrate_clamped_linear(const Eigen::Ref<const Eigen::VectorXd>& knots,
                                const Eigen::Ref<const Eigen::VectorXd>& values, Scalar lo, Scalar hi);

struct IngestOptions {
    // Synchronization shift applied to every record before it is stored.
    Scalar position_offset = 0.0;
    Scalar time_offset = 0.0;
};

struct IngestResult {
    SpeedField field;
    std::vector<std::string> warnings;
};

IngestResult ingest_segments(const std::vector<SegmentRecord>& records, const IngestOptions& options = {});

Scalar speed_at(const SpeedField& field, Scalar x, Scalar t);

struct FusionParams {
    Scalar tau_age = 60.0;    // [s]
    Scalar max_age = 120.0;   // [s]
};

// Blends fresh probe pings into the segments that contain them; ping weight
// decays exponentially with the age of the newest ping in the segment.
SpeedField fuse_pings(const SpeedField& field, const std::vector<VehiclePing>& pings, Scalar t,
                      const FusionParams& params = {});

struct ProfilePoint {
    Scalar position = 0.0;
    Scalar target_speed = 0.0;
};

inline constexpr Scalar kDefaultProfileStep = 10.0;  // [m]

// Windowed-mean target speeds sampled every dx over [x_start, x_end].
std::vector<ProfilePoint> plan_target_profile(const SpeedField& field, Scalar t, Scalar x_start, Scalar x_end,
                                              Scalar w, Scalar dx = kDefaultProfileStep);

}  // namespace harmonizer

#endif  // HARMONIZER_TRAFFIC_STATE_HPP
