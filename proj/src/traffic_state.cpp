#include "harmonizer/traffic_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace harmonizer {

namespace {

constexpr Scalar kGeometryTolerance = 1e-6;

Scalar latest_value(const SpeedField::Segment& seg, Scalar t) {
    auto it = std::upper_bound(seg.times.begin(), seg.times.end(), t);
    if (it == seg.times.begin()) {
        std::ostringstream msg;
        msg << "no data yet for segment [" << seg.start << ", " << seg.end << "] at t=" << t;
        throw TrafficStateError(msg.str());
    }
    return seg.speeds[static_cast<std::size_t>(std::distance(seg.times.begin(), it) - 1)];
}

Scalar interpolate_clamped(const Eigen::Ref<const Eigen::VectorXd>& knots,
                           const Eigen::Ref<const Eigen::VectorXd>& values, Scalar x) {
    const Eigen::Index n = knots.size();
    if (x <= knots[0]) return values[0];
    if (x >= knots[n - 1]) return values[n - 1];
    const auto* begin = knots.data();
    const Eigen::Index i = std::upper_bound(begin, begin + n, x) - begin - 1;
    const Scalar frac = (x - knots[i]) / (knots[i + 1] - knots[i]);
    return values[i] + (values[i + 1] - values[i]) * frac;
}

struct Integral {
    Scalar area = 0.0;
    Scalar length = 0.0;  // summed piece lengths, which need not round back to hi - lo
};

Integral integrate_pieces(const Eigen::Ref<const Eigen::VectorXd>& knots,
                          const Eigen::Ref<const Eigen::VectorXd>& values, Scalar lo, Scalar hi) {
    const Eigen::Index n = knots.size();
    if (n == 0) throw TrafficStateError("no traffic state available");
    Integral out;
    if (!(hi > lo)) return out;

    auto add = [&](Scalar mean, Scalar len) {
        out.area += mean * len;
        out.length += len;
    };
    const Scalar first = knots[0];
    const Scalar last = knots[n - 1];
    if (lo < first) add(values[0], std::min(hi, first) - lo);

    const auto* begin = knots.data();
    Eigen::Index i = std::max<Eigen::Index>(0, std::upper_bound(begin, begin + n, lo) - begin - 1);
    for (; i + 1 < n && knots[i] < hi; ++i) {
        const Scalar a = std::max(lo, knots[i]);
        const Scalar b = std::min(hi, knots[i + 1]);
        if (!(b > a)) continue;
        const Scalar slope = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
        const Scalar fa = values[i] + slope * (a - knots[i]);
        const Scalar fb = values[i] + slope * (b - knots[i]);
        add(0.5 * (fa + fb), b - a);
    }

    if (hi > last) add(values[n - 1], hi - std::max(lo, last));
    return out;
}

}  // namespace

SpeedField::SpeedField(std::vector<Segment> segments) : segments_(std::move(segments)) {
    midpoints_.resize(static_cast<Eigen::Index>(segments_.size()));
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& seg = segments_[i];
        if (!(seg.end > seg.start)) throw TrafficStateError("segment end must exceed its start");
        if (seg.times.empty() || seg.times.size() != seg.speeds.size())
            throw TrafficStateError("segment needs a non-empty, aligned time series");
        for (std::size_t k = 1; k < seg.times.size(); ++k)
            if (!(seg.times[k] > seg.times[k - 1]))
                throw TrafficStateError("segment timestamps must be strictly increasing");
        for (Scalar v : seg.speeds)
            if (!(v >= 0.0)) throw TrafficStateError("segment speeds must be non-negative");
        if (i > 0 && std::abs(seg.start - segments_[i - 1].end) > kGeometryTolerance)
            throw TrafficStateError("segments must tile the route without gaps or overlap");
        midpoints_[static_cast<Eigen::Index>(i)] = seg.midpoint();
    }
}

Scalar SpeedField::extent_begin() const {
    if (empty()) throw TrafficStateError("no traffic state available");
    return segments_.front().start;
}

Scalar SpeedField::extent_end() const {
    if (empty()) throw TrafficStateError("no traffic state available");
    return segments_.back().end;
}

Eigen::VectorXd SpeedField::snapshot(Scalar t) const {
    if (empty()) throw TrafficStateError("no traffic state available");
    Eigen::VectorXd speeds(static_cast<Eigen::Index>(segments_.size()));
    for (std::size_t i = 0; i < segments_.size(); ++i)
        speeds[static_cast<Eigen::Index>(i)] = latest_value(segments_[i], t);
    return speeds;
}

Scalar SpeedField::speed_at(Scalar x, Scalar t) const { return interpolate_clamped(midpoints_, snapshot(t), x); }

Scalar SpeedField::window_mean(Scalar x, Scalar t, Scalar w) const {
    if (!(w > 0.0)) throw std::invalid_argument("window width must be positive");
    const auto snap = snapshot(t);
    const Integral in = integrate_pieces(midpoints_, snap, x, x + w);
    // a window narrower than the spacing of doubles at x collapses to a point
    if (!(in.length > 0.0)) return speed_at(x, t);
    return in.area / in.length;
}

Scalar SpeedField::min_speed() const {
    if (empty()) throw TrafficStateError("no traffic state available");
    Scalar lo = segments_.front().speeds.front();
    for (const auto& seg : segments_) lo = std::min(lo, *std::min_element(seg.speeds.begin(), seg.speeds.end()));
    return lo;
}

Scalar SpeedField::max_speed() const {
    if (empty()) throw TrafficStateError("no traffic state available");
    Scalar hi = segments_.front().speeds.front();
    for (const auto& seg : segments_) hi = std::max(hi, *std::max_element(seg.speeds.begin(), seg.speeds.end()));
    return hi;
}

int SpeedField::segment_index(Scalar x) const {
    if (empty() || x < segments_.front().start || x > segments_.back().end) return -1;
    auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                               [](Scalar value, const Segment& seg) { return value < seg.end; });
    if (it == segments_.end()) return static_cast<int>(segments_.size()) - 1;
    return static_cast<int>(std::distance(segments_.begin(), it));
}

std::vector<SegmentRecord> SpeedField::records() const {
    std::vector<SegmentRecord> out;
    for (const auto& seg : segments_)
        for (std::size_t k = 0; k < seg.times.size(); ++k)
            out.push_back({seg.start, seg.end, seg.times[k], seg.speeds[k]});
    return out;
}

Scalar integrate_clamped_linear(const Eigen::Ref<const Eigen::VectorXd>& knots,
                                const Eigen::Ref<const Eigen::VectorXd>& values, Scalar lo, Scalar hi) {
    return integrate_pieces(knots, values, lo, hi).area;
}

IngestResult ingest_segments(const std::vector<SegmentRecord>& records, const IngestOptions& options) {
    IngestResult result;
    if (records.empty()) return result;

    struct Geometry {
        Scalar start, end;
    };
    std::vector<Geometry> geometries;
    // geometry index -> timestamp -> speed (ordered, last write wins)
    std::vector<std::map<Scalar, Scalar>> series;

    auto find_geometry = [&](Scalar start, Scalar end) -> std::size_t {
        for (std::size_t g = 0; g < geometries.size(); ++g)
            if (std::abs(geometries[g].start - start) <= kGeometryTolerance &&
                std::abs(geometries[g].end - end) <= kGeometryTolerance)
                return g;
        geometries.push_back({start, end});
        series.emplace_back();
        return geometries.size() - 1;
    };

    for (const auto& raw : records) {
        SegmentRecord rec = raw;
        rec.segment_start += options.position_offset;
        rec.segment_end += options.position_offset;
        rec.timestamp += options.time_offset;
        if (!(rec.segment_end > rec.segment_start))
            throw TrafficStateError("segment record with end <= start");
        if (!(rec.mean_speed >= 0.0)) throw TrafficStateError("segment record with negative speed");
        if (!std::isfinite(rec.timestamp)) throw TrafficStateError("segment record with non-finite timestamp");

        auto& cells = series[find_geometry(rec.segment_start, rec.segment_end)];
        auto [it, inserted] = cells.try_emplace(rec.timestamp, rec.mean_speed);
        if (!inserted) {
            if (it->second != rec.mean_speed) {
                std::ostringstream msg;
                msg << "duplicate record for segment [" << rec.segment_start << ", " << rec.segment_end
                    << "] at t=" << rec.timestamp << "; keeping the later value " << rec.mean_speed;
                result.warnings.push_back(msg.str());
            }
            it->second = rec.mean_speed;
        }
    }

    std::vector<std::size_t> order(geometries.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return geometries[l].start < geometries[r].start; });

    std::vector<std::string> gaps;
    for (std::size_t k = 1; k < order.size(); ++k) {
        const auto& prev = geometries[order[k - 1]];
        const auto& cur = geometries[order[k]];
        if (cur.start < prev.end - kGeometryTolerance) {
            std::ostringstream msg;
            msg << "overlapping segments with conflicting geometry: [" << prev.start << ", " << prev.end
                << "] and [" << cur.start << ", " << cur.end << "]";
            throw TrafficStateError(msg.str());
        }
        if (cur.start > prev.end + kGeometryTolerance) {
            std::ostringstream gap;
            gap << "[" << prev.end << ", " << cur.start << "]";
            gaps.push_back(gap.str());
        }
    }
    if (!gaps.empty()) {
        std::string msg = "gaps between segments: missing";
        for (const auto& g : gaps) msg += " " + g;
        throw TrafficStateError(msg);
    }

    std::vector<SpeedField::Segment> segments;
    for (std::size_t g : order) {
        SpeedField::Segment seg;
        seg.start = segments.empty() ? geometries[g].start : segments.back().end;
        seg.end = geometries[g].end;
        for (const auto& [time, speed] : series[g]) {
            seg.times.push_back(time);
            seg.speeds.push_back(speed);
        }
        segments.push_back(std::move(seg));
    }
    result.field = SpeedField(std::move(segments));
    return result;
}

Scalar speed_at(const SpeedField& field, Scalar x, Scalar t) { return field.speed_at(x, t); }

SpeedField fuse_pings(const SpeedField& field, const std::vector<VehiclePing>& pings, Scalar t,
                      const FusionParams& params) {
    if (pings.empty() || field.empty()) return field;

    struct Accumulator {
        Scalar speed_sum = 0.0;
        int count = 0;
        Scalar newest = -std::numeric_limits<Scalar>::infinity();
    };
    std::vector<Accumulator> acc(field.segments().size());
    for (const auto& ping : pings) {
        const Scalar age = t - ping.timestamp;
        if (age < 0.0 || age > params.max_age) continue;
        const int idx = field.segment_index(ping.position);
        if (idx < 0) continue;
        auto& a = acc[static_cast<std::size_t>(idx)];
        a.speed_sum += ping.speed;
        a.count += 1;
        a.newest = std::max(a.newest, ping.timestamp);
    }

    std::vector<SpeedField::Segment> segments = field.segments();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& a = acc[i];
        if (a.count == 0) continue;
        auto& seg = segments[i];
        const Scalar base = latest_value(seg, t);
        const Scalar weight = std::exp(-(t - a.newest) / params.tau_age);
        const Scalar fused = (1.0 - weight) * base + weight * (a.speed_sum / a.count);

        auto it = std::lower_bound(seg.times.begin(), seg.times.end(), t);
        const auto pos = static_cast<std::size_t>(std::distance(seg.times.begin(), it));
        if (it != seg.times.end() && *it == t) {
            seg.speeds[pos] = fused;
        } else {
            seg.times.insert(it, t);
            seg.speeds.insert(seg.speeds.begin() + static_cast<std::ptrdiff_t>(pos), fused);
        }
    }
    return SpeedField(std::move(segments));
}

std::vector<ProfilePoint> plan_target_profile(const SpeedField& field, Scalar t, Scalar x_start, Scalar x_end,
                                              Scalar w, Scalar dx) {
    if (!(x_end > x_start)) throw std::invalid_argument("profile route must have x_end > x_start");
    if (!(dx > 0.0)) throw std::invalid_argument("profile step must be positive");
    if (!(w > 0.0)) throw std::invalid_argument("window width must be positive");

    field.snapshot(t);  // fail early when the field has no data yet
    const auto count = static_cast<std::size_t>(std::floor((x_end - x_start) / dx + 1e-9)) + 1;
    std::vector<ProfilePoint> profile;
    profile.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const Scalar x = x_start + static_cast<Scalar>(k) * dx;
        profile.push_back({x, field.window_mean(x, t, w)});
    }
    return profile;
}

}  // namespace harmonizer
