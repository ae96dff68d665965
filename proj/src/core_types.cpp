#include "harmonizer/core_types.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace harmonizer {

std::string to_string(VehicleKind kind) {
    return kind == VehicleKind::Automated ? "Automated" : "Human";
}

VehicleKind kind_from_string(const std::string& text) {
    if (text == "Human") return VehicleKind::Human;
    if (text == "Automated") return VehicleKind::Automated;
    throw std::invalid_argument("unknown vehicle kind '" + text + "'");
}

int av_spacing(Scalar penetration) {
    if (!(penetration > 0.0)) return 0;
    return std::max(1, static_cast<int>(std::lround(100.0 / penetration)));
}

bool ValidationReport::runnable() const {
    for (const auto& issue : issues)
        if (issue.severity == ValidationIssue::Severity::Error) return false;
    return true;
}

std::vector<std::string> ValidationReport::errors() const {
    std::vector<std::string> out;
    for (const auto& issue : issues)
        if (issue.severity == ValidationIssue::Severity::Error) out.push_back(issue.message);
    return out;
}

std::vector<std::string> ValidationReport::warnings() const {
    std::vector<std::string> out;
    for (const auto& issue : issues)
        if (issue.severity == ValidationIssue::Severity::Warning) out.push_back(issue.message);
    return out;
}

namespace {

struct Checker {
    ValidationReport report;

    void require(bool ok, const std::string& message) {
        if (!ok) report.issues.push_back({ValidationIssue::Severity::Error, message});
    }
    void warn(const std::string& message) {
        report.issues.push_back({ValidationIssue::Severity::Warning, message});
    }
};

}  // namespace

ValidationReport validate_config(const SimConfig& config) {
    Checker c;
    c.require(config.platoon_size >= 1, "platoon_size must be at least 1");
    c.require(config.dt > 0.0, "dt must be positive");
    c.require(config.penetration >= 0.0 && config.penetration <= 100.0,
              "penetration must lie in [0, 100]");
    c.require(config.vehicle_length >= 0.0, "vehicle_length must be non-negative");
    c.require(config.output_stride >= 1, "output_stride must be at least 1");

    if (config.penetration > 0.0 && config.penetration <= 100.0) {
        const double exact = 100.0 / config.penetration;
        const int spacing = av_spacing(config.penetration);
        if (std::abs(exact - std::round(exact)) > 1e-9) {
            std::ostringstream msg;
            msg << "100/p not integral; AV spacing rounded to " << spacing;
            c.warn(msg.str());
        }
        if (spacing > config.platoon_size)
            c.warn("AV spacing exceeds platoon_size; no automated vehicles will be placed");
    }

    const auto& idm = config.idm;
    c.require(idm.v0 > 0.0, "idm.v0 must be positive");
    c.require(idm.T > 0.0, "idm.T must be positive");
    c.require(idm.a > 0.0, "idm.a must be positive");
    c.require(idm.b > 0.0, "idm.b must be positive");
    c.require(idm.s0 > 0.0, "idm.s0 must be positive");
    c.require(idm.noise_std >= 0.0, "idm.noise_std must be non-negative");

    const auto& ctl = config.controller;
    c.require(ctl.kp > 0.0, "controller.kp must be positive");
    c.require(ctl.kd > 0.0, "controller.kd must be positive");
    c.require(ctl.h_des > 0.0, "controller.h_des must be positive");
    c.require(ctl.w > 0.0, "controller.w must be positive");
    c.require(ctl.s_min > 0.0, "controller.s_min must be positive");
    c.require(ctl.h_min > 0.0, "controller.h_min must be positive");
    c.require(ctl.tau_s > 0.0, "controller.tau_s must be positive");
    c.require(ctl.h_min < ctl.h_des, "controller.h_min must be below controller.h_des");

    c.require(config.energy.beta >= 0.0, "energy.beta must be non-negative");
    c.require(config.energy.grams_per_gallon > 0.0, "energy.grams_per_gallon must be positive");
    c.require(config.energy.grade == 0.0, "energy.grade other than 0 is not supported");

    c.require(config.av_accel_bounds.min < 0.0, "av_accel_bounds.min must be negative");
    c.require(config.av_accel_bounds.max > 0.0, "av_accel_bounds.max must be positive");
    c.require(config.av_track_horizon > 0.0, "av_track_horizon must be positive");

    if (config.lane_change) {
        const auto& lc = *config.lane_change;
        c.require(lc.gap_threshold > 0.0, "lane_change.gap_threshold must be positive");
        c.require(lc.insert_prob_per_s > 0.0, "lane_change.insert_prob_per_s must be positive");
        c.require(lc.removal_period > 0.0, "lane_change.removal_period must be positive");
        c.require(lc.target_count > 0, "lane_change.target_count must be positive");
    }
    return c.report;
}

Scalar LeadingTrajectory::duration() const {
    if (samples.size() < 2) return 0.0;
    return samples.back().time - samples.front().time;
}

std::vector<std::string> validate_trajectory(const LeadingTrajectory& traj) {
    if (traj.empty()) throw std::invalid_argument("leading trajectory is empty");
    std::vector<std::string> warnings;
    Scalar integrated = traj.samples.front().position;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.samples[k];
        if (!(s.velocity >= 0.0))
            throw std::invalid_argument("leading trajectory has negative velocity at t=" +
                                        std::to_string(s.time));
        if (k == 0) continue;
        const auto& prev = traj.samples[k - 1];
        if (std::abs((s.time - prev.time) - kTrajectoryStep) > 1e-6)
            throw std::invalid_argument("leading trajectory samples must be spaced 0.1 s apart (t=" +
                                        std::to_string(s.time) + ")");
        if (s.position < prev.position)
            throw std::invalid_argument("leading trajectory position decreases at t=" +
                                        std::to_string(s.time));
        integrated += 0.5 * (s.velocity + prev.velocity) * (s.time - prev.time);
    }
    const Scalar drift = std::abs(integrated - traj.samples.back().position);
    const Scalar allowance = std::max(1.0, traj.duration() / 60.0);
    if (drift > allowance) {
        std::ostringstream msg;
        msg << "position drifts " << drift << " m from integrated velocity (allowance "
            << allowance << " m)";
        warnings.push_back(msg.str());
    }
    return warnings;
}

std::uint64_t fingerprint(const LeadingTrajectory& traj) {
    // FNV-1a over the raw sample bytes
    std::uint64_t hash = 1469598103934665603ULL;
    auto mix = [&hash](double value) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &value, sizeof(double));
        for (unsigned char b : bytes) {
            hash ^= b;
            hash *= 1099511628211ULL;
        }
    };
    for (const auto& s : traj.samples) {
        mix(s.time);
        mix(s.position);
        mix(s.velocity);
    }
    return hash;
}

}  // namespace harmonizer
