#include "harmonizer/energy_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "harmonizer/config_io.hpp"

namespace harmonizer {

using nlohmann::json;

Scalar mpg(Scalar distance_m, Scalar fuel_g, Scalar grams_per_gallon) {
    if (!(fuel_g > 0.0)) throw std::domain_error("mpg: fuel mass must be positive");
    if (distance_m == 0.0) return 0.0;
    return (distance_m / kMetersPerMile) / (fuel_g / grams_per_gallon);
}

Scalar percent_delta(Scalar baseline, Scalar controlled) {
    if (baseline == 0.0) throw std::domain_error("percent_delta: zero baseline");
    return 100.0 * (controlled - baseline) / baseline;
}

const VehicleTrace* RawTrajectories::find(int id) const {
    for (const auto& v : vehicles)
        if (v.id == id) return &v;
    return nullptr;
}

Histogram::Histogram(Scalar lower_, Scalar upper, Scalar bin_width_) : lower(lower_), bin_width(bin_width_) {
    const auto bins = static_cast<Eigen::Index>(std::llround((upper - lower_) / bin_width_));
    counts = Eigen::VectorXi::Zero(bins);
}

void Histogram::add(Scalar value) {
    if (std::isnan(value)) return;
    if (value < lower) {
        ++underflow;
        return;
    }
    const auto bin = static_cast<Eigen::Index>(std::floor((value - lower) / bin_width));
    if (bin >= counts.size()) {
        ++overflow;
        return;
    }
    ++counts[bin];
}

long Histogram::total() const { return static_cast<long>(counts.sum()) + underflow + overflow; }

std::optional<Scalar> RunResult::distance_km() const {
    if (!automated) return std::nullopt;
    return automated->mean_distance_km;
}

std::optional<Scalar> RunResult::mpg_avs() const {
    if (!automated) return std::nullopt;
    return automated->mpg;
}

const VehicleSummary* RunResult::find_vehicle(int id) const {
    for (const auto& v : vehicles)
        if (v.id == id) return &v;
    return nullptr;
}

Scalar trace_fuel(const VehicleTrace& trace, Scalar dt, const EnergyParams& p) {
    Scalar fuel = 0.0;
    // each step burns at its end-of-step speed and realized acceleration,
    // the same speed that advanced the position
    for (std::size_t k = 1; k < trace.samples.size(); ++k) {
        const auto& s = trace.samples[k];
        fuel += fuel_rate(s.speed, s.accel, p) * dt;
    }
    return fuel;
}

namespace {

struct ClassAccumulator {
    ClassMetrics metrics;
    std::vector<Scalar> time_gaps;

    ClassAccumulator() {
        metrics.min_time_gap = std::numeric_limits<Scalar>::infinity();
        metrics.min_gap = std::numeric_limits<Scalar>::infinity();
    }

    void add(const VehicleTrace& trace, Scalar distance, Scalar fuel) {
        auto& m = metrics;
        m.vehicles += 1;
        m.total_distance_m += distance;
        m.total_fuel_g += fuel;
        for (const auto& s : trace.samples) {
            m.gap_hist.add(s.gap);
            m.time_gap_hist.add(s.time_gap);
            m.min_gap = std::min(m.min_gap, s.gap);
            m.min_time_gap = std::min(m.min_time_gap, s.time_gap);
            time_gaps.push_back(s.time_gap);
        }
    }

    ClassMetrics finish(Scalar grams_per_gallon) {
        auto& m = metrics;
        if (m.vehicles > 0) m.mean_distance_km = m.total_distance_m / m.vehicles / 1000.0;
        if (m.total_fuel_g > 0.0) m.mpg = mpg(m.total_distance_m, m.total_fuel_g, grams_per_gallon);
        if (!time_gaps.empty()) {
            const Eigen::Map<const Eigen::ArrayXd> gaps(time_gaps.data(), static_cast<Eigen::Index>(time_gaps.size()));
            m.time_gap_mean = gaps.mean();
            // nearest-rank percentile
            const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(time_gaps.size()))) - 1;
            std::nth_element(time_gaps.begin(), time_gaps.begin() + static_cast<std::ptrdiff_t>(rank), time_gaps.end());
            m.time_gap_p95 = time_gaps[rank];
        } else {
            m.min_time_gap = 0.0;
            m.min_gap = 0.0;
        }
        return m;
    }
};

}  // namespace

RunResult aggregate_metrics(RawTrajectories run, const SimConfig& config) {
    RunResult result;
    result.config = config;
    result.identity.platoon_size = config.platoon_size;
    result.identity.seed = config.seed;

    std::int64_t last_step = 0;
    for (const auto& trace : run.vehicles)
        last_step = std::max<std::int64_t>(last_step, trace.first_step + static_cast<std::int64_t>(trace.samples.size()));

    ClassAccumulator av, human, total;
    bool any_av = false;
    for (const auto& trace : run.vehicles) {
        if (trace.is_leader || trace.samples.empty()) continue;
        VehicleSummary summary;
        summary.id = trace.id;
        summary.kind = trace.kind;
        summary.distance_m = trace.samples.back().position - trace.samples.front().position;
        summary.fuel_g = trace_fuel(trace, run.dt, config.energy);
        summary.steps = static_cast<std::int64_t>(trace.samples.size());
        summary.full_lifetime = trace.first_step == 0 && trace.first_step + summary.steps == last_step;
        result.vehicles.push_back(summary);

        total.add(trace, summary.distance_m, summary.fuel_g);
        if (trace.kind == VehicleKind::Automated) {
            av.add(trace, summary.distance_m, summary.fuel_g);
            any_av = true;
        } else {
            human.add(trace, summary.distance_m, summary.fuel_g);
        }
    }

    const Scalar gpg = config.energy.grams_per_gallon;
    if (any_av) result.automated = av.finish(gpg);
    result.human = human.finish(gpg);
    result.total = total.finish(gpg);
    result.trajectories = std::move(run);
    return result;
}

Scalar speed_std(const VehicleTrace& trace) {
    if (trace.samples.empty()) return 0.0;
    Eigen::ArrayXd speeds(static_cast<Eigen::Index>(trace.samples.size()));
    for (Eigen::Index k = 0; k < speeds.size(); ++k) speeds[k] = trace.samples[static_cast<std::size_t>(k)].speed;
    return std::sqrt((speeds - speeds.mean()).square().mean());
}

Scalar pooled_speed_std(const RawTrajectories& run, const std::vector<int>& ids) {
    // Welford over every sample of the selected vehicles
    long n = 0;
    Scalar mean = 0.0, m2 = 0.0;
    for (int id : ids) {
        const VehicleTrace* trace = run.find(id);
        if (!trace) continue;
        for (const auto& s : trace->samples) {
            ++n;
            const Scalar delta = s.speed - mean;
            mean += delta / static_cast<Scalar>(n);
            m2 += delta * (s.speed - mean);
        }
    }
    return n > 0 ? std::sqrt(m2 / static_cast<Scalar>(n)) : 0.0;
}

// ---------------------------------------------------------------------------

ComparisonReport compare_runs(const RunResult& baseline, const RunResult& controlled) {
    if (!baseline.identity.same_scenario(controlled.identity))
        throw ComparisonError("runs differ in scenario, trajectory, platoon size or seed");

    std::vector<int> slots;
    bool have_avs = false;
    for (const auto& v : controlled.vehicles)
        if (v.kind == VehicleKind::Automated) have_avs = true;
    for (const auto& v : controlled.vehicles) {
        if (have_avs && v.kind != VehicleKind::Automated) continue;
        const VehicleSummary* b = baseline.find_vehicle(v.id);
        if (b && b->full_lifetime && v.full_lifetime) slots.push_back(v.id);
    }
    if (slots.empty()) throw ComparisonError("no vehicle slots present in both runs for the whole horizon");

    auto slot_row = [&](const RunResult& run) {
        Scalar distance = 0.0, fuel = 0.0;
        for (int id : slots) {
            const VehicleSummary* v = run.find_vehicle(id);
            distance += v->distance_m;
            fuel += v->fuel_g;
        }
        ComparisonRow row;
        row.distance_km = distance / static_cast<Scalar>(slots.size()) / 1000.0;
        if (have_avs) row.mpg_avs = mpg(distance, fuel, run.config.energy.grams_per_gallon);
        row.mpg_total = run.mpg_total();
        return row;
    };

    ComparisonReport report;
    report.identity = controlled.identity;
    report.penetration = controlled.config.penetration;
    report.baseline = slot_row(baseline);
    report.controlled = slot_row(controlled);
    report.delta_distance_pct = percent_delta(report.baseline.distance_km, report.controlled.distance_km);
    // AV MPG is measured against the human-driven platoon's total MPG
    if (have_avs) report.delta_mpg_avs_pct = percent_delta(report.baseline.mpg_total, *report.controlled.mpg_avs);
    report.delta_mpg_total_pct = percent_delta(report.baseline.mpg_total, report.controlled.mpg_total);
    return report;
}

ComparisonReport average_reports(const std::vector<ComparisonReport>& reports) {
    if (reports.empty()) throw ComparisonError("nothing to average");
    ComparisonReport avg;
    avg.identity.scenario = "Average";
    avg.penetration = reports.front().penetration;
    const auto n = static_cast<Scalar>(reports.size());
    bool all_avs = true;
    Scalar base_avs = 0.0, ctrl_avs = 0.0, delta_avs = 0.0;
    for (const auto& r : reports) {
        avg.baseline.distance_km += r.baseline.distance_km / n;
        avg.controlled.distance_km += r.controlled.distance_km / n;
        avg.baseline.mpg_total += r.baseline.mpg_total / n;
        avg.controlled.mpg_total += r.controlled.mpg_total / n;
        avg.delta_distance_pct += r.delta_distance_pct / n;
        avg.delta_mpg_total_pct += r.delta_mpg_total_pct / n;
        if (r.delta_mpg_avs_pct) {
            base_avs += *r.baseline.mpg_avs / n;
            ctrl_avs += *r.controlled.mpg_avs / n;
            delta_avs += *r.delta_mpg_avs_pct / n;
        } else {
            all_avs = false;
        }
    }
    if (all_avs) {
        avg.baseline.mpg_avs = base_avs;
        avg.controlled.mpg_avs = ctrl_avs;
        avg.delta_mpg_avs_pct = delta_avs;
    }
    return avg;
}

// ---------------------------------------------------------------------------

namespace {

json optional_json(const std::optional<Scalar>& value) { return value ? json(*value) : json(nullptr); }

json histogram_to_json(const Histogram& h) {
    std::vector<int> counts(h.counts.data(), h.counts.data() + h.counts.size());
    return {{"lower", h.lower},         {"bin_width", h.bin_width}, {"counts", counts},
            {"underflow", h.underflow}, {"overflow", h.overflow}};
}

Histogram histogram_from_json(const json& doc) {
    Histogram h;
    h.lower = doc.at("lower").get<Scalar>();
    h.bin_width = doc.at("bin_width").get<Scalar>();
    const auto counts = doc.at("counts").get<std::vector<int>>();
    h.counts = Eigen::Map<const Eigen::VectorXi>(counts.data(), static_cast<Eigen::Index>(counts.size()));
    h.underflow = doc.at("underflow").get<long>();
    h.overflow = doc.at("overflow").get<long>();
    return h;
}

json class_to_json(const ClassMetrics& m) {
    return {{"vehicles", m.vehicles},
            {"total_distance_m", m.total_distance_m},
            {"total_fuel_g", m.total_fuel_g},
            {"distance_km", m.mean_distance_km},
            {"mpg", m.mpg},
            {"time_gap_mean_s", m.time_gap_mean},
            {"time_gap_p95_s", m.time_gap_p95},
            {"min_time_gap_s", m.min_time_gap},
            {"min_gap_m", m.min_gap},
            {"gap_histogram", histogram_to_json(m.gap_hist)},
            {"time_gap_histogram", histogram_to_json(m.time_gap_hist)}};
}

ClassMetrics class_from_json(const json& doc) {
    ClassMetrics m;
    m.vehicles = doc.at("vehicles").get<int>();
    m.total_distance_m = doc.at("total_distance_m").get<Scalar>();
    m.total_fuel_g = doc.at("total_fuel_g").get<Scalar>();
    m.mean_distance_km = doc.at("distance_km").get<Scalar>();
    m.mpg = doc.at("mpg").get<Scalar>();
    m.time_gap_mean = doc.at("time_gap_mean_s").get<Scalar>();
    m.time_gap_p95 = doc.at("time_gap_p95_s").get<Scalar>();
    m.min_time_gap = doc.at("min_time_gap_s").get<Scalar>();
    m.min_gap = doc.at("min_gap_m").get<Scalar>();
    m.gap_hist = histogram_from_json(doc.at("gap_histogram"));
    m.time_gap_hist = histogram_from_json(doc.at("time_gap_histogram"));
    return m;
}

}  // namespace

json run_result_to_json(const RunResult& run) {
    json vehicles = json::array();
    for (const auto& v : run.vehicles)
        vehicles.push_back({{"id", v.id},
                            {"kind", to_string(v.kind)},
                            {"distance_m", v.distance_m},
                            {"fuel_g", v.fuel_g},
                            {"steps", v.steps},
                            {"full_lifetime", v.full_lifetime}});
    json events = json::array();
    for (const auto& e : run.events) events.push_back({{"time_s", e.time}, {"event", e.what}});

    return {{"scenario", run.identity.scenario},
            {"trajectory_fingerprint", run.identity.trajectory_fingerprint},
            {"platoon_size", run.identity.platoon_size},
            {"seed", run.identity.seed},
            {"penetration", run.config.penetration},
            {"distance_km", optional_json(run.distance_km())},
            {"mpg_avs", optional_json(run.mpg_avs())},
            {"mpg_total", run.mpg_total()},
            {"classes",
             {{"automated", run.automated ? class_to_json(*run.automated) : json(nullptr)},
              {"human", class_to_json(run.human)},
              {"total", class_to_json(run.total)}}},
            {"vehicles", vehicles},
            {"events", events},
            {"config", config_to_json(run.config)}};
}

RunResult run_result_from_json(const json& doc) {
    RunResult run;
    run.identity.scenario = doc.at("scenario").get<std::string>();
    run.identity.trajectory_fingerprint = doc.at("trajectory_fingerprint").get<std::uint64_t>();
    run.identity.platoon_size = doc.at("platoon_size").get<int>();
    run.identity.seed = doc.at("seed").get<std::uint64_t>();
    run.config = config_from_json(doc.at("config"));
    const auto& classes = doc.at("classes");
    if (!classes.at("automated").is_null()) run.automated = class_from_json(classes.at("automated"));
    run.human = class_from_json(classes.at("human"));
    run.total = class_from_json(classes.at("total"));
    for (const auto& v : doc.at("vehicles")) {
        VehicleSummary s;
        s.id = v.at("id").get<int>();
        s.kind = kind_from_string(v.at("kind").get<std::string>());
        s.distance_m = v.at("distance_m").get<Scalar>();
        s.fuel_g = v.at("fuel_g").get<Scalar>();
        s.steps = v.at("steps").get<std::int64_t>();
        s.full_lifetime = v.at("full_lifetime").get<bool>();
        run.vehicles.push_back(s);
    }
    for (const auto& e : doc.at("events")) run.events.push_back({e.at("time_s").get<Scalar>(), e.at("event").get<std::string>()});
    return run;
}

json comparison_to_json(const ComparisonReport& r) {
    auto row = [](const ComparisonRow& row) {
        return json{{"distance_km", row.distance_km}, {"mpg_avs", optional_json(row.mpg_avs)}, {"mpg_total", row.mpg_total}};
    };
    return {{"scenario", r.identity.scenario},
            {"seed", r.identity.seed},
            {"penetration", r.penetration},
            {"baseline", row(r.baseline)},
            {"controlled", row(r.controlled)},
            {"delta_pct",
             {{"distance_km", r.delta_distance_pct},
              {"mpg_avs", optional_json(r.delta_mpg_avs_pct)},
              {"mpg_total", r.delta_mpg_total_pct}}}};
}

namespace {

std::string fixed2(Scalar value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

std::string with_delta(Scalar value, Scalar delta) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.2f (%+.2f%%)", value, delta);
    return buf;
}

std::string pad(const std::string& text, std::size_t width) {
    return text.size() >= width ? text + " " : text + std::string(width - text.size(), ' ');
}

void append_rows(std::ostringstream& out, const ComparisonReport& r, const std::string& label) {
    out << pad(label, 22) << pad("Human-driven", 16) << pad(fixed2(r.baseline.distance_km), 24) << pad("--", 20)
        << fixed2(r.baseline.mpg_total) << "\n";
    out << pad("", 22) << pad("Mixed-autonomy", 16)
        << pad(with_delta(r.controlled.distance_km, r.delta_distance_pct), 24)
        << pad(r.controlled.mpg_avs ? with_delta(*r.controlled.mpg_avs, *r.delta_mpg_avs_pct) : "--", 20)
        << with_delta(r.controlled.mpg_total, r.delta_mpg_total_pct) << "\n";
}

}  // namespace

std::string format_comparison_table(const std::vector<ComparisonReport>& rows,
                                    const std::optional<ComparisonReport>& average) {
    std::ostringstream out;
    out << pad("Experiment", 22) << pad("Run", 16) << pad("Distance traveled (km)", 24) << pad("MPG (AVs)", 20)
        << "MPG (total)\n";
    out << std::string(96, '-') << "\n";
    for (const auto& r : rows) append_rows(out, r, r.identity.scenario + " seed " + std::to_string(r.identity.seed));
    if (average) {
        out << std::string(96, '-') << "\n";
        append_rows(out, *average, "Average");
    }
    return out.str();
}

}  // namespace harmonizer
