#include "harmonizer/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

namespace harmonizer {

std::string format_number(double value) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw CsvError("cannot format number");
    return std::string(buf, end);
}

namespace {

class CsvReader {
   public:
    CsvReader(std::istream& in, const char* header) : in_(in) {
        std::string line;
        if (!next_line(line)) throw CsvError("missing header");
        if (line != header) throw CsvError("unexpected header '" + line + "', expected '" + header + "'");
    }

    // Splits the next non-empty line into fields; false at end of input.
    bool next(std::vector<std::string>& fields, std::size_t expected) {
        std::string line;
        do {
            if (!next_line(line)) return false;
        } while (line.empty());
        fields.clear();
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != expected)
            throw CsvError("line " + std::to_string(line_no_) + ": expected " + std::to_string(expected) +
                           " fields, got " + std::to_string(fields.size()));
        return true;
    }

    double number(const std::string& field) const {
        if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw CsvError("line " + std::to_string(line_no_) + ": bad number '" + field + "'");
        return value;
    }

    long long integer(const std::string& field) const {
        long long value = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size())
            throw CsvError("line " + std::to_string(line_no_) + ": bad integer '" + field + "'");
        return value;
    }

   private:
    bool next_line(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }

    std::istream& in_;
    long line_no_ = 0;
};

}  // namespace

void write_trajectory_csv(std::ostream& out, const LeadingTrajectory& traj) {
    out << kTrajectoryHeader << "\n";
    for (const auto& s : traj.samples)
        out << format_number(s.time) << "," << format_number(s.position) << "," << format_number(s.velocity) << "\n";
}

LeadingTrajectory read_trajectory_csv(std::istream& in) {
    CsvReader reader(in, kTrajectoryHeader);
    LeadingTrajectory traj;
    std::vector<std::string> f;
    while (reader.next(f, 3)) traj.samples.push_back({reader.number(f[0]), reader.number(f[1]), reader.number(f[2])});
    return traj;
}

void write_segments_csv(std::ostream& out, const std::vector<SegmentRecord>& records) {
    out << kSegmentHeader << "\n";
    for (const auto& r : records)
        out << format_number(r.segment_start) << "," << format_number(r.segment_end) << ","
            << format_number(r.timestamp) << "," << format_number(r.mean_speed) << "\n";
}

std::vector<SegmentRecord> read_segments_csv(std::istream& in) {
    CsvReader reader(in, kSegmentHeader);
    std::vector<SegmentRecord> records;
    std::vector<std::string> f;
    while (reader.next(f, 4))
        records.push_back({reader.number(f[0]), reader.number(f[1]), reader.number(f[2]), reader.number(f[3])});
    return records;
}

void write_pings_csv(std::ostream& out, const std::vector<VehiclePing>& pings) {
    out << kPingHeader << "\n";
    for (const auto& p : pings)
        out << p.vehicle_id << "," << format_number(p.timestamp) << "," << format_number(p.position) << ","
            << format_number(p.speed) << "\n";
}

std::vector<VehiclePing> read_pings_csv(std::istream& in) {
    CsvReader reader(in, kPingHeader);
    std::vector<VehiclePing> pings;
    std::vector<std::string> f;
    while (reader.next(f, 4)) {
        VehiclePing p;
        p.vehicle_id = static_cast<int>(reader.integer(f[0]));
        p.timestamp = reader.number(f[1]);
        p.position = reader.number(f[2]);
        p.speed = reader.number(f[3]);
        if (!(p.speed >= 0.0)) throw CsvError("ping with negative speed");
        pings.push_back(p);
    }
    return pings;
}

void write_profile_csv(std::ostream& out, const std::vector<ProfilePoint>& profile) {
    out << kProfileHeader << "\n";
    for (const auto& p : profile) out << format_number(p.position) << "," << format_number(p.target_speed) << "\n";
}

std::vector<ProfilePoint> read_profile_csv(std::istream& in) {
    CsvReader reader(in, kProfileHeader);
    std::vector<ProfilePoint> profile;
    std::vector<std::string> f;
    while (reader.next(f, 2)) profile.push_back({reader.number(f[0]), reader.number(f[1])});
    return profile;
}

void write_vehicle_csv(std::ostream& out, const RawTrajectories& run, const EnergyParams& energy, int stride) {
    if (stride < 1) throw CsvError("stride must be at least 1");
    out << kVehicleHeader << "\n";

    std::int64_t last_step = 0;
    for (const auto& t : run.vehicles)
        last_step = std::max<std::int64_t>(last_step, t.first_step + static_cast<std::int64_t>(t.samples.size()));

    // rows ordered by time, then platoon order of first appearance
    for (std::int64_t step = 0; step < last_step; step += stride) {
        const std::string time = format_number(static_cast<double>(step) * run.dt);
        for (const auto& trace : run.vehicles) {
            const std::int64_t k = step - trace.first_step;
            if (k < 0 || k >= static_cast<std::int64_t>(trace.samples.size())) continue;
            const auto& s = trace.samples[static_cast<std::size_t>(k)];
            out << time << "," << trace.id << "," << (trace.is_leader ? "Leader" : to_string(trace.kind)) << ","
                << format_number(s.position) << "," << format_number(s.speed) << "," << format_number(s.accel) << ",";
            if (!trace.is_leader) out << format_number(s.gap) << "," << format_number(s.time_gap);
            else out << ",";
            out << "," << format_number(fuel_rate(s.speed, s.accel, energy)) << "\n";
        }
    }
}

RawTrajectories read_vehicle_csv(std::istream& in) {
    CsvReader reader(in, kVehicleHeader);
    RawTrajectories run;
    std::map<int, std::size_t> index;
    std::vector<double> first_times;
    std::vector<std::string> f;
    double t0 = std::numeric_limits<double>::quiet_NaN();
    double t_next = std::numeric_limits<double>::quiet_NaN();
    while (reader.next(f, 9)) {
        const double time = reader.number(f[0]);
        if (std::isnan(t0)) t0 = time;
        if (std::isnan(t_next) && time != t0) t_next = time;
        const int id = static_cast<int>(reader.integer(f[1]));
        auto it = index.find(id);
        if (it == index.end()) {
            VehicleTrace trace;
            trace.id = id;
            trace.is_leader = f[2] == "Leader";
            trace.kind = trace.is_leader ? VehicleKind::Human : kind_from_string(f[2]);
            it = index.emplace(id, run.vehicles.size()).first;
            run.vehicles.push_back(std::move(trace));
            first_times.push_back(time);
        }
        TraceSample s;
        s.position = reader.number(f[3]);
        s.speed = reader.number(f[4]);
        s.accel = reader.number(f[5]);
        s.gap = reader.number(f[6]);
        s.time_gap = reader.number(f[7]);
        run.vehicles[it->second].samples.push_back(s);
    }
    if (!std::isnan(t_next)) run.dt = t_next - t0;
    for (std::size_t i = 0; i < run.vehicles.size(); ++i)
        run.vehicles[i].first_step = std::llround((first_times[i] - t0) / run.dt);
    return run;
}

void write_time_space_csv(std::ostream& out, const RawTrajectories& run, int stride) {
    if (stride < 1) throw CsvError("stride must be at least 1");
    out << kTimeSpaceHeader << "\n";
    for (const auto& trace : run.vehicles) {
        for (std::size_t k = 0; k < trace.samples.size(); ++k) {
            const std::int64_t step = trace.first_step + static_cast<std::int64_t>(k);
            if (step % stride != 0) continue;
            const auto& s = trace.samples[k];
            out << format_number(static_cast<double>(step) * run.dt) << "," << format_number(s.position) << ","
                << format_number(s.speed) << "\n";
        }
    }
}

}  // namespace harmonizer
