#ifndef HARMONIZER_CSV_IO_HPP
#define HARMONIZER_CSV_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "harmonizer/core_types.hpp"
#include "harmonizer/energy_metrics.hpp"
#include "harmonizer/traffic_state.hpp"

namespace harmonizer {

class CsvError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

// Leading trajectory: time_s,position_m,speed_mps
inline constexpr const char* kTrajectoryHeader = "time_s,position_m,speed_mps";
void write_trajectory_csv(std::ostream& out, const LeadingTrajectory& traj);
LeadingTrajectory read_trajectory_csv(std::istream& in);

// Segment speeds: segment_start_m,segment_end_m,timestamp_s,speed_mps
inline constexpr const char* kSegmentHeader = "segment_start_m,segment_end_m,timestamp_s,speed_mps";
void write_segments_csv(std::ostream& out, const std::vector<SegmentRecord>& records);
std::vector<SegmentRecord> read_segments_csv(std::istream& in);

// Probe pings: vehicle_id,timestamp_s,position_m,speed_mps
inline constexpr const char* kPingHeader = "vehicle_id,timestamp_s,position_m,speed_mps";
void write_pings_csv(std::ostream& out, const std::vector<VehiclePing>& pings);
std::vector<VehiclePing> read_pings_csv(std::istream& in);

// Target profile: position_m,target_speed_mps
inline constexpr const char* kProfileHeader = "position_m,target_speed_mps";
void write_profile_csv(std::ostream& out, const std::vector<ProfilePoint>& profile);
std::vector<ProfilePoint> read_profile_csv(std::istream& in);

// Per-vehicle simulation output, one row per vehicle per recorded step. The
// leader is written with kind "Leader" and empty gap columns.
inline constexpr const char* kVehicleHeader =
    "time_s,vehicle_id,kind,position_m,speed_mps,accel_mps2,gap_m,time_gap_s,fuel_rate";
void write_vehicle_csv(std::ostream& out, const RawTrajectories& run, const EnergyParams& energy, int stride = 1);
// Rebuilds traces from a full-rate (stride 1) file.
RawTrajectories read_vehicle_csv(std::istream& in);

// Time-space diagram points: time_s,position_m,speed_mps
inline constexpr const char* kTimeSpaceHeader = "time_s,position_m,speed_mps";
void write_time_space_csv(std::ostream& out, const RawTrajectories& run, int stride = 1);

// File helpers that open the stream and report the path on failure.
template <typename Fn>
auto with_input_file(const std::filesystem::path& path, Fn&& fn);
template <typename Fn>
void with_output_file(const std::filesystem::path& path, Fn&& fn);

}  // namespace harmonizer

#include <fstream>

namespace harmonizer {

template <typename Fn>
auto with_input_file(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path.string());
    try {
        return fn(in);
    } catch (const CsvError& e) {
        throw CsvError(path.string() + ": " + e.what());
    }
}

template <typename Fn>
void with_output_file(const std::filesystem::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot write " + path.string());
    fn(out);
    if (!out) throw CsvError("error writing " + path.string());
}

}  // namespace harmonizer

#endif  // HARMONIZER_CSV_IO_HPP
