#ifndef HARMONIZER_CONFIG_IO_HPP
#define HARMONIZER_CONFIG_IO_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "harmonizer/core_types.hpp"

namespace harmonizer {

// Config documents are JSON objects whose keys mirror the SimConfig fields.
// Missing keys keep their defaults; unknown keys are rejected.
nlohmann::json config_to_json(const SimConfig& config);
SimConfig config_from_json(const nlohmann::json& doc);

std::string serialize_config(const SimConfig& config);
SimConfig parse_config(const std::string& text);

SimConfig load_config(const std::filesystem::path& path);
void save_config(const SimConfig& config, const std::filesystem::path& path);

}  // namespace harmonizer

#endif  // HARMONIZER_CONFIG_IO_HPP
