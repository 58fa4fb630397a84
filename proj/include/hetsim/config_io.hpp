#pragma once

#include "model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace hetsim {

inline constexpr const char* config_schema = "hetsim.config/1";
inline constexpr const char* report_schema = "hetsim.report/1";
inline constexpr const char* software_version = "1.0.0";

// {"M", "lambda", "mu": [...], "g": [...], "d", "selection": {"kind": "tandem" | "weighted", "betas": [b1, b2, b3]}}
nlohmann::json to_json(const ModelConfig& cfg);

// Throws ConfigError naming the offending field (e.g. "mu[7]"); runs validate().
ModelConfig config_from_json(const nlohmann::json& j);

// Throws ConfigError with line/column for malformed JSON.
nlohmann::json read_json_file(const std::filesystem::path& path);
ModelConfig load_config(const std::filesystem::path& path);

// Either a JSON array of configs or {"candidates": [...]}.
std::vector<ModelConfig> load_config_grid(const std::filesystem::path& path);

// "3,0,1" -> state; empty string -> empty state.
SystemState parse_state(const std::string& text);

}  // namespace hetsim
