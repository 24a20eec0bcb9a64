#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ionchain {

enum class ScenarioKind { equilibrium, modes, gate, cool, localcool };

std::string scenario_name(ScenarioKind kind);
ScenarioKind parse_scenario(const std::string& name);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::equilibrium;
    std::string config_path;  // optional
    std::string preset;       // optional, name of a shipped preset
    std::filesystem::path out_dir = ".";
    std::vector<std::pair<std::string, std::string>> overrides;  // dotted key, value
};

enum ExitCode { exit_ok = 0, exit_config = 2, exit_numeric = 3 };

// Preset, then config file, then overrides, merged in that order.
nlohmann::json resolve_config(const ScenarioSpec& spec);

// Applies "a.b.c=value"; value parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& key, const std::string& value);

std::filesystem::path preset_directory();

// FNV-1a 64 over the canonical serialization.
std::string config_hash(const nlohmann::json& config);

// Shortest round-trip decimal, locale independent.
std::string format_number(double v);

// Runs the scenario, writes artifacts into out_dir, returns an exit code.
// Errors are reported on stderr with field-level messages.
int run_scenario(const ScenarioSpec& spec);

}  // namespace ionchain
