#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ringsim/ensemble/scenario.hpp"

namespace ringsim {

inline constexpr std::string_view tool_version = "ringsim 0.1.0";

/// Scenario text: `key = value [unit]` lines grouped under `[section]`
/// headers, `#` comments. Every physical quantity needs an explicit unit.
/// A repeated `[shaping]` section adds one pulse per occurrence.
///
/// Errors carry the line number and the dotted key path. The seed override
/// (if any) is applied before the seed-required check.
ScenarioConfig parse_scenario_text(std::string_view text, std::optional<std::uint64_t> seed_override = {});
ScenarioConfig parse_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});

/// Canonical text; every field is written in SI with 17 significant digits,
/// so parse_scenario_text(write_scenario(c)) == c.
std::string write_scenario(const ScenarioConfig& cfg);

/// FNV-1a (64 bit, hex) of the canonical text with the worker count cleared.
std::string scenario_hash(const ScenarioConfig& cfg);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace ringsim
