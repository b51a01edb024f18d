#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "subtrack/filter.hpp"
#include "subtrack/initializer.hpp"
#include "subtrack/perception.hpp"
#include "subtrack/rl.hpp"
#include "subtrack/sim.hpp"

namespace subtrack {

struct ProviderSettings {
  std::string mode = "scripted";  // "scripted" or "external"
  std::optional<std::string> endpoint;
};

struct InitSettings {
  InitMode mode = InitMode::kGroundTruth;
  double flip_rate = 0.2;
};

struct EvalSettings {
  int episodes = 50;
  PolicyKind policy = PolicyKind::kMixed;
  double baseline_error_rate = 0.2;
  std::vector<int> strides{1, 2, 5, 10, 25};
  int sweep_frames_per_action = 50;
};

struct RunConfig {
  std::string task_id = "place-same-color";
  std::uint64_t seed = 0;
  int frames_per_action = 10;
  FilterConfig filter;
  NoiseProfile noise = NoiseProfile::none();
  ProviderSettings provider;
  InitSettings init;
  AgentConfig agent;
  EvalSettings eval;
  std::string output_dir = "out";
};

const nlohmann::json& run_config_schema();

// Checks `doc` against the subset of JSON Schema used by the run-config
// schema (type, enum, properties, required, additionalProperties, items,
// numeric bounds, minLength, minItems). Returns "path: problem" strings.
std::vector<std::string> schema_violations(const nlohmann::json& doc, const nlohmann::json& schema);

// Validates first, then applies the document over the defaults.
// Throws Error(kConfig) with every violation listed.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& config);
// Throws Error(kConfig) for unreadable or invalid files.
RunConfig load_run_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
// Hash of the canonical JSON form of the effective configuration.
std::string config_hash(const RunConfig& config);

}  // namespace subtrack
