#include "subtrack/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "subtrack/error.hpp"
#include "subtrack/schema_data.hpp"

namespace subtrack {

using nlohmann::json;

namespace {

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

void check(const json& v, const json& schema, const std::string& path, std::vector<std::string>& out) {
  auto fail = [&](const std::string& what) { out.push_back((path.empty() ? "/" : path) + ": " + what); };

  if (schema.contains("type") && !has_type(v, schema["type"].get<std::string>())) {
    fail("expected " + schema["type"].get<std::string>());
    return;
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == v;
    if (!found) fail("must be one of " + schema["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>()) fail("below minimum " + schema["minimum"].dump());
    if (schema.contains("maximum") && x > schema["maximum"].get<double>()) fail("above maximum " + schema["maximum"].dump());
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>()) {
      fail("must be greater than " + schema["exclusiveMinimum"].dump());
    }
    if (schema.contains("exclusiveMaximum") && x >= schema["exclusiveMaximum"].get<double>()) {
      fail("must be less than " + schema["exclusiveMaximum"].dump());
    }
  }
  if (v.is_string() && schema.contains("minLength") &&
      v.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
    fail("string too short");
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) fail("too few items");
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], schema["items"], path + "/" + std::to_string(i), out);
    }
  }
  if (v.is_object()) {
    const json props = schema.value("properties", json::object());
    if (schema.contains("required")) {
      for (const auto& r : schema["required"]) {
        if (!v.contains(r.get<std::string>())) fail("missing required property '" + r.get<std::string>() + "'");
      }
    }
    for (const auto& [key, child] : v.items()) {
      if (props.contains(key)) {
        check(child, props[key], path + "/" + key, out);
      } else if (schema.value("additionalProperties", true) == false) {
        fail("unknown property '" + key + "'");
      }
    }
  }
}

json filter_to_json(const FilterConfig& f) {
  return json{{"particles", f.particles},
              {"alpha", f.alpha},
              {"beta", f.beta},
              {"threshold", f.threshold},
              {"sigma_mode", sigma_mode_name(f.sigma_mode)},
              {"skip_policy", skip_policy_name(f.skip_policy)}};
}

}  // namespace

const json& run_config_schema() {
  static const json schema = json::parse(generated::kRunConfigSchema);
  return schema;
}

std::vector<std::string> schema_violations(const json& doc, const json& schema) {
  std::vector<std::string> out;
  check(doc, schema, "", out);
  return out;
}

RunConfig run_config_from_json(const json& doc) {
  const auto problems = schema_violations(doc, run_config_schema());
  if (!problems.empty()) {
    std::string msg = "run config fails the schema:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorCode::kConfig, msg);
  }

  RunConfig c;
  try {
    c.task_id = doc.value("task_id", c.task_id);
    c.seed = doc.value("seed", c.seed);
    c.frames_per_action = doc.value("frames_per_action", c.frames_per_action);
    c.output_dir = doc.value("output_dir", c.output_dir);
    if (doc.contains("filter")) {
      const json& f = doc["filter"];
      c.filter.particles = f.value("particles", c.filter.particles);
      c.filter.alpha = f.value("alpha", c.filter.alpha);
      c.filter.beta = f.value("beta", c.filter.beta);
      c.filter.threshold = f.value("threshold", c.filter.threshold);
      if (f.contains("sigma_mode")) c.filter.sigma_mode = parse_sigma_mode(f["sigma_mode"].get<std::string>());
      if (f.contains("skip_policy")) c.filter.skip_policy = parse_skip_policy(f["skip_policy"].get<std::string>());
    }
    if (doc.contains("noise")) c.noise = noise_from_json(doc["noise"]);
    if (doc.contains("provider")) {
      c.provider.mode = doc["provider"]["mode"].get<std::string>();
      if (doc["provider"].contains("endpoint")) c.provider.endpoint = doc["provider"]["endpoint"].get<std::string>();
    }
    if (doc.contains("init")) {
      if (doc["init"].contains("mode")) c.init.mode = parse_init_mode(doc["init"]["mode"].get<std::string>());
      c.init.flip_rate = doc["init"].value("flip_rate", c.init.flip_rate);
    }
    if (doc.contains("agent")) c.agent = agent_config_from_json(doc["agent"]);
    if (doc.contains("eval")) {
      const json& e = doc["eval"];
      c.eval.episodes = e.value("episodes", c.eval.episodes);
      if (e.contains("policy")) c.eval.policy = parse_policy_kind(e["policy"].get<std::string>());
      c.eval.baseline_error_rate = e.value("baseline_error_rate", c.eval.baseline_error_rate);
      if (e.contains("strides")) c.eval.strides = e["strides"].get<std::vector<int>>();
      c.eval.sweep_frames_per_action = e.value("sweep_frames_per_action", c.eval.sweep_frames_per_action);
    }
    c.filter.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["task_id"] = c.task_id;
  j["seed"] = c.seed;
  j["frames_per_action"] = c.frames_per_action;
  j["output_dir"] = c.output_dir;
  j["filter"] = filter_to_json(c.filter);
  j["noise"] = noise_to_json(c.noise);
  j["provider"] = json{{"mode", c.provider.mode}};
  if (c.provider.endpoint) j["provider"]["endpoint"] = *c.provider.endpoint;
  j["init"] = json{{"mode", init_mode_name(c.init.mode)}, {"flip_rate", c.init.flip_rate}};
  j["agent"] = agent_config_to_json(c.agent);
  j["eval"] = json{{"episodes", c.eval.episodes},
                   {"policy", policy_kind_name(c.eval.policy)},
                   {"baseline_error_rate", c.eval.baseline_error_rate},
                   {"strides", c.eval.strides},
                   {"sweep_frames_per_action", c.eval.sweep_frames_per_action}};
  return j;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
  return run_config_from_json(doc);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a64(run_config_to_json(config).dump())); }

}  // namespace subtrack
