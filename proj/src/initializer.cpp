#include "subtrack/initializer.hpp"

#include "subtrack/error.hpp"
#include "subtrack/perception.hpp"
#include "subtrack/provider.hpp"
#include "subtrack/sim.hpp"
#include "subtrack/task.hpp"

namespace subtrack {

using nlohmann::json;

std::string_view init_mode_name(InitMode mode) {
  switch (mode) {
    case InitMode::kGroundTruth:
      return "gt";
    case InitMode::kFlip:
      return "flip";
    case InitMode::kRandom:
      return "random";
    case InitMode::kExternal:
      return "external";
  }
  return "?";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "gt") return InitMode::kGroundTruth;
  if (name == "flip") return InitMode::kFlip;
  if (name == "random") return InitMode::kRandom;
  if (name == "external") return InitMode::kExternal;
  throw Error(ErrorCode::kInvalidArgument, "init mode must be gt, flip, random or external");
}

InitResult init_from_ground_truth(std::vector<SubgoalSpec> subgoals, const std::vector<int>& truth, RandomSource& rng,
                                  double flip_rate) {
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "flip_rate must lie in [0, 1]");
  if (truth.size() != subgoals.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial truth length must equal the subgoal count");
  }
  std::vector<double> h(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool flip = flip_rate > 0.0 && rng.bernoulli(flip_rate);
    h[i] = (truth[i] != 0) != flip ? 1.0 : 0.0;
  }
  InitResult r;
  r.queries_used = static_cast<int>(subgoals.size());
  r.subgoals = std::move(subgoals);
  r.h0 = HiddenState(std::move(h));
  return r;
}

InitResult init_from_task_file(std::string_view task_id, RandomSource& rng, double flip_rate) {
  const Simulator sim(load_task(task_id));
  return init_from_ground_truth(sim.subgoals(), sim.ground_truth(sim.canonical_state()), rng, flip_rate);
}

InitResult init_from_external(ProviderTransport& transport, std::string_view task_id, const TrackFrame& initial_frame) {
  json message;
  message["type"] = "init";
  message["task"] = std::string(task_id);
  message["frame"] = frame_message(initial_frame);
  const json reply = transport.request(message);

  auto malformed = [](const std::string& what) { return Error(ErrorCode::kMalformedResponse, "init reply: " + what); };
  if (!reply.contains("subgoals") || !reply["subgoals"].is_array() || reply["subgoals"].empty()) {
    throw malformed("'subgoals' must be a nonempty array");
  }
  if (!reply.contains("h0") || !reply["h0"].is_array()) throw malformed("'h0' must be an array");

  InitResult r;
  int id = 1;
  for (const json& s : reply["subgoals"]) {
    try {
      r.subgoals.push_back(subgoal_from_json(s, id++));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnknownRelation) throw;
      throw malformed(e.what());
    }
  }
  if (reply["h0"].size() != r.subgoals.size()) throw malformed("'h0' length differs from the subgoal count");
  std::vector<double> h;
  for (const json& b : reply["h0"]) {
    if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) throw malformed("'h0' entries must be 0 or 1");
    h.push_back(b.get<int>());
  }
  try {
    validate_subgoals(r.subgoals);
  } catch (const Error& e) {
    throw malformed(e.what());
  }
  r.h0 = HiddenState(std::move(h));
  r.queries_used = static_cast<int>(r.subgoals.size());
  if (reply.contains("queries")) {
    if (!reply["queries"].is_number_integer()) throw malformed("'queries' must be an integer");
    r.queries_used = reply["queries"].get<int>();
  }
  if (r.queries_used < 1) throw malformed("'queries' must be >= 1");
  return r;
}

}  // namespace subtrack
