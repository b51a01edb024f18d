#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "subtrack/core.hpp"
#include "subtrack/random.hpp"

namespace subtrack {

class ProviderTransport;

struct InitResult {
  std::vector<SubgoalSpec> subgoals;
  HiddenState h0;
  int queries_used = 0;
};

enum class InitMode { kGroundTruth, kFlip, kRandom, kExternal };

std::string_view init_mode_name(InitMode mode);
InitMode parse_init_mode(std::string_view name);

// Each bit of the true initial status flips independently with
// probability flip_rate. One query is billed per subgoal. No random draws
// are made when flip_rate is 0.
InitResult init_from_ground_truth(std::vector<SubgoalSpec> subgoals, const std::vector<int>& truth, RandomSource& rng,
                                  double flip_rate);

// Subgoals from the task file, truth from its canonical start scene.
// Throws Error(kUnknownTask), Error(kMalformedTaskFile).
InitResult init_from_task_file(std::string_view task_id, RandomSource& rng, double flip_rate);

// Sends {"type":"init","task":...,"frame":...} and validates the reply.
// Throws Error(kProviderUnreachable), Error(kMalformedResponse),
// Error(kUnknownRelation).
InitResult init_from_external(ProviderTransport& transport, std::string_view task_id, const TrackFrame& initial_frame);

}  // namespace subtrack
