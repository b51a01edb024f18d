#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "subtrack/filter.hpp"
#include "subtrack/perception.hpp"
#include "subtrack/sim.hpp"

namespace subtrack {

struct AgentConfig {
  double gamma = 0.9;
  double learning_rate = 0.3;
  // Step size decays linearly to this value over the training episodes.
  double learning_rate_end = 0.05;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 300;
  int max_meta_steps = kMaxMetaSteps;
  int episodes = 400;
  // Fraction of training episodes with one of the task's failures armed.
  double failure_rate = 0.0;
  // Bit-flip rate of the initial estimate handed to the reward filter.
  double init_flip_rate = 0.0;

  double epsilon(int episode) const;
  double step_size(int episode) const;
  // Throws Error(kInvalidArgument).
  void validate() const;
};

nlohmann::json agent_config_to_json(const AgentConfig& c);
AgentConfig agent_config_from_json(const nlohmann::json& j);

enum class RewardSource { kFilter, kGroundTruth, kZero };

std::string_view reward_source_name(RewardSource source);
RewardSource parse_reward_source(std::string_view name);

// Symbolic agent state: location of every movable object, subgoal status,
// drawer status and gripper contents.
std::string encode_state(const Simulator& sim, const SimState& state);

// One-step tabular Q-learning target.
double q_update(double q, double reward, double max_next, bool terminal, double learning_rate, double gamma);

class QTable {
 public:
  double value(const std::string& state, const MetaAction& action) const;
  void set(const std::string& state, const MetaAction& action, double v);
  double max_value(const std::string& state, const std::vector<MetaAction>& actions) const;
  // Highest-valued action; ties broken uniformly with `rng`.
  MetaAction greedy(const std::string& state, const std::vector<MetaAction>& actions, RandomSource& rng) const;
  std::size_t size() const { return table_.size(); }

  nlohmann::json to_json() const;
  static QTable from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::map<std::string, double>> table_;
};

class GreedyPolicy : public Policy {
 public:
  explicit GreedyPolicy(const QTable& q) : q_(q) {}
  MetaAction act(const Simulator& sim, const SimState& state, RandomSource& rng) override;

 private:
  const QTable& q_;
};

struct CurvePoint {
  int episode = 0;
  double completion_ratio = 0.0;
  long queries = 0;  // cumulative billed provider queries
  std::optional<double> wall_ms;
};

struct TrainResult {
  QTable q;
  std::vector<CurvePoint> curve;
  double reward_sum_last = 0.0;  // total reward in the final episode
  // Signed sum of the filter estimate change over the final episode.
  double estimate_change_last = 0.0;

  // Mean completion ratio over the last `window` episodes.
  double final_ratio(int window = 50) const;
};

struct TrainOptions {
  FilterConfig filter;  // tau is overridden by the simulator's frames per action
  NoiseProfile noise;
  bool timing = false;
};

TrainResult train(const Simulator& sim, const AgentConfig& agent, RewardSource source, const TrainOptions& options,
                  const RandomSource& rng);

// Random failure script for the task, as used during training and recovery
// trials. nullopt for tasks without failures.
std::optional<FailureScript> sample_failure(const TaskDefinition& task, RandomSource& rng);

struct RecoveryResult {
  double success_rate = 0.0;
  double mean_meta_steps = 0.0;  // failed trials count at the cap
  int successes = 0;
  int trials = 0;
};

// Frozen-policy trials with `failure` armed (trigger and parameters
// re-sampled per trial when `resample` is set).
RecoveryResult evaluate_recovery(const Simulator& sim, Policy& policy, const FailureScript& failure, int trials,
                                 const RandomSource& rng, bool resample = true, int max_steps = kMaxMetaSteps);

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out);

}  // namespace subtrack
