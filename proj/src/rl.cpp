#include "subtrack/rl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "subtrack/error.hpp"
#include "subtrack/initializer.hpp"

namespace subtrack {

using nlohmann::json;

double AgentConfig::epsilon(int episode) const {
  if (epsilon_decay_episodes <= 0 || episode >= epsilon_decay_episodes) return epsilon_end;
  const double s = static_cast<double>(episode) / epsilon_decay_episodes;
  return epsilon_start + (epsilon_end - epsilon_start) * s;
}

double AgentConfig::step_size(int episode) const {
  if (episodes <= 1) return learning_rate;
  const double s = std::clamp(static_cast<double>(episode) / (episodes - 1), 0.0, 1.0);
  return learning_rate + (learning_rate_end - learning_rate) * s;
}

void AgentConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0) || !(learning_rate_end > 0.0 && learning_rate_end <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rates must lie in (0, 1]");
  }
  if (!unit(epsilon_start) || !unit(epsilon_end)) throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in [0, 1]");
  if (!unit(failure_rate) || !unit(init_flip_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "failure_rate and init_flip_rate must lie in [0, 1]");
  }
  if (max_meta_steps < 1 || episodes < 1) throw Error(ErrorCode::kInvalidArgument, "episodes and max_meta_steps must be >= 1");
}

json agent_config_to_json(const AgentConfig& c) {
  return json{{"algorithm", "tabular_q"},
              {"gamma", c.gamma},
              {"learning_rate", c.learning_rate},
              {"learning_rate_end", c.learning_rate_end},
              {"epsilon_start", c.epsilon_start},
              {"epsilon_end", c.epsilon_end},
              {"epsilon_decay_episodes", c.epsilon_decay_episodes},
              {"max_meta_steps", c.max_meta_steps},
              {"episodes", c.episodes},
              {"failure_rate", c.failure_rate},
              {"init_flip_rate", c.init_flip_rate}};
}

AgentConfig agent_config_from_json(const json& j) {
  AgentConfig c;
  c.gamma = j.value("gamma", c.gamma);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.learning_rate_end = j.value("learning_rate_end", c.learning_rate_end);
  c.epsilon_start = j.value("epsilon_start", c.epsilon_start);
  c.epsilon_end = j.value("epsilon_end", c.epsilon_end);
  c.epsilon_decay_episodes = j.value("epsilon_decay_episodes", c.epsilon_decay_episodes);
  c.max_meta_steps = j.value("max_meta_steps", c.max_meta_steps);
  c.episodes = j.value("episodes", c.episodes);
  c.failure_rate = j.value("failure_rate", c.failure_rate);
  c.init_flip_rate = j.value("init_flip_rate", c.init_flip_rate);
  c.validate();
  return c;
}

std::string_view reward_source_name(RewardSource source) {
  switch (source) {
    case RewardSource::kFilter:
      return "filter";
    case RewardSource::kGroundTruth:
      return "gt";
    case RewardSource::kZero:
      return "zero";
  }
  return "?";
}

RewardSource parse_reward_source(std::string_view name) {
  if (name == "filter") return RewardSource::kFilter;
  if (name == "gt") return RewardSource::kGroundTruth;
  if (name == "zero") return RewardSource::kZero;
  throw Error(ErrorCode::kInvalidArgument, "reward source must be filter, gt or zero");
}

std::string encode_state(const Simulator& sim, const SimState& state) {
  std::ostringstream k;
  for (const auto& id : sim.task().movable_ids()) k << id.str() << '=' << sim.location_symbol(state, id) << ';';
  k << "gt=";
  for (int b : sim.ground_truth(state)) k << b;
  if (sim.task().drawer) k << ";drawer=" << (state.drawer_extension > 0.0 ? "open" : "closed");
  k << ";grip=" << (state.gripper ? state.gripper->str() : "-");
  return k.str();
}

double q_update(double q, double reward, double max_next, bool terminal, double learning_rate, double gamma) {
  const double target = reward + (terminal ? 0.0 : gamma * max_next);
  return q + learning_rate * (target - q);
}

double QTable::value(const std::string& state, const MetaAction& action) const {
  const auto s = table_.find(state);
  if (s == table_.end()) return 0.0;
  const auto a = s->second.find(to_string(action));
  return a == s->second.end() ? 0.0 : a->second;
}

void QTable::set(const std::string& state, const MetaAction& action, double v) { table_[state][to_string(action)] = v; }

double QTable::max_value(const std::string& state, const std::vector<MetaAction>& actions) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : actions) best = std::max(best, value(state, a));
  return actions.empty() ? 0.0 : best;
}

MetaAction QTable::greedy(const std::string& state, const std::vector<MetaAction>& actions, RandomSource& rng) const {
  if (actions.empty()) throw Error(ErrorCode::kIllegalAction, "no valid action available");
  const double best = max_value(state, actions);
  std::vector<const MetaAction*> ties;
  for (const auto& a : actions) {
    if (value(state, a) >= best - 1e-12) ties.push_back(&a);
  }
  return *ties[ties.size() == 1 ? 0 : rng.index(ties.size())];
}

json QTable::to_json() const {
  json j = json::object();
  for (const auto& [s, row] : table_) {
    json r = json::object();
    for (const auto& [a, v] : row) r[a] = v;
    j[s] = std::move(r);
  }
  return j;
}

QTable QTable::from_json(const json& j) {
  QTable q;
  try {
    for (const auto& [s, row] : j.items()) {
      for (const auto& [a, v] : row.items()) q.table_[s][a] = v.get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed policy table: ") + e.what());
  }
  return q;
}

MetaAction GreedyPolicy::act(const Simulator& sim, const SimState& state, RandomSource& rng) {
  return q_.greedy(encode_state(sim, state), sim.valid_actions(state), rng);
}

double TrainResult::final_ratio(int window) const {
  if (curve.empty()) return 0.0;
  const std::size_t n = std::min(curve.size(), static_cast<std::size_t>(std::max(1, window)));
  double sum = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) sum += curve[i].completion_ratio;
  return sum / static_cast<double>(n);
}

namespace {

FailureScript sample_failure_of_kind(const TaskDefinition& task, FailureKind kind, RandomSource& rng) {
  FailureScript f = FailureScript::make(kind);
  switch (kind) {
    case FailureKind::kOccupied: {
      std::vector<ObjectId> containers;
      std::vector<ObjectId> distractors;
      for (const auto& id : task.movable_ids()) {
        const bool goal_target = std::any_of(task.subgoals.begin(), task.subgoals.end(), [&](const SubgoalSpec& s) {
          return s.relation == SpatialRelation::kInside && s.target == id;
        });
        if (!goal_target) distractors.push_back(id);
      }
      for (const auto& s : task.subgoals) {
        if (s.relation == SpatialRelation::kInside) containers.push_back(*s.reference);
      }
      if (!containers.empty() && !distractors.empty()) {
        f.destination = containers[rng.index(containers.size())];
        f.distractor = distractors[rng.index(distractors.size())];
      }
      f.trigger_step = static_cast<int>(rng.index(2));
      break;
    }
    case FailureKind::kClosed:
      f.trigger_step = 1 + static_cast<int>(rng.index(3));
      break;
    case FailureKind::kDrop:
    case FailureKind::kPlacement:
      f.trigger_step = static_cast<int>(rng.index(4));
      break;
  }
  return f;
}

}  // namespace

std::optional<FailureScript> sample_failure(const TaskDefinition& task, RandomSource& rng) {
  if (task.failures.empty()) return std::nullopt;
  return sample_failure_of_kind(task, task.failures[rng.index(task.failures.size())], rng);
}

TrainResult train(const Simulator& sim, const AgentConfig& agent, RewardSource source, const TrainOptions& options,
                  const RandomSource& rng) {
  agent.validate();
  FilterConfig fcfg = options.filter;
  fcfg.tau = sim.frames_per_action();
  fcfg.validate();
  const auto& subgoals = sim.subgoals();
  const auto weights = subgoal_weights(subgoals);

  TrainResult result;
  ScriptedAffordanceProvider provider(sim.geometry());
  const auto clock_start = std::chrono::steady_clock::now();

  for (int ep = 0; ep < agent.episodes; ++ep) {
    RandomSource erng = rng.fork(static_cast<std::uint64_t>(ep));
    RandomSource noise_rng = rng.fork(0x5000'0000ULL + static_cast<std::uint64_t>(ep));
    std::optional<FailureScript> failure;
    if (agent.failure_rate > 0.0 && erng.bernoulli(agent.failure_rate)) failure = sample_failure(sim.task(), erng);
    SimState state = sim.reset(erng, failure);

    std::optional<SubgoalFilter> filter;
    if (source == RewardSource::kFilter) {
      provider.begin_episode("train-" + std::to_string(ep));
      const InitResult init = init_from_ground_truth(subgoals, sim.ground_truth(state), erng, agent.init_flip_rate);
      provider.bill_init_queries(init.queries_used);
      filter.emplace(subgoals, init.h0, fcfg);
    }

    const double eps = agent.epsilon(ep);
    const double alpha = agent.step_size(ep);
    double reward_sum = 0.0;
    while (!sim.success(state) && state.step_count < agent.max_meta_steps && !state.terminal_failure) {
      const std::string key = encode_state(sim, state);
      const auto actions = sim.valid_actions(state);
      const MetaAction a = erng.bernoulli(eps) ? actions[erng.index(actions.size())] : result.q.greedy(key, actions, erng);
      const auto before = sim.ground_truth(state);
      StepOutcome out = sim.apply(state, a, erng);

      double r = 0.0;
      if (source == RewardSource::kFilter) {
        EpisodeTrace chunk;
        chunk.frames = std::move(out.frames);
        if (!options.noise.is_identity()) chunk = corrupt(chunk, options.noise, noise_rng);
        for (const auto& f : chunk.frames) {
          if (auto ev = filter->step(f, provider, erng)) r += ev->r;
        }
      } else if (source == RewardSource::kGroundTruth) {
        const auto after = sim.ground_truth(state);
        std::vector<double> delta(after.size());
        for (std::size_t i = 0; i < after.size(); ++i) delta[i] = after[i] - before[i];
        r = sigma(delta, weights, SigmaMode::kSignedSum);
      }
      reward_sum += r;

      const bool terminal = sim.success(state) || state.terminal_failure;
      const std::string next = encode_state(sim, state);
      const double max_next = terminal ? 0.0 : result.q.max_value(next, sim.valid_actions(state));
      result.q.set(key, a, q_update(result.q.value(key, a), r, max_next, terminal, alpha, agent.gamma));
    }

    CurvePoint p;
    p.episode = ep + 1;
    p.completion_ratio = sim.completion_ratio(state);
    p.queries = provider.ledger().billed();
    if (options.timing) {
      p.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start).count();
    }
    result.curve.push_back(p);
    result.reward_sum_last = reward_sum;
    if (filter) {
      const HiddenState& h_start = filter->buffer().entries().front().h;
      const HiddenState& h_end = filter->current();
      std::vector<double> delta(h_start.size());
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = h_end[i] - h_start[i];
      result.estimate_change_last = sigma(delta, weights, SigmaMode::kSignedSum);
    }
  }
  return result;
}

RecoveryResult evaluate_recovery(const Simulator& sim, Policy& policy, const FailureScript& failure, int trials,
                                 const RandomSource& rng, bool resample, int max_steps) {
  if (!sim.task().failure_allowed(failure.kind)) {
    throw Error(ErrorCode::kIllegalFailureForTask, "failure '" + std::string(failure_kind_name(failure.kind)) +
                                                       "' is not defined for task " + sim.task().task_id);
  }
  RecoveryResult out;
  out.trials = trials;
  double steps = 0.0;
  for (int i = 0; i < trials; ++i) {
    RandomSource trng = rng.fork(static_cast<std::uint64_t>(i));
    const FailureScript f = resample ? sample_failure_of_kind(sim.task(), failure.kind, trng) : failure;
    const EpisodeRecord rec = run_episode(sim, policy, trng, f, max_steps);
    if (rec.success) {
      ++out.successes;
      steps += static_cast<double>(rec.actions.size());
    } else {
      steps += max_steps;
    }
  }
  out.success_rate = trials > 0 ? static_cast<double>(out.successes) / trials : 0.0;
  out.mean_meta_steps = trials > 0 ? steps / trials : 0.0;
  return out;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& out) {
  out << "episode,completion_ratio,queries,wall_ms\n";
  for (const auto& p : curve) {
    out << p.episode << ',' << p.completion_ratio << ',' << p.queries << ',';
    if (p.wall_ms) out << *p.wall_ms;
    out << '\n';
  }
}

}  // namespace subtrack
