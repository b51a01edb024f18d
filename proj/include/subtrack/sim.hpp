#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "subtrack/affordance.hpp"
#include "subtrack/core.hpp"
#include "subtrack/perception.hpp"
#include "subtrack/random.hpp"
#include "subtrack/task.hpp"

namespace subtrack {

// World pose of one object. `lift` is a transient render-only height (in
// stack levels) used while an object travels in the gripper.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  int z = 0;
  double lift = 0.0;
  bool held = false;

  bool operator==(const Pose&) const = default;
};

enum class SupportKind { kTable, kFixture, kCube, kBeside };

// What a movable object rests on.
struct Support {
  SupportKind kind = SupportKind::kTable;
  ObjectId ref;
  int slot = -1;

  bool operator==(const Support&) const = default;
};

struct FailureScript {
  FailureKind kind = FailureKind::kOccupied;
  int trigger_step = 0;
  ObjectId distractor;    // occupied: cube moved into the destination
  ObjectId destination;   // occupied: container it is moved into
  int scatter_count = 2;  // placement: top objects of the stack to scatter
  bool fall_off = false;  // placement: mark the episode unrecoverable
  bool fired = false;

  // Task-specific defaults for a failure kind.
  static FailureScript make(FailureKind kind, int trigger_step = 0);
};

nlohmann::json failure_to_json(const FailureScript& f);
FailureScript failure_from_json(const nlohmann::json& j);

struct SimState {
  std::map<ObjectId, Pose> poses;
  std::map<ObjectId, Support> support;  // movable objects that are not held
  double drawer_extension = 0.0;        // world units, 0 = closed
  std::optional<ObjectId> gripper;
  int step_count = 0;
  int frame = 0;  // index of the last emitted frame
  bool terminal_failure = false;
  std::optional<FailureScript> failure;
};

struct StepOutcome {
  std::vector<TrackFrame> frames;
  std::vector<std::vector<int>> ground_truth;  // one entry per frame
  bool action_succeeded = true;
  bool failure_fired = false;
};

// Kinematic tabletop with a fixed camera. Skills teleport objects between
// symbolic supports and emit interpolated frames for each meta-action.
class Simulator {
 public:
  explicit Simulator(TaskDefinition task, int frames_per_action = 10);
  static Simulator load(const std::string& task_id, int frames_per_action = 10);

  const TaskDefinition& task() const { return task_; }
  const std::vector<SubgoalSpec>& subgoals() const { return task_.subgoals; }
  int frames_per_action() const { return frames_per_action_; }
  const AffordanceGeometry& geometry() const { return geometry_; }

  // Throws Error(kIllegalFailureForTask).
  SimState reset(RandomSource& rng, std::optional<FailureScript> failure = std::nullopt) const;
  // Scene exactly as written in the task file, without jitter.
  SimState canonical_state() const;

  // Throws Error(kIllegalAction) for actions outside valid_actions().
  StepOutcome apply(SimState& state, const MetaAction& action, RandomSource& rng) const;
  // State change only, no frames. Returns whether the skill took effect.
  bool transition(SimState& state, const MetaAction& action, RandomSource& rng) const;

  std::vector<MetaAction> valid_actions(const SimState& state) const;
  bool is_valid(const SimState& state, const MetaAction& action) const;

  TrackFrame render(const SimState& state, int t) const;
  std::vector<int> ground_truth(const SimState& state) const;
  double completion_ratio(const SimState& state) const;
  bool success(const SimState& state) const;

  // Symbolic location of a movable object, e.g. "in:red_bowl",
  // "on:red_cube", "left:green_cube", "table", "held".
  std::string location_symbol(const SimState& state, const ObjectId& id) const;
  // Exact, position-level key used to deduplicate states during planning.
  std::string exact_key(const SimState& state) const;

 private:
  struct Effect;

  void check_failure(const std::optional<FailureScript>& failure) const;
  Effect execute(SimState& state, const MetaAction& action, RandomSource& rng) const;
  void fire_pre_step_failure(SimState& state, Effect& effect) const;
  void set_extension(SimState& state, double extension) const;
  Point free_table_spot(const SimState& state, const ObjectId& mover) const;
  Point free_scatter_spot(const SimState& state, const ObjectId& mover, RandomSource& rng) const;
  bool position_clear(const SimState& state, Point p, const ObjectId& mover, double radius) const;
  std::optional<ObjectId> object_on(const SimState& state, const ObjectId& base) const;
  ObjectId top_of_stack(const SimState& state, const ObjectId& base) const;
  bool hidden_in_drawer(const SimState& state, const ObjectId& id) const;
  bool drawer_open(const SimState& state) const;
  WorldRect footprint(const SimState& state, const ObjectId& id) const;
  bool relation_holds(const SimState& state, const SubgoalSpec& s) const;

  TaskDefinition task_;
  int frames_per_action_;
  AffordanceGeometry geometry_;
};

// Pixel-space version of the ground-truth predicates, evaluated on boxes:
// the target center must lie in the satisfied region. Undetected objects
// count as unsatisfied. Throws Error(kMissingObject) for unknown objects.
std::vector<int> frame_ground_truth(const TrackFrame& frame, const std::vector<SubgoalSpec>& subgoals,
                                    const AffordanceGeometry& geometry);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(const Simulator& /*sim*/, const SimState& /*state*/) {}
  virtual MetaAction act(const Simulator& sim, const SimState& state, RandomSource& rng) = 0;
};

class RandomPolicy : public Policy {
 public:
  MetaAction act(const Simulator& sim, const SimState& state, RandomSource& rng) override;
};

// Shortest-plan policy: breadth-first search over the deterministic skill
// model, replanning whenever the world diverges from the prediction.
class ExpertPolicy : public Policy {
 public:
  explicit ExpertPolicy(int max_depth = 12) : max_depth_(max_depth) {}

  void begin_episode(const Simulator& sim, const SimState& state) override;
  MetaAction act(const Simulator& sim, const SimState& state, RandomSource& rng) override;

  // Empty when already solved; throws Error(kInvalidArgument) when no plan
  // exists within the depth limit.
  std::vector<MetaAction> plan(const Simulator& sim, const SimState& state) const;

 private:
  int max_depth_;
  std::vector<MetaAction> plan_;
  std::vector<std::string> expected_;  // exact key before each planned action
};

struct EpisodeRecord {
  EpisodeTrace trace;  // clean boxes with per-frame ground truth
  std::vector<MetaAction> actions;
  SimState final_state;
  bool success = false;
};

inline constexpr int kMaxMetaSteps = 20;

EpisodeRecord run_episode(const Simulator& sim, Policy& policy, RandomSource& rng,
                          std::optional<FailureScript> failure = std::nullopt, int max_steps = kMaxMetaSteps);

enum class PolicyKind { kExpert, kRandom, kMixed };

std::string_view policy_kind_name(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

// Rolls out `episodes` episodes (mixed: first half expert, rest random),
// then applies `noise`. Episode i draws from rng.fork(i).
std::vector<EpisodeTrace> run_policy(const Simulator& sim, PolicyKind kind, int episodes, const RandomSource& rng,
                                     const NoiseProfile& noise, int max_steps = kMaxMetaSteps);

}  // namespace subtrack
