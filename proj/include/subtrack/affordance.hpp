#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "subtrack/core.hpp"
#include "subtrack/random.hpp"
#include "subtrack/task.hpp"

namespace subtrack {

enum class Polarity { kUnsatisfied = 0, kSatisfied = 1 };

// Candidate target positions (pixels) for one subgoal and polarity.
struct AffordanceSampleSet {
  std::vector<Point> points;
};

// Throws Error(kMalformedResponse) when empty or when a point is non-finite
// or outside the image padded by 20% on every side.
void validate_sample_set(const AffordanceSampleSet& set, ImageSize image);

inline constexpr double kDistanceFloor = 1e-3;  // px
inline constexpr int kDefaultSamplesPerSet = 64;

// Frame-independent scene knowledge the scripted functions may use.
struct AffordanceGeometry {
  ImageSize image_size;
  BBox workspace_px;
  std::map<ObjectId, std::pair<double, double>> object_size_px;  // width, height
  std::optional<DrawerCalibration> drawer;

  static AffordanceGeometry from_task(const TaskDefinition& task);
};

// Pixel rectangle of target-center positions that satisfy the subgoal in
// `frame`. Degenerate (zero height) for the drawer-handle track.
// Throws Error(kMissingReference) if the reference box is absent.
BBox satisfied_region(const SubgoalSpec& subgoal, const TrackFrame& frame, const AffordanceGeometry& geometry);

// Margin separating the unsatisfied samples from the satisfied region:
// half the target box diagonal.
double unsatisfied_margin(const SubgoalSpec& subgoal, const TrackFrame& frame, const AffordanceGeometry& geometry);

AffordanceSampleSet scripted_affordance(const SubgoalSpec& subgoal, Polarity polarity, const TrackFrame& frame,
                                        const AffordanceGeometry& geometry, RandomSource& rng,
                                        int samples_per_set = kDefaultSamplesPerSet);

struct SubgoalDistances {
  double d0 = 0.0;
  double d1 = 0.0;
};

// Minimum Euclidean distance from the observed target center to each set,
// floored at kDistanceFloor. Throws Error(kMissingTarget) without a target box.
SubgoalDistances distances(const SubgoalSpec& subgoal, const TrackFrame& frame, const AffordanceSampleSet& set0,
                           const AffordanceSampleSet& set1);
double min_distance(Point observed, const AffordanceSampleSet& set);

// Provider query accounting. Only init queries and function generations
// are billed; per-frame evaluations of a generated function are free.
struct QueryLedger {
  long init_queries = 0;
  long function_generations = 0;
  long evaluations = 0;

  long billed() const { return init_queries + function_generations; }
};

// Stand-in for the generated affordance functions. The first sample() for a
// (subgoal, polarity) pair within an episode bills one function generation.
class AffordanceProvider {
 public:
  virtual ~AffordanceProvider() = default;

  void begin_episode(const std::string& episode_id);
  const std::string& episode_id() const { return episode_; }

  AffordanceSampleSet sample(const SubgoalSpec& subgoal, Polarity polarity, const TrackFrame& frame, RandomSource& rng);

  const QueryLedger& ledger() const { return ledger_; }
  void bill_init_queries(long n) { ledger_.init_queries += n; }

 protected:
  virtual AffordanceSampleSet evaluate(const SubgoalSpec& subgoal, Polarity polarity, const TrackFrame& frame,
                                       RandomSource& rng) = 0;

 private:
  std::string episode_;
  std::set<std::pair<int, int>> generated_;
  QueryLedger ledger_;
};

class ScriptedAffordanceProvider : public AffordanceProvider {
 public:
  explicit ScriptedAffordanceProvider(AffordanceGeometry geometry, int samples_per_set = kDefaultSamplesPerSet);

  const AffordanceGeometry& geometry() const { return geometry_; }

 protected:
  AffordanceSampleSet evaluate(const SubgoalSpec& subgoal, Polarity polarity, const TrackFrame& frame,
                               RandomSource& rng) override;

 private:
  AffordanceGeometry geometry_;
  int samples_per_set_;
};

}  // namespace subtrack
