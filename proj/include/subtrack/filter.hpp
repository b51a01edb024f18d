#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "subtrack/affordance.hpp"
#include "subtrack/core.hpp"
#include "subtrack/random.hpp"

namespace subtrack {

enum class SigmaMode { kSignedSum, kAbsoluteSum };
enum class SkipPolicy { kNeutralFactor, kReuseLastBox };

std::string_view sigma_mode_name(SigmaMode mode);
SigmaMode parse_sigma_mode(std::string_view name);
std::string_view skip_policy_name(SkipPolicy policy);
SkipPolicy parse_skip_policy(std::string_view name);

struct FilterConfig {
  int particles = 100;
  double alpha = 0.7;   // velocity gain of the constant-velocity motion model
  double beta = 0.04;   // per-dimension noise standard deviation
  int tau = 10;         // decision interval, frames
  double threshold = 0.5;
  SigmaMode sigma_mode = SigmaMode::kSignedSum;
  SkipPolicy skip_policy = SkipPolicy::kNeutralFactor;

  // Throws Error(kInvalidArgument).
  void validate() const;
};

// Row-major K x N matrix.
class ParticleMatrix {
 public:
  ParticleMatrix() = default;
  ParticleMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t k, std::size_t i) { return data_[k * cols_ + i]; }
  double operator()(std::size_t k, std::size_t i) const { return data_[k * cols_ + i]; }
  std::span<const double> row(std::size_t k) const { return {data_.data() + k * cols_, cols_}; }
  std::span<double> row(std::size_t k) { return {data_.data() + k * cols_, cols_}; }

  bool operator==(const ParticleMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// `states` holds the newest hypotheses h_t, `prev` and `prev2` the two
// states before them. Weights live on the simplex.
struct ParticleSet {
  ParticleMatrix states;
  ParticleMatrix prev;
  ParticleMatrix prev2;
  std::vector<double> weights;

  std::size_t size() const { return states.rows(); }
  std::size_t dims() const { return states.cols(); }
};

// All K rows set to h0 with zero velocity, uniform weights.
ParticleSet init_particles(const HiddenState& h0, const FilterConfig& cfg);

// Constant-velocity step: each entry ~ Normal(h + alpha * (h - h_prev), beta^2),
// clamped to [0, 1]; history shifts by one.
void propagate(ParticleSet& ps, const FilterConfig& cfg, RandomSource& rng);

// Product over observed subgoals of h * d0 + (1 - h) * d1 (linear space).
double observation_factor(std::span<const double> h, std::span<const double> d0, std::span<const double> d1,
                          const std::vector<bool>& observed);

// Multiplies each weight by its observation factor (accumulated in log
// space) and renormalizes. Returns true when the total underflowed and the
// weights were reset to uniform. Throws Error(kDimensionMismatch).
bool weigh(ParticleSet& ps, std::span<const double> d0, std::span<const double> d1, const std::vector<bool>& observed);

HiddenState estimate(const ParticleSet& ps);

// Systematic resampling: u_k = (k + u) / K selects the particle whose
// half-open cumulative-weight interval [c_{i-1}, c_i) contains it.
std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u);
void resample_with_offset(ParticleSet& ps, double u);
void resample(ParticleSet& ps, RandomSource& rng);

double sigma(std::span<const double> delta, std::span<const double> weights, SigmaMode mode);

struct EstimateEntry {
  int t = 0;
  HiddenState h;
};

class EstimateBuffer {
 public:
  explicit EstimateBuffer(HiddenState h0);

  void push(int t, HiddenState h);
  const std::vector<EstimateEntry>& entries() const { return entries_; }
  const EstimateEntry& latest() const { return entries_.back(); }
  // Latest entry with entry.t <= t (entry 0 when none qualifies).
  const EstimateEntry& at_or_before(int t) const;

 private:
  std::vector<EstimateEntry> entries_;
};

struct RewardEvent {
  int t = 0;
  double r = 0.0;
  HiddenState h_now;
  HiddenState h_prev;
};

nlohmann::json reward_to_json(const RewardEvent& e);
RewardEvent reward_from_json(const nlohmann::json& j);

struct FilterDiagnostics {
  long frames = 0;
  long masked_observations = 0;
  long reused_boxes = 0;
  long underflow_resets = 0;
};

// Runs the subgoal-tracking loop over a stream of frames: propagate,
// weigh, estimate, buffer, resample, and reward on decision steps.
class SubgoalFilter {
 public:
  SubgoalFilter(std::vector<SubgoalSpec> subgoals, const HiddenState& h0, FilterConfig cfg);

  // Throws Error(kStaleFrame) if frame.t does not advance; provider errors
  // propagate unchanged.
  std::optional<RewardEvent> step(const TrackFrame& frame, AffordanceProvider& provider, RandomSource& rng);

  const HiddenState& current() const { return buffer_.latest().h; }
  const EstimateBuffer& buffer() const { return buffer_; }
  const ParticleSet& particles() const { return particles_; }
  const FilterDiagnostics& diagnostics() const { return diagnostics_; }
  const FilterConfig& config() const { return cfg_; }
  const std::vector<SubgoalSpec>& subgoals() const { return subgoals_; }

 private:
  std::optional<BBox> observed_box(const TrackFrame& frame, const ObjectId& id);

  std::vector<SubgoalSpec> subgoals_;
  std::vector<double> sigma_weights_;
  FilterConfig cfg_;
  ParticleSet particles_;
  EstimateBuffer buffer_;
  std::map<ObjectId, BBox> last_seen_;
  FilterDiagnostics diagnostics_;
};

}  // namespace subtrack
