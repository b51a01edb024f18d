#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "subtrack/affordance.hpp"
#include "subtrack/filter.hpp"
#include "subtrack/initializer.hpp"
#include "subtrack/perception.hpp"
#include "subtrack/sim.hpp"

namespace subtrack {

struct AccuracyRun {
  double accuracy = 0.0;
  long matches = 0;
  long total = 0;          // frames x subgoals
  long queries = 0;        // init queries + function generations billed
  int frames_consumed = 0;
  double wall_ms = 0.0;    // time spent stepping the filter
};

// Runs the filter over every `stride`-th frame (t > 0, t % stride == 0) and
// scores binarize(ĥ) against ground truth at every frame of the trace,
// holding the latest estimate between consumed frames. With the filter off
// the initial estimate is held for the whole episode. Bills the init
// queries to `provider`; the caller starts the provider episode.
// Throws Error(kMissingGroundTruth).
AccuracyRun reward_accuracy(const EpisodeTrace& trace, const FilterConfig& cfg, AffordanceProvider& provider,
                            const InitResult& init, RandomSource& rng, int stride = 1, bool filter_on = true);

struct BaselineRun {
  double accuracy = 0.0;
  long queries = 0;
  int decision_frames = 0;
};

// Per-step query baseline: at every decision frame (t % decision_interval
// == 0, including t = 0) each subgoal bit of the ground truth is reported
// with probability 1 - error_rate, costing one query per subgoal.
BaselineRun per_step_oracle_baseline(const EpisodeTrace& trace, double error_rate, RandomSource& rng);

// Initial estimate for an ablation cell. Random init draws every bit
// uniformly and bills no queries.
InitResult make_init(InitMode mode, const std::vector<SubgoalSpec>& subgoals, const std::vector<int>& truth,
                     RandomSource& rng, double flip_rate);

struct EvalRow {
  std::string task;
  std::string method;     // "pf", "no_pf" or "per_step"
  std::string init_mode;  // "gt", "flip", "random", "-"
  int stride = 1;
  int episode = 0;
  std::uint64_t seed = 0;
  double reward_accuracy = 0.0;
  long queries = 0;
  double wall_ms = 0.0;
};

struct CellSummary {
  std::string method;
  std::string init_mode;
  int stride = 1;
  int episodes = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_queries = 0.0;
  double total_wall_ms = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  long provider_billed = 0;  // summed over every provider instance used

  std::vector<CellSummary> summarize() const;
  std::optional<CellSummary> cell(const std::string& method, const std::string& init_mode, int stride = 1) const;
};

using ProviderFactory = std::function<std::unique_ptr<AffordanceProvider>()>;

struct EvalOptions {
  int episodes = 50;
  PolicyKind policy = PolicyKind::kMixed;
  NoiseProfile noise = NoiseProfile::standard();
  double flip_rate = 0.2;
  double baseline_error_rate = 0.2;
  FilterConfig filter;
  std::uint64_t seed = 0;  // recorded in the rows
  ProviderFactory make_provider;  // scripted provider when empty
};

// Rolls out the episode set used by every cell of an evaluation.
std::vector<EpisodeTrace> evaluation_traces(const Simulator& sim, const EvalOptions& options,
                                            const RandomSource& rng);

// {gt, flip, random} x {pf, no_pf} on one shared trace set, plus the
// per-step query baseline.
EvalReport ablation_grid(const Simulator& sim, const EvalOptions& options, const RandomSource& rng);

// PF with ground-truth init at each stride.
EvalReport hidden_length_sweep(const Simulator& sim, const std::vector<int>& strides, const EvalOptions& options,
                               const RandomSource& rng);

// Fixed CSV layout; wall_ms is written only when `timing` is set.
void write_report_csv(const EvalReport& report, std::ostream& out, bool timing);
void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out, bool timing);
nlohmann::json summary_json(const EvalReport& report, bool timing);
// Reads rows written by write_report_csv. Throws Error(kInvalidArgument).
EvalReport read_report_csv(std::istream& in);

}  // namespace subtrack
