#include "subtrack/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <istream>
#include <sstream>

#include "subtrack/error.hpp"

namespace subtrack {

using nlohmann::json;

namespace {

const std::vector<std::vector<int>>& checked_truth(const EpisodeTrace& trace) {
  if (!trace.ground_truth) throw Error(ErrorCode::kMissingGroundTruth, "trace carries no ground truth");
  if (trace.ground_truth->size() != trace.frames.size()) {
    throw Error(ErrorCode::kMissingGroundTruth, "ground truth must have one entry per frame");
  }
  return *trace.ground_truth;
}

long count_matches(const std::vector<int>& estimate, const std::vector<int>& truth) {
  if (estimate.size() != truth.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "estimate and ground truth differ in length");
  }
  long m = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) m += estimate[i] == truth[i];
  return m;
}

std::unique_ptr<AffordanceProvider> new_provider(const Simulator& sim, const EvalOptions& options) {
  if (options.make_provider) return options.make_provider();
  return std::make_unique<ScriptedAffordanceProvider>(sim.geometry());
}

std::string episode_name(const EpisodeTrace& trace, int episode) {
  return trace.task_id + "-" + std::to_string(episode);
}

int mode_stream(InitMode mode) { return static_cast<int>(mode); }

struct CellResult {
  std::vector<EvalRow> rows;
  long billed = 0;
};

}  // namespace

AccuracyRun reward_accuracy(const EpisodeTrace& trace, const FilterConfig& cfg, AffordanceProvider& provider,
                            const InitResult& init, RandomSource& rng, int stride, bool filter_on) {
  const auto& truth = checked_truth(trace);
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  const long billed_before = provider.ledger().billed();
  provider.bill_init_queries(init.queries_used);

  AccuracyRun run;
  std::optional<SubgoalFilter> filter;
  if (filter_on) filter.emplace(init.subgoals, init.h0, cfg);
  std::vector<int> estimate = binarize(init.h0, cfg.threshold);

  for (std::size_t k = 0; k < trace.frames.size(); ++k) {
    const TrackFrame& frame = trace.frames[k];
    if (filter && frame.t > 0 && frame.t % stride == 0) {
      const auto start = std::chrono::steady_clock::now();
      filter->step(frame, provider, rng);
      run.wall_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      estimate = binarize(filter->current(), cfg.threshold);
      ++run.frames_consumed;
    }
    run.matches += count_matches(estimate, truth[k]);
    run.total += static_cast<long>(truth[k].size());
  }
  run.accuracy = run.total > 0 ? static_cast<double>(run.matches) / static_cast<double>(run.total) : 0.0;
  run.queries = provider.ledger().billed() - billed_before;
  return run;
}

BaselineRun per_step_oracle_baseline(const EpisodeTrace& trace, double error_rate, RandomSource& rng) {
  const auto& truth = checked_truth(trace);
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "error_rate must lie in [0, 1]");
  }
  const int tau = std::max(1, trace.decision_interval);
  BaselineRun run;
  long matches = 0;
  long total = 0;
  for (std::size_t k = 0; k < trace.frames.size(); ++k) {
    if (trace.frames[k].t % tau != 0) continue;
    ++run.decision_frames;
    for (std::size_t i = 0; i < truth[k].size(); ++i) {
      const bool flip = error_rate > 0.0 && rng.bernoulli(error_rate);
      matches += !flip;
      ++total;
      ++run.queries;
    }
  }
  run.accuracy = total > 0 ? static_cast<double>(matches) / static_cast<double>(total) : 0.0;
  return run;
}

InitResult make_init(InitMode mode, const std::vector<SubgoalSpec>& subgoals, const std::vector<int>& truth,
                     RandomSource& rng, double flip_rate) {
  switch (mode) {
    case InitMode::kGroundTruth:
      return init_from_ground_truth(subgoals, truth, rng, 0.0);
    case InitMode::kFlip:
      return init_from_ground_truth(subgoals, truth, rng, flip_rate);
    case InitMode::kRandom: {
      InitResult r = init_from_ground_truth(subgoals, truth, rng, 0.5);
      r.queries_used = 0;
      return r;
    }
    case InitMode::kExternal:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument, "external init needs a provider transport");
}

std::vector<EpisodeTrace> evaluation_traces(const Simulator& sim, const EvalOptions& options,
                                            const RandomSource& rng) {
  if (options.episodes < 1) throw Error(ErrorCode::kInvalidArgument, "episodes must be >= 1");
  return run_policy(sim, options.policy, options.episodes, rng.fork(1), options.noise);
}

EvalReport ablation_grid(const Simulator& sim, const EvalOptions& options, const RandomSource& rng) {
  const auto traces = evaluation_traces(sim, options, rng);
  const auto& subgoals = sim.subgoals();
  FilterConfig cfg = options.filter;
  cfg.tau = sim.frames_per_action();

  auto run_cell = [&](InitMode mode, bool filter_on) {
    CellResult out;
    auto provider = new_provider(sim, options);
    for (std::size_t ep = 0; ep < traces.size(); ++ep) {
      const EpisodeTrace& trace = traces[ep];
      RandomSource init_rng = rng.fork(100 + mode_stream(mode)).fork(ep);
      RandomSource filter_rng = rng.fork(200 + mode_stream(mode)).fork(ep);
      const InitResult init = make_init(mode, subgoals, checked_truth(trace).front(), init_rng, options.flip_rate);
      provider->begin_episode(episode_name(trace, static_cast<int>(ep)));
      const AccuracyRun run = reward_accuracy(trace, cfg, *provider, init, filter_rng, 1, filter_on);
      out.rows.push_back(EvalRow{sim.task().task_id, filter_on ? "pf" : "no_pf", std::string(init_mode_name(mode)), 1,
                                 static_cast<int>(ep), options.seed, run.accuracy, run.queries, run.wall_ms});
    }
    out.billed = provider->ledger().billed();
    return out;
  };

  std::vector<std::future<CellResult>> cells;
  for (bool filter_on : {true, false}) {
    for (InitMode mode : {InitMode::kGroundTruth, InitMode::kFlip, InitMode::kRandom}) {
      cells.push_back(std::async(std::launch::async, run_cell, mode, filter_on));
    }
  }

  EvalReport report;
  for (auto& f : cells) {
    CellResult c = f.get();
    report.rows.insert(report.rows.end(), c.rows.begin(), c.rows.end());
    report.provider_billed += c.billed;
  }
  for (std::size_t ep = 0; ep < traces.size(); ++ep) {
    RandomSource brng = rng.fork(300).fork(ep);
    const BaselineRun b = per_step_oracle_baseline(traces[ep], options.baseline_error_rate, brng);
    report.rows.push_back(EvalRow{sim.task().task_id, "per_step", "-", 1, static_cast<int>(ep), options.seed,
                                  b.accuracy, b.queries, 0.0});
  }
  return report;
}

EvalReport hidden_length_sweep(const Simulator& sim, const std::vector<int>& strides, const EvalOptions& options,
                               const RandomSource& rng) {
  for (int s : strides) {
    if (s < 1) throw Error(ErrorCode::kInvalidArgument, "strides must be >= 1");
  }
  const auto traces = evaluation_traces(sim, options, rng);
  FilterConfig cfg = options.filter;
  cfg.tau = sim.frames_per_action();

  EvalReport report;
  for (int stride : strides) {
    auto provider = new_provider(sim, options);
    for (std::size_t ep = 0; ep < traces.size(); ++ep) {
      const EpisodeTrace& trace = traces[ep];
      RandomSource init_rng = rng.fork(400).fork(ep);
      RandomSource filter_rng = rng.fork(500).fork(ep);
      const InitResult init =
          make_init(InitMode::kGroundTruth, sim.subgoals(), checked_truth(trace).front(), init_rng, 0.0);
      provider->begin_episode(episode_name(trace, static_cast<int>(ep)));
      const AccuracyRun run = reward_accuracy(trace, cfg, *provider, init, filter_rng, stride, true);
      report.rows.push_back(EvalRow{sim.task().task_id, "pf", "gt", stride, static_cast<int>(ep), options.seed,
                                    run.accuracy, run.queries, run.wall_ms});
    }
    report.provider_billed += provider->ledger().billed();
  }
  return report;
}

std::vector<CellSummary> EvalReport::summarize() const {
  std::vector<CellSummary> cells;
  std::vector<std::vector<double>> acc;
  for (const auto& r : rows) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSummary& c) {
      return c.method == r.method && c.init_mode == r.init_mode && c.stride == r.stride;
    });
    if (it == cells.end()) {
      cells.push_back(CellSummary{r.method, r.init_mode, r.stride});
      acc.emplace_back();
      it = std::prev(cells.end());
    }
    const std::size_t i = static_cast<std::size_t>(it - cells.begin());
    ++it->episodes;
    acc[i].push_back(r.reward_accuracy);
    it->mean_queries += static_cast<double>(r.queries);
    it->total_wall_ms += r.wall_ms;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double n = static_cast<double>(acc[i].size());
    double mean = 0.0;
    for (double a : acc[i]) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : acc[i]) var += (a - mean) * (a - mean);
    cells[i].mean_accuracy = mean;
    cells[i].std_accuracy = acc[i].size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    cells[i].mean_queries /= n;
  }
  return cells;
}

std::optional<CellSummary> EvalReport::cell(const std::string& method, const std::string& init_mode,
                                            int stride) const {
  for (auto& c : summarize()) {
    if (c.method == method && c.init_mode == init_mode && c.stride == stride) return c;
  }
  return std::nullopt;
}

void write_report_csv(const EvalReport& report, std::ostream& out, bool timing) {
  out << "task,method,init_mode,stride,episode,seed,reward_accuracy,queries,wall_ms\n";
  for (const auto& r : report.rows) {
    out << r.task << ',' << r.method << ',' << r.init_mode << ',' << r.stride << ',' << r.episode << ',' << r.seed
        << ',' << r.reward_accuracy << ',' << r.queries << ',';
    if (timing) out << r.wall_ms;
    out << '\n';
  }
}

void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out, bool timing) {
  out << "method,init_mode,stride,episodes,mean_accuracy,std_accuracy,mean_queries,total_wall_ms\n";
  for (const auto& c : cells) {
    out << c.method << ',' << c.init_mode << ',' << c.stride << ',' << c.episodes << ',' << c.mean_accuracy << ','
        << c.std_accuracy << ',' << c.mean_queries << ',';
    if (timing) out << c.total_wall_ms;
    out << '\n';
  }
}

json summary_json(const EvalReport& report, bool timing) {
  json cells = json::array();
  for (const auto& c : report.summarize()) {
    json j{{"method", c.method},
           {"init_mode", c.init_mode},
           {"stride", c.stride},
           {"episodes", c.episodes},
           {"mean_accuracy", c.mean_accuracy},
           {"std_accuracy", c.std_accuracy},
           {"mean_queries", c.mean_queries}};
    if (timing) j["total_wall_ms"] = c.total_wall_ms;
    cells.push_back(std::move(j));
  }
  return json{{"cells", cells}, {"rows", report.rows.size()}, {"provider_billed", report.provider_billed}};
}

EvalReport read_report_csv(std::istream& in) {
  EvalReport report;
  std::string line;
  if (!std::getline(in, line) || line.rfind("task,method,init_mode,stride,episode,seed,reward_accuracy", 0) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "not an evaluation report (bad header)");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 8) f.emplace_back();
    if (f.size() != 9) throw Error(ErrorCode::kInvalidArgument, "line " + std::to_string(lineno) + ": expected 9 fields");
    try {
      EvalRow r{f[0], f[1], f[2], std::stoi(f[3]), std::stoi(f[4]), std::stoull(f[5]), std::stod(f[6]),
                std::stol(f[7]), f[8].empty() ? 0.0 : std::stod(f[8])};
      report.rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "line " + std::to_string(lineno) + ": bad number");
    }
  }
  return report;
}

}  // namespace subtrack
