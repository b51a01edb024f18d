// Command-line entry point: simulate, filter, eval, train, report.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "subtrack/config.hpp"
#include "subtrack/error.hpp"
#include "subtrack/evalkit.hpp"
#include "subtrack/provider.hpp"
#include "subtrack/rl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace subtrack;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kEndpointEnv = "T2_PROVIDER_ENDPOINT";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes artifacts under one directory and remembers their hashes for the
// manifest.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& rel, const std::string& content) {
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + p.string());
    out << content;
    files_[rel] = hex64(fnv1a64(content));
  }

  void manifest(const std::string& command, const RunConfig& config, const json& inputs = json::object()) {
    json cfg = run_config_to_json(config);
    cfg.erase("output_dir");
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["seed"] = config.seed;
    m["task_id"] = config.task_id;
    m["config"] = cfg;
    m["config_hash"] = hex64(fnv1a64(cfg.dump()));
    m["inputs"] = inputs;
    m["files"] = json::array();
    for (const auto& [path, hash] : files_) m["files"].push_back({{"path", path}, {"fnv1a64", hash}});
    write_raw("manifest.json", m.dump(2) + "\n");
  }

  const fs::path& dir() const { return dir_; }

 private:
  void write_raw(const std::string& rel, const std::string& content) {
    std::ofstream out(dir_ / rel, std::ios::binary);
    out << content;
  }

  fs::path dir_;
  std::map<std::string, std::string> files_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NoiseProfile parse_noise_name(const std::string& name) {
  if (name == "none") return NoiseProfile::none();
  if (name == "standard") return NoiseProfile::standard();
  throw ConfigError("--noise must be 'none' or 'standard'");
}

// Options shared by every subcommand; unset values leave the config alone.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> task;
  std::optional<std::string> output_dir;
  std::optional<int> frames_per_action;
  bool timing = false;

  json file_doc = json::object();

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON run config (validated against the run-config schema)");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--task", task, "Task id");
    app.add_option("--output-dir", output_dir, "Directory for artifacts");
    app.add_option("--frames-per-action", frames_per_action, "Frames rendered per meta-action")->check(CLI::PositiveNumber);
    app.add_flag("--timing", timing, "Record wall-clock columns (artifacts are then not reproducible)");
  }

  RunConfig resolve() {
    RunConfig c;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorCode::kConfig, "cannot open config file " + config_path);
      try {
        file_doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kConfig, config_path + ": " + e.what());
      }
      c = run_config_from_json(file_doc);
    }
    if (seed) c.seed = *seed;
    if (task) c.task_id = *task;
    if (output_dir) c.output_dir = *output_dir;
    if (frames_per_action) c.frames_per_action = *frames_per_action;
    if (c.provider.mode == "external" && !c.provider.endpoint) {
      if (const char* env = std::getenv(kEndpointEnv); env && *env) c.provider.endpoint = env;
    }
    return c;
  }
};

Simulator load_sim(const std::string& task, int frames_per_action) {
  try {
    return Simulator::load(task, frames_per_action);
  } catch (const Error& e) {
    throw ConfigError(std::string("task '") + task + "': " + e.what());
  }
}

std::shared_ptr<ProviderTransport> external_transport(const RunConfig& c) {
  if (!c.provider.endpoint) {
    throw ConfigError(std::string("external provider needs provider.endpoint or ") + kEndpointEnv);
  }
  try {
    return std::shared_ptr<ProviderTransport>(make_transport(*c.provider.endpoint));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::string csv_row(const std::vector<double>& values) {
  std::ostringstream s;
  for (std::size_t i = 0; i < values.size(); ++i) s << (i ? "," : "") << values[i];
  return s.str();
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  int episodes = 50;
  std::optional<std::string> policy;
  std::optional<std::string> noise;
};

int cmd_simulate(Common& common, const SimulateArgs& args) {
  RunConfig c = common.resolve();
  if (args.noise) c.noise = parse_noise_name(*args.noise);
  if (args.policy) c.eval.policy = parse_policy_kind(*args.policy);
  if (args.episodes < 1) throw ConfigError("--episodes must be >= 1");
  const Simulator sim = load_sim(c.task_id, c.frames_per_action);

  const auto traces = run_policy(sim, c.eval.policy, args.episodes, RandomSource(c.seed), c.noise);
  Artifacts out(c.output_dir);
  json episodes = json::array();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::ostringstream name;
    name << "traces/episode_" << std::setw(4) << std::setfill('0') << i << ".jsonl";
    std::ostringstream body;
    write_trace(traces[i], body);
    out.write(name.str(), body.str());
    const auto& last = traces[i].ground_truth->back();
    episodes.push_back({{"trace", name.str()}, {"frames", traces[i].frames.size()}, {"final_ground_truth", last}});
  }
  out.write("episodes.json", json{{"policy", policy_kind_name(c.eval.policy)}, {"episodes", episodes}}.dump(2) + "\n");
  out.manifest("simulate", c, json{{"episodes", args.episodes}, {"policy", policy_kind_name(c.eval.policy)}});
  std::cout << "wrote " << traces.size() << " traces to " << out.dir().string() << "\n";
  return 0;
}

// --- filter ---------------------------------------------------------------

struct FilterArgs {
  std::string trace_path;
  std::optional<std::string> sigma_mode;
  std::optional<std::string> skip_policy;
  std::optional<std::string> init;
  std::optional<double> flip_rate;
  std::optional<std::string> provider;
  std::optional<std::string> endpoint;
};

int cmd_filter(Common& common, const FilterArgs& args) {
  RunConfig c = common.resolve();
  try {
    if (args.sigma_mode) c.filter.sigma_mode = parse_sigma_mode(*args.sigma_mode);
    if (args.skip_policy) c.filter.skip_policy = parse_skip_policy(*args.skip_policy);
    if (args.init) c.init.mode = parse_init_mode(*args.init);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (args.flip_rate) c.init.flip_rate = *args.flip_rate;
  if (args.provider) c.provider.mode = *args.provider;
  if (args.endpoint) c.provider.endpoint = *args.endpoint;
  if (c.provider.mode == "external" && !c.provider.endpoint) {
    if (const char* env = std::getenv(kEndpointEnv); env && *env) c.provider.endpoint = env;
  }

  const EpisodeTrace trace = load_trace(args.trace_path);
  if (trace.frames.empty()) throw Error(ErrorCode::kMalformedTrace, "trace has no frames");
  c.task_id = trace.task_id;
  const Simulator sim = load_sim(trace.task_id, trace.decision_interval);
  FilterConfig cfg = c.filter;
  cfg.tau = trace.decision_interval;

  const RandomSource root(c.seed);
  RandomSource init_rng = root.fork(1);
  RandomSource filter_rng = root.fork(2);

  std::shared_ptr<ProviderTransport> transport;
  if (c.provider.mode == "external" || c.init.mode == InitMode::kExternal) transport = external_transport(c);

  InitResult init;
  if (c.init.mode == InitMode::kExternal) {
    init = init_from_external(*transport, trace.task_id, trace.frames.front());
  } else {
    const std::vector<int> truth =
        trace.ground_truth ? trace.ground_truth->front() : sim.ground_truth(sim.canonical_state());
    init = make_init(c.init.mode, sim.subgoals(), truth, init_rng, c.init.flip_rate);
  }

  std::unique_ptr<AffordanceProvider> provider;
  if (c.provider.mode == "external") {
    provider = std::make_unique<ExternalAffordanceProvider>(transport);
  } else {
    provider = std::make_unique<ScriptedAffordanceProvider>(sim.geometry());
  }
  provider->begin_episode(fs::path(args.trace_path).stem().string());
  provider->bill_init_queries(init.queries_used);

  SubgoalFilter filter(init.subgoals, init.h0, cfg);
  const std::size_t n = init.subgoals.size();
  std::ostringstream estimates;
  estimates << "t";
  for (std::size_t i = 1; i <= n; ++i) estimates << ",h" << i;
  for (std::size_t i = 1; i <= n; ++i) estimates << ",b" << i;
  estimates << "\n";
  auto log_estimate = [&](int t, const HiddenState& h) {
    std::vector<double> row(h.values().begin(), h.values().end());
    for (int b : binarize(h, cfg.threshold)) row.push_back(b);
    estimates << t << ',' << csv_row(row) << "\n";
  };
  log_estimate(trace.frames.front().t, init.h0);

  std::ostringstream rewards;
  long matches = 0;
  long total = 0;
  auto score = [&](std::size_t k) {
    if (!trace.ground_truth) return;
    const auto est = binarize(filter.current(), cfg.threshold);
    const auto& gt = (*trace.ground_truth)[k];
    for (std::size_t i = 0; i < gt.size() && i < est.size(); ++i) matches += est[i] == gt[i];
    total += static_cast<long>(gt.size());
  };
  score(0);
  int events = 0;
  double reward_sum = 0.0;
  for (std::size_t k = 0; k < trace.frames.size(); ++k) {
    const TrackFrame& frame = trace.frames[k];
    if (frame.t <= 0) continue;
    if (auto ev = filter.step(frame, *provider, filter_rng)) {
      rewards << reward_to_json(*ev).dump() << "\n";
      ++events;
      reward_sum += ev->r;
    }
    log_estimate(frame.t, filter.current());
    score(k);
  }

  json summary;
  summary["task_id"] = trace.task_id;
  summary["frames"] = trace.frames.size();
  summary["reward_events"] = events;
  summary["reward_sum"] = reward_sum;
  summary["sigma_mode"] = sigma_mode_name(cfg.sigma_mode);
  summary["init_mode"] = init_mode_name(c.init.mode);
  summary["h0"] = std::vector<double>(init.h0.values().begin(), init.h0.values().end());
  summary["queries"] = {{"init", provider->ledger().init_queries},
                        {"function_generations", provider->ledger().function_generations},
                        {"evaluations", provider->ledger().evaluations},
                        {"billed", provider->ledger().billed()}};
  const auto& d = filter.diagnostics();
  summary["diagnostics"] = {{"masked_observations", d.masked_observations},
                            {"reused_boxes", d.reused_boxes},
                            {"underflow_resets", d.underflow_resets}};
  if (total > 0) summary["reward_accuracy"] = static_cast<double>(matches) / static_cast<double>(total);

  Artifacts out(c.output_dir);
  out.write("rewards.jsonl", rewards.str());
  out.write("estimates.csv", estimates.str());
  out.write("summary.json", summary.dump(2) + "\n");
  out.manifest("filter", c, json{{"trace_fnv1a64", hex64(fnv1a64(read_file(args.trace_path)))}});
  std::cout << "filtered " << trace.frames.size() << " frames, " << events << " reward events\n";
  return 0;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  bool ablation = false;
  bool sweep = false;
  std::optional<int> episodes;
  std::optional<std::string> policy;
  std::optional<std::string> noise;
  std::vector<int> strides;
};

int cmd_eval(Common& common, const EvalArgs& args) {
  RunConfig c = common.resolve();
  if (!args.ablation && !args.sweep) throw ConfigError("eval needs --ablation-grid and/or --sweep");
  if (args.episodes) c.eval.episodes = *args.episodes;
  if (args.policy) c.eval.policy = parse_policy_kind(*args.policy);
  if (!args.strides.empty()) c.eval.strides = args.strides;
  // Evaluations default to the standard perception noise unless the config
  // file or a flag says otherwise.
  if (args.noise) {
    c.noise = parse_noise_name(*args.noise);
  } else if (!common.file_doc.contains("noise")) {
    c.noise = NoiseProfile::standard();
  }
  if (c.eval.episodes < 1) throw ConfigError("--episodes must be >= 1");

  EvalOptions options;
  options.episodes = c.eval.episodes;
  options.policy = c.eval.policy;
  options.noise = c.noise;
  options.flip_rate = c.init.flip_rate;
  options.baseline_error_rate = c.eval.baseline_error_rate;
  options.filter = c.filter;
  options.seed = c.seed;
  std::shared_ptr<ProviderTransport> transport;
  if (c.provider.mode == "external") {
    transport = external_transport(c);
    options.make_provider = [transport] { return std::make_unique<ExternalAffordanceProvider>(transport); };
  }

  Artifacts out(c.output_dir);
  json summary;
  const RandomSource root(c.seed);
  if (args.ablation) {
    const Simulator sim = load_sim(c.task_id, c.frames_per_action);
    const EvalReport report = ablation_grid(sim, options, root.fork(1));
    std::ostringstream rows;
    std::ostringstream cells;
    write_report_csv(report, rows, common.timing);
    write_summary_csv(report.summarize(), cells, common.timing);
    out.write("ablation.csv", rows.str());
    out.write("ablation_summary.csv", cells.str());
    summary["ablation"] = summary_json(report, common.timing);
  }
  if (args.sweep) {
    const Simulator sim = load_sim(c.task_id, c.eval.sweep_frames_per_action);
    const EvalReport report = hidden_length_sweep(sim, c.eval.strides, options, root.fork(2));
    std::ostringstream rows;
    std::ostringstream cells;
    write_report_csv(report, rows, common.timing);
    write_summary_csv(report.summarize(), cells, common.timing);
    out.write("sweep.csv", rows.str());
    out.write("sweep_summary.csv", cells.str());
    summary["sweep"] = summary_json(report, common.timing);
  }
  out.write("summary.json", summary.dump(2) + "\n");
  out.manifest("eval", c, json{{"ablation_grid", args.ablation}, {"sweep", args.sweep}});
  std::cout << "wrote evaluation reports to " << out.dir().string() << "\n";
  return 0;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string reward = "filter";
  std::optional<int> episodes;
  std::optional<double> failure_rate;
  std::optional<std::string> noise;
  int recovery_trials = 20;
};

int cmd_train(Common& common, const TrainArgs& args) {
  RunConfig c = common.resolve();
  RewardSource source;
  try {
    source = parse_reward_source(args.reward);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (args.episodes) c.agent.episodes = *args.episodes;
  if (args.failure_rate) c.agent.failure_rate = *args.failure_rate;
  if (args.noise) c.noise = parse_noise_name(*args.noise);
  try {
    c.agent.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.provider.mode == "external") throw ConfigError("training uses the scripted provider only");
  const Simulator sim = load_sim(c.task_id, c.frames_per_action);

  TrainOptions options;
  options.filter = c.filter;
  options.noise = c.noise;
  options.timing = common.timing;
  const RandomSource root(c.seed);
  const TrainResult result = train(sim, c.agent, source, options, root.fork(1));

  Artifacts out(c.output_dir);
  std::ostringstream curve;
  write_curve_csv(result.curve, curve);
  out.write("curve.csv", curve.str());
  out.write("policy.json", result.q.to_json().dump(1) + "\n");

  json summary;
  summary["reward_source"] = reward_source_name(source);
  summary["episodes"] = c.agent.episodes;
  summary["final_completion_ratio"] = result.final_ratio();
  summary["queries"] = result.curve.empty() ? 0 : result.curve.back().queries;
  summary["states"] = result.q.size();
  json recovery = json::array();
  if (args.recovery_trials > 0) {
    GreedyPolicy greedy(result.q);
    for (FailureKind kind : sim.task().failures) {
      const RecoveryResult r =
          evaluate_recovery(sim, greedy, FailureScript::make(kind), args.recovery_trials, root.fork(2));
      recovery.push_back({{"failure", failure_kind_name(kind)},
                          {"trials", r.trials},
                          {"successes", r.successes},
                          {"success_rate", r.success_rate},
                          {"mean_meta_steps", r.mean_meta_steps}});
    }
  }
  summary["recovery"] = recovery;
  out.write("summary.json", summary.dump(2) + "\n");
  out.manifest("train", c, json{{"reward", args.reward}, {"recovery_trials", args.recovery_trials}});
  std::cout << "final completion ratio " << result.final_ratio() << "\n";
  return 0;
}

// --- report ---------------------------------------------------------------

int cmd_report(Common& common, const std::string& run_dir) {
  RunConfig c = common.resolve();
  if (!fs::is_directory(run_dir)) throw ConfigError("run directory not found: " + run_dir);
  const fs::path dest = common.output_dir ? fs::path(*common.output_dir) : fs::path(run_dir);

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(run_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::ostringstream aggregate;
  aggregate << "source,method,init_mode,stride,episodes,mean_accuracy,std_accuracy,mean_queries\n";
  json evaluations = json::array();
  json curves = json::array();
  for (const auto& f : files) {
    const std::string rel = fs::relative(f, run_dir).generic_string();
    std::ifstream in(f);
    std::string header;
    std::getline(in, header);
    in.seekg(0);
    if (header.rfind("task,method,init_mode,stride", 0) == 0) {
      const EvalReport report = read_report_csv(in);
      json cells = json::array();
      for (const auto& s : report.summarize()) {
        aggregate << rel << ',' << s.method << ',' << s.init_mode << ',' << s.stride << ',' << s.episodes << ','
                  << s.mean_accuracy << ',' << s.std_accuracy << ',' << s.mean_queries << "\n";
        cells.push_back({{"method", s.method},
                         {"init_mode", s.init_mode},
                         {"stride", s.stride},
                         {"mean_accuracy", s.mean_accuracy}});
      }
      evaluations.push_back({{"source", rel}, {"cells", cells}});
    } else if (header.rfind("episode,completion_ratio", 0) == 0) {
      std::vector<CurvePoint> points;
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string ep, ratio, queries;
        std::getline(ss, ep, ',');
        std::getline(ss, ratio, ',');
        std::getline(ss, queries, ',');
        try {
          points.push_back(CurvePoint{std::stoi(ep), std::stod(ratio), std::stol(queries), std::nullopt});
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidArgument, rel + ": malformed curve row");
        }
      }
      TrainResult tr;
      tr.curve = points;
      curves.push_back({{"source", rel},
                        {"episodes", points.size()},
                        {"final_completion_ratio", tr.final_ratio()},
                        {"queries", points.empty() ? 0 : points.back().queries}});
    }
  }

  Artifacts out(dest);
  out.write("aggregate.csv", aggregate.str());
  out.write("aggregate.json", json{{"evaluations", evaluations}, {"curves", curves}}.dump(2) + "\n");
  out.manifest("report", c, json{{"sources", files.size()}});
  std::cout << "aggregated " << evaluations.size() << " evaluation reports and " << curves.size() << " curves\n";
  return 0;
}

bool is_config_error(ErrorCode code) {
  return code == ErrorCode::kConfig || code == ErrorCode::kUnknownTask || code == ErrorCode::kMalformedTaskFile;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subgoal tracking rewards from tracked object boxes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Common common;

  auto* sim_cmd = app.add_subcommand("simulate", "Roll out policies in the tabletop simulator and write traces");
  SimulateArgs sim_args;
  common.attach(*sim_cmd);
  sim_cmd->add_option("--episodes", sim_args.episodes, "Number of episodes");
  sim_cmd->add_option("--policy", sim_args.policy, "expert, random or mixed")
      ->check(CLI::IsMember({"expert", "random", "mixed"}));
  sim_cmd->add_option("--noise", sim_args.noise, "Perception noise: none or standard")
      ->check(CLI::IsMember({"none", "standard"}));

  auto* filter_cmd = app.add_subcommand("filter", "Run the subgoal filter over a trace file");
  FilterArgs filter_args;
  common.attach(*filter_cmd);
  filter_cmd->add_option("trace", filter_args.trace_path, "Trace file (.jsonl)")->required();
  filter_cmd->add_option("--sigma-mode", filter_args.sigma_mode, "signed or absolute");
  filter_cmd->add_option("--skip-policy", filter_args.skip_policy, "neutral or reuse_last_box");
  filter_cmd->add_option("--init", filter_args.init, "gt, flip, random or external");
  filter_cmd->add_option("--flip-rate", filter_args.flip_rate, "Bit-flip rate for --init flip")
      ->check(CLI::Range(0.0, 1.0));
  filter_cmd->add_option("--provider", filter_args.provider, "scripted or external")
      ->check(CLI::IsMember({"scripted", "external"}));
  filter_cmd->add_option("--endpoint", filter_args.endpoint, "Provider endpoint: http://... or stdio:<command>");

  auto* eval_cmd = app.add_subcommand("eval", "Reward-accuracy ablations and hidden-length sweeps");
  EvalArgs eval_args;
  common.attach(*eval_cmd);
  eval_cmd->add_flag("--ablation-grid", eval_args.ablation, "Init mode x filter on/off grid plus per-step baseline");
  eval_cmd->add_flag("--sweep", eval_args.sweep, "Frame-stride sweep");
  eval_cmd->add_option("--episodes", eval_args.episodes, "Episodes per evaluation");
  eval_cmd->add_option("--policy", eval_args.policy, "expert, random or mixed")
      ->check(CLI::IsMember({"expert", "random", "mixed"}));
  eval_cmd->add_option("--noise", eval_args.noise, "none or standard")->check(CLI::IsMember({"none", "standard"}));
  eval_cmd->add_option("--strides", eval_args.strides, "Strides for --sweep")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "Tabular Q-learning with filter or ground-truth rewards");
  TrainArgs train_args;
  common.attach(*train_cmd);
  train_cmd->add_option("--reward", train_args.reward, "filter, gt or zero")
      ->check(CLI::IsMember({"filter", "gt", "zero"}));
  train_cmd->add_option("--episodes", train_args.episodes, "Training episodes");
  train_cmd->add_option("--failure-rate", train_args.failure_rate, "Fraction of episodes with a failure armed")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--noise", train_args.noise, "none or standard")->check(CLI::IsMember({"none", "standard"}));
  train_cmd->add_option("--recovery-trials", train_args.recovery_trials, "Recovery trials per failure kind (0 = skip)")
      ->check(CLI::NonNegativeNumber);

  auto* report_cmd = app.add_subcommand("report", "Aggregate evaluation reports and learning curves in a directory");
  std::string report_dir;
  common.attach(*report_cmd);
  report_cmd->add_option("dir", report_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim_cmd) return cmd_simulate(common, sim_args);
    if (*filter_cmd) return cmd_filter(common, filter_args);
    if (*eval_cmd) return cmd_eval(common, eval_args);
    if (*train_cmd) return cmd_train(common, train_args);
    if (*report_cmd) return cmd_report(common, report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << (is_config_error(e.code()) ? "config error: " : "error: ") << e.what() << "\n";
    return is_config_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
