#include "subtrack/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "subtrack/error.hpp"

namespace subtrack {

std::string_view sigma_mode_name(SigmaMode mode) {
  return mode == SigmaMode::kSignedSum ? "signed" : "absolute";
}

SigmaMode parse_sigma_mode(std::string_view name) {
  if (name == "signed") return SigmaMode::kSignedSum;
  if (name == "absolute") return SigmaMode::kAbsoluteSum;
  throw Error(ErrorCode::kInvalidArgument, "sigma mode must be 'signed' or 'absolute'");
}

std::string_view skip_policy_name(SkipPolicy policy) {
  return policy == SkipPolicy::kNeutralFactor ? "neutral" : "reuse_last_box";
}

SkipPolicy parse_skip_policy(std::string_view name) {
  if (name == "neutral") return SkipPolicy::kNeutralFactor;
  if (name == "reuse_last_box") return SkipPolicy::kReuseLastBox;
  throw Error(ErrorCode::kInvalidArgument, "skip policy must be 'neutral' or 'reuse_last_box'");
}

void FilterConfig::validate() const {
  if (particles < 2) throw Error(ErrorCode::kInvalidArgument, "particle count must be >= 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  if (!(beta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "beta must be positive");
  if (tau < 1) throw Error(ErrorCode::kInvalidArgument, "tau must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
}

ParticleSet init_particles(const HiddenState& h0, const FilterConfig& cfg) {
  const std::size_t k = static_cast<std::size_t>(cfg.particles);
  ParticleSet ps;
  ps.states = ParticleMatrix(k, h0.size());
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t i = 0; i < h0.size(); ++i) ps.states(r, i) = h0[i];
  }
  ps.prev = ps.states;
  ps.prev2 = ps.states;
  ps.weights.assign(k, 1.0 / static_cast<double>(k));
  return ps;
}

void propagate(ParticleSet& ps, const FilterConfig& cfg, RandomSource& rng) {
  ParticleMatrix next(ps.size(), ps.dims());
  for (std::size_t k = 0; k < ps.size(); ++k) {
    for (std::size_t i = 0; i < ps.dims(); ++i) {
      const double h = ps.states(k, i);
      const double mu = h + cfg.alpha * (h - ps.prev(k, i));
      next(k, i) = std::clamp(rng.normal(mu, cfg.beta), 0.0, 1.0);
    }
  }
  ps.prev2 = std::move(ps.prev);
  ps.prev = std::move(ps.states);
  ps.states = std::move(next);
}

namespace {

void check_dims(const ParticleSet& ps, std::size_t d0, std::size_t d1, std::size_t mask) {
  if (d0 != ps.dims() || d1 != ps.dims() || mask != ps.dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "distance vectors must match the particle dimension");
  }
}

}  // namespace

double observation_factor(std::span<const double> h, std::span<const double> d0, std::span<const double> d1,
                          const std::vector<bool>& observed) {
  double w = 1.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (observed[i]) w *= h[i] * d0[i] + (1.0 - h[i]) * d1[i];
  }
  return w;
}

bool weigh(ParticleSet& ps, std::span<const double> d0, std::span<const double> d1, const std::vector<bool>& observed) {
  check_dims(ps, d0.size(), d1.size(), observed.size());
  const std::size_t k_count = ps.size();
  std::vector<double> log_w(k_count);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    double lw = std::log(ps.weights[k]);
    for (std::size_t i = 0; i < ps.dims(); ++i) {
      if (!observed[i]) continue;
      const double h = ps.states(k, i);
      lw += std::log(h * d0[i] + (1.0 - h) * d1[i]);
    }
    log_w[k] = lw;
    if (lw > max_log) max_log = lw;
  }
  double total = 0.0;
  if (std::isfinite(max_log)) {
    for (std::size_t k = 0; k < k_count; ++k) {
      ps.weights[k] = std::exp(log_w[k] - max_log);
      total += ps.weights[k];
    }
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(ps.weights.begin(), ps.weights.end(), 1.0 / static_cast<double>(k_count));
    return true;
  }
  for (double& w : ps.weights) w /= total;
  return false;
}

HiddenState estimate(const ParticleSet& ps) {
  std::vector<double> h(ps.dims(), 0.0);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    for (std::size_t i = 0; i < ps.dims(); ++i) h[i] += ps.weights[k] * ps.states(k, i);
  }
  return HiddenState(std::move(h));
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, double u) {
  const std::size_t k_count = weights.size();
  std::vector<double> cumulative(k_count);
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  const double total = cumulative.back();
  for (double& c : cumulative) c /= total;
  cumulative.back() = 1.0;

  std::vector<std::size_t> parents(k_count);
  std::size_t i = 0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double uk = (static_cast<double>(k) + u) / static_cast<double>(k_count);
    while (i + 1 < k_count && uk >= cumulative[i]) ++i;
    parents[k] = i;
  }
  return parents;
}

void resample_with_offset(ParticleSet& ps, double u) {
  const auto parents = systematic_indices(ps.weights, u);
  ParticleSet out;
  out.states = ParticleMatrix(ps.size(), ps.dims());
  out.prev = ParticleMatrix(ps.size(), ps.dims());
  out.prev2 = ParticleMatrix(ps.size(), ps.dims());
  for (std::size_t k = 0; k < parents.size(); ++k) {
    const std::size_t p = parents[k];
    for (std::size_t i = 0; i < ps.dims(); ++i) {
      out.states(k, i) = ps.states(p, i);
      out.prev(k, i) = ps.prev(p, i);
      out.prev2(k, i) = ps.prev2(p, i);
    }
  }
  out.weights.assign(ps.size(), 1.0 / static_cast<double>(ps.size()));
  ps = std::move(out);
}

void resample(ParticleSet& ps, RandomSource& rng) { resample_with_offset(ps, rng.uniform()); }

double sigma(std::span<const double> delta, std::span<const double> weights, SigmaMode mode) {
  if (delta.size() != weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "sigma: delta and weights differ in length");
  }
  double r = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    r += weights[i] * (mode == SigmaMode::kAbsoluteSum ? std::abs(delta[i]) : delta[i]);
  }
  return r;
}

EstimateBuffer::EstimateBuffer(HiddenState h0) { entries_.push_back(EstimateEntry{0, std::move(h0)}); }

void EstimateBuffer::push(int t, HiddenState h) {
  if (t <= entries_.back().t) {
    throw Error(ErrorCode::kStaleFrame, "estimate buffer requires increasing t (got " + std::to_string(t) + ")");
  }
  entries_.push_back(EstimateEntry{t, std::move(h)});
}

const EstimateEntry& EstimateBuffer::at_or_before(int t) const {
  auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                             [](int value, const EstimateEntry& e) { return value < e.t; });
  if (it == entries_.begin()) return entries_.front();
  return *std::prev(it);
}

nlohmann::json reward_to_json(const RewardEvent& e) {
  nlohmann::json j;
  j["t"] = e.t;
  j["r"] = e.r;
  j["h"] = std::vector<double>(e.h_now.values().begin(), e.h_now.values().end());
  j["h_prev"] = std::vector<double>(e.h_prev.values().begin(), e.h_prev.values().end());
  return j;
}

RewardEvent reward_from_json(const nlohmann::json& j) {
  RewardEvent e;
  e.t = j.at("t").get<int>();
  e.r = j.at("r").get<double>();
  e.h_now = HiddenState(j.at("h").get<std::vector<double>>());
  e.h_prev = HiddenState(j.at("h_prev").get<std::vector<double>>());
  return e;
}

SubgoalFilter::SubgoalFilter(std::vector<SubgoalSpec> subgoals, const HiddenState& h0, FilterConfig cfg)
    : subgoals_(std::move(subgoals)), cfg_(cfg), buffer_(h0) {
  cfg_.validate();
  validate_subgoals(subgoals_);
  if (h0.size() != subgoals_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "h0 length must equal the subgoal count");
  }
  sigma_weights_ = subgoal_weights(subgoals_);
  particles_ = init_particles(h0, cfg_);
}

std::optional<BBox> SubgoalFilter::observed_box(const TrackFrame& frame, const ObjectId& id) {
  if (auto box = frame.box(id)) return box;
  if (cfg_.skip_policy == SkipPolicy::kReuseLastBox) {
    if (auto it = last_seen_.find(id); it != last_seen_.end()) {
      ++diagnostics_.reused_boxes;
      return it->second;
    }
  }
  return std::nullopt;
}

std::optional<RewardEvent> SubgoalFilter::step(const TrackFrame& frame, AffordanceProvider& provider,
                                               RandomSource& rng) {
  if (frame.t <= buffer_.latest().t) {
    throw Error(ErrorCode::kStaleFrame, "frame t=" + std::to_string(frame.t) + " does not advance past t=" +
                                            std::to_string(buffer_.latest().t));
  }
  ++diagnostics_.frames;
  propagate(particles_, cfg_, rng);

  // The frame handed to the provider carries substituted boxes under the
  // reuse policy.
  TrackFrame view = frame;
  for (const auto& s : subgoals_) {
    for (const ObjectId* id : {&s.target, s.reference ? &*s.reference : nullptr}) {
      if (id == nullptr) continue;
      view.boxes[*id] = observed_box(frame, *id);
    }
  }
  for (const auto& [id, box] : frame.boxes) {
    if (box) last_seen_[id] = *box;
  }

  const std::size_t n = subgoals_.size();
  std::vector<double> d0(n, 1.0);
  std::vector<double> d1(n, 1.0);
  std::vector<bool> observed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const SubgoalSpec& s = subgoals_[i];
    const bool visible = view.box(s.target) && (!s.reference || view.box(*s.reference));
    if (!visible) {
      ++diagnostics_.masked_observations;
      continue;
    }
    const AffordanceSampleSet set0 = provider.sample(s, Polarity::kUnsatisfied, view, rng);
    const AffordanceSampleSet set1 = provider.sample(s, Polarity::kSatisfied, view, rng);
    const SubgoalDistances d = distances(s, view, set0, set1);
    d0[i] = d.d0;
    d1[i] = d.d1;
    observed[i] = true;
  }

  if (weigh(particles_, d0, d1, observed)) ++diagnostics_.underflow_resets;
  HiddenState h_now = estimate(particles_);
  buffer_.push(frame.t, h_now);
  resample(particles_, rng);

  if (frame.t % cfg_.tau != 0) return std::nullopt;
  const HiddenState& h_prev = buffer_.at_or_before(frame.t - cfg_.tau).h;
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) delta[i] = h_now[i] - h_prev[i];
  return RewardEvent{frame.t, sigma(delta, sigma_weights_, cfg_.sigma_mode), std::move(h_now), h_prev};
}

}  // namespace subtrack
