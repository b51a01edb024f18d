#include "doctest.h"

#include <cmath>
#include <numeric>

#include "grid_oracle.hpp"
#include "subtrack/error.hpp"
#include "subtrack/filter.hpp"
#include "synthetic.hpp"

using namespace subtrack;

namespace {

ParticleSet single_row(double now, double before, double before2) {
  ParticleSet ps;
  ps.states = ParticleMatrix(1, 1, now);
  ps.prev = ParticleMatrix(1, 1, before);
  ps.prev2 = ParticleMatrix(1, 1, before2);
  ps.weights = {1.0};
  return ps;
}

FilterConfig quiet() {
  FilterConfig cfg;
  cfg.beta = 1e-15;
  return cfg;
}

double weight_sum(const ParticleSet& ps) { return std::accumulate(ps.weights.begin(), ps.weights.end(), 0.0); }

}  // namespace

TEST_CASE("init replicates h0 with uniform weights") {
  FilterConfig cfg;
  cfg.particles = 3;
  const auto ps = init_particles(HiddenState{1, 0}, cfg);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(ps.states(k, 0) == 1.0);
    CHECK(ps.states(k, 1) == 0.0);
    CHECK(ps.weights[k] == doctest::Approx(1.0 / 3));
  }
  CHECK(ps.prev == ps.states);
  CHECK(ps.prev2 == ps.states);
  CHECK(estimate(ps) == HiddenState{1, 0});
}

TEST_CASE("propagate follows the constant velocity mean") {
  RandomSource rng(1);
  auto ps = single_row(0.5, 0.4, 0.4);
  propagate(ps, quiet(), rng);
  CHECK(ps.states(0, 0) == doctest::Approx(0.57));
  CHECK(ps.prev(0, 0) == 0.5);
  CHECK(ps.prev2(0, 0) == 0.4);

  auto up = single_row(1.0, 0.0, 0.0);
  propagate(up, quiet(), rng);
  CHECK(up.states(0, 0) == 1.0);

  auto still = single_row(0.3, 0.3, 0.3);
  propagate(still, quiet(), rng);
  CHECK(still.states(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("propagate noise has the configured spread") {
  FilterConfig cfg;
  cfg.particles = 20000;
  auto ps = init_particles(HiddenState{0.5}, cfg);
  RandomSource rng(3);
  propagate(ps, cfg, rng);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    sum += ps.states(k, 0);
    sq += ps.states(k, 0) * ps.states(k, 0);
  }
  const double mean = sum / ps.size();
  const double sd = std::sqrt(sq / ps.size() - mean * mean);
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sd == doctest::Approx(0.04).epsilon(0.03));
}

TEST_CASE("weigh multiplies the per-subgoal error terms") {
  const std::vector<double> h{1, 0};
  CHECK(observation_factor(h, std::vector<double>{4.0, 3.0}, std::vector<double>{0.5, 0.2}, {true, true}) ==
        doctest::Approx(0.8));

  ParticleSet ps;
  ps.states = ParticleMatrix(2, 1);
  ps.states(0, 0) = 1.0;
  ps.states(1, 0) = 0.0;
  ps.prev = ps.prev2 = ps.states;
  ps.weights = {0.5, 0.5};
  weigh(ps, std::vector<double>{2.0}, std::vector<double>{0.1}, {true});
  CHECK(ps.weights[0] == doctest::Approx(2.0 / 2.1));
  CHECK(ps.weights[1] == doctest::Approx(0.1 / 2.1));

  ps.weights = {0.3, 0.7};
  weigh(ps, std::vector<double>{2.0}, std::vector<double>{0.1}, {false});
  CHECK(ps.weights[0] == doctest::Approx(0.3));
  CHECK(ps.weights[1] == doctest::Approx(0.7));

  CHECK_THROWS_AS(weigh(ps, std::vector<double>{1, 2}, std::vector<double>{1}, {true}), Error);
}

TEST_CASE("weigh resets to uniform when every weight underflows") {
  ParticleSet ps;
  ps.states = ParticleMatrix(2, 1, 0.5);
  ps.prev = ps.prev2 = ps.states;
  ps.weights = {0.0, 0.0};
  CHECK(weigh(ps, std::vector<double>{1.0}, std::vector<double>{1.0}, {true}));
  CHECK(ps.weights[0] == 0.5);
}

TEST_CASE("weights are scale invariant") {
  RandomSource rng(11);
  FilterConfig cfg;
  auto ps = init_particles(HiddenState{0, 1, 0}, cfg);
  propagate(ps, cfg, rng);
  std::vector<double> d0{3.0, 17.0, 0.4};
  std::vector<double> d1{40.0, 0.2, 9.0};
  auto base = ps;
  weigh(base, d0, d1, {true, true, true});
  for (double c : {1e-3, 1.0, 1e3}) {
    auto scaled = ps;
    std::vector<double> s0 = d0;
    std::vector<double> s1 = d1;
    for (auto& v : s0) v *= c;
    for (auto& v : s1) v *= c;
    weigh(scaled, s0, s1, {true, true, true});
    for (std::size_t k = 0; k < ps.size(); ++k) CHECK(std::abs(scaled.weights[k] - base.weights[k]) <= 1e-12);
  }
}

TEST_CASE("estimate is the weighted particle mean") {
  ParticleSet ps;
  ps.states = ParticleMatrix(2, 1);
  ps.states(0, 0) = 1.0;
  ps.weights = {0.75, 0.25};
  CHECK(estimate(ps)[0] == doctest::Approx(0.75));

  ParticleSet two;
  two.states = ParticleMatrix(2, 2);
  two.states(0, 0) = 1.0;
  two.states(1, 1) = 1.0;
  two.weights = {0.5, 0.5};
  CHECK(estimate(two) == HiddenState{0.5, 0.5});
}

TEST_CASE("systematic resampling picks parents by cumulative weight") {
  CHECK(systematic_indices(std::vector<double>{0.5, 0.25, 0.125, 0.125}, 0.0) ==
        std::vector<std::size_t>{0, 0, 1, 2});
  for (double u : {0.0, 0.3, 0.999}) {
    CHECK(systematic_indices(std::vector<double>{0.25, 0.25, 0.25, 0.25}, u) ==
          std::vector<std::size_t>{0, 1, 2, 3});
  }
  CHECK(systematic_indices(std::vector<double>{1, 0, 0, 0}, 0.7) == std::vector<std::size_t>{0, 0, 0, 0});
}

TEST_CASE("resampling carries history and resets weights") {
  ParticleSet ps;
  ps.states = ParticleMatrix(2, 1);
  ps.prev = ParticleMatrix(2, 1);
  ps.prev2 = ParticleMatrix(2, 1);
  ps.states(0, 0) = 0.9;
  ps.prev(0, 0) = 0.6;
  ps.prev2(0, 0) = 0.3;
  ps.weights = {1.0, 0.0};
  resample_with_offset(ps, 0.5);
  CHECK(ps.states(1, 0) == 0.9);
  CHECK(ps.prev(1, 0) == 0.6);
  CHECK(ps.prev2(1, 0) == 0.3);
  CHECK(ps.weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("offspring counts respect the floor/ceil bound") {
  RandomSource rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(100);
    for (double& v : w) v = rng.uniform() * rng.uniform();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    const auto parents = systematic_indices(w, rng.uniform());
    std::vector<int> counts(100, 0);
    for (auto p : parents) ++counts[p];
    for (std::size_t i = 0; i < 100; ++i) {
      const double expected = 100 * w[i];
      CHECK(counts[i] >= std::floor(expected) - 1e-9);
      CHECK(counts[i] <= std::ceil(expected) + 1e-9);
    }
  }
}

TEST_CASE("sigma modes") {
  const std::vector<double> w{1, 1};
  CHECK(sigma(std::vector<double>{0.7, 0}, w, SigmaMode::kSignedSum) == doctest::Approx(0.7));
  CHECK(sigma(std::vector<double>{0.7, -0.7}, w, SigmaMode::kAbsoluteSum) == doctest::Approx(1.4));
  CHECK(sigma(std::vector<double>{0.7, -0.7}, w, SigmaMode::kSignedSum) == doctest::Approx(0.0));
  CHECK_THROWS_AS(sigma(std::vector<double>{1}, w, SigmaMode::kSignedSum), Error);
}

TEST_CASE("estimate buffer lookups") {
  EstimateBuffer buf(HiddenState{0.0});
  buf.push(3, HiddenState{0.3});
  buf.push(7, HiddenState{0.7});
  CHECK(buf.at_or_before(-5).t == 0);
  CHECK(buf.at_or_before(5).t == 3);
  CHECK(buf.at_or_before(7).t == 7);
  CHECK_THROWS_AS(buf.push(7, HiddenState{0.1}), Error);
}

TEST_CASE("reward events round trip through json") {
  RewardEvent e{10, 0.25, HiddenState{0.75, 0.5}, HiddenState{0.5, 0.5}};
  const auto back = reward_from_json(reward_to_json(e));
  CHECK(back.t == 10);
  CHECK(back.r == 0.25);
  CHECK(back.h_now == e.h_now);
  CHECK(back.h_prev == e.h_prev);
}

namespace {

// One subgoal, target slides from the left zone (x=20..60) into a bowl.
struct BowlScene {
  AffordanceGeometry geometry;
  std::vector<SubgoalSpec> subgoals{
      SubgoalSpec{1, SpatialRelation::kInside, ObjectId("red_cube"), ObjectId("red_bowl"), 1.0, ""}};

  BowlScene() {
    geometry.workspace_px = BBox{0, 0, 640, 480};
    geometry.object_size_px[ObjectId("red_cube")] = {24, 24};
  }

  TrackFrame frame(int t, double cube_x) const {
    TrackFrame f;
    f.t = t;
    f.boxes[ObjectId("red_bowl")] = BBox{400, 200, 464, 264};
    f.boxes[ObjectId("red_cube")] = BBox::around(Point{cube_x, 232}, 24, 24);
    return f;
  }
};

}  // namespace

TEST_CASE("a subgoal completed between decision steps yields a positive signed reward") {
  BowlScene scene;
  ScriptedAffordanceProvider provider(scene.geometry);
  FilterConfig cfg;
  cfg.tau = 3;
  SubgoalFilter filter(scene.subgoals, HiddenState{0.0}, cfg);
  RandomSource rng(5);
  CHECK_FALSE(filter.step(scene.frame(1, 100), provider, rng));
  CHECK_FALSE(filter.step(scene.frame(2, 432), provider, rng));
  const auto ev = filter.step(scene.frame(3, 432), provider, rng);
  REQUIRE(ev);
  CHECK(ev->r > 0.0);
  CHECK(ev->h_prev == HiddenState{0.0});
}

TEST_CASE("no state change and no noise gives zero reward") {
  BowlScene scene;
  ScriptedAffordanceProvider provider(scene.geometry);
  FilterConfig cfg = quiet();
  cfg.tau = 1;
  SubgoalFilter filter(scene.subgoals, HiddenState{0.0}, cfg);
  RandomSource rng(5);
  const auto ev = filter.step(scene.frame(1, 100), provider, rng);
  REQUIRE(ev);
  CHECK(std::abs(ev->r) < 1e-12);
}

TEST_CASE("stale frames and missing boxes") {
  BowlScene scene;
  ScriptedAffordanceProvider provider(scene.geometry);
  SubgoalFilter filter(scene.subgoals, HiddenState{0.0}, FilterConfig{});
  RandomSource rng(5);
  filter.step(scene.frame(1, 100), provider, rng);
  try {
    filter.step(scene.frame(1, 100), provider, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStaleFrame);
  }
  auto hidden = scene.frame(2, 100);
  hidden.boxes[ObjectId("red_cube")] = std::nullopt;
  const long evals = provider.ledger().evaluations;
  filter.step(hidden, provider, rng);
  CHECK(provider.ledger().evaluations == evals);
  CHECK(filter.diagnostics().masked_observations == 1);
}

TEST_CASE("reuse-last-box keeps observing through dropouts") {
  BowlScene scene;
  ScriptedAffordanceProvider provider(scene.geometry);
  FilterConfig cfg;
  cfg.skip_policy = SkipPolicy::kReuseLastBox;
  SubgoalFilter filter(scene.subgoals, HiddenState{0.0}, cfg);
  RandomSource rng(5);
  filter.step(scene.frame(1, 432), provider, rng);
  auto hidden = scene.frame(2, 432);
  hidden.boxes.erase(ObjectId("red_cube"));
  filter.step(hidden, provider, rng);
  CHECK(filter.diagnostics().masked_observations == 0);
  CHECK(filter.diagnostics().reused_boxes == 1);
}

TEST_CASE("filter runs are deterministic for a fixed seed") {
  BowlScene scene;
  auto run = [&]() {
    ScriptedAffordanceProvider provider(scene.geometry);
    SubgoalFilter filter(scene.subgoals, HiddenState{0.0}, FilterConfig{});
    RandomSource rng(21);
    std::vector<double> rs;
    for (int t = 1; t <= 40; ++t) {
      if (auto ev = filter.step(scene.frame(t, 100 + 10 * t), provider, rng)) rs.push_back(ev->r);
    }
    return rs;
  };
  CHECK(run() == run());
}

TEST_CASE("estimate stays inside the particle hull") {
  RandomSource rng(8);
  FilterConfig cfg;
  auto ps = init_particles(HiddenState{0.5, 0.5}, cfg);
  for (int t = 0; t < 20; ++t) {
    propagate(ps, cfg, rng);
    weigh(ps, std::vector<double>{rng.uniform(0.1, 50), rng.uniform(0.1, 50)},
          std::vector<double>{rng.uniform(0.1, 50), rng.uniform(0.1, 50)}, {true, true});
    CHECK(std::abs(weight_sum(ps) - 1.0) <= 1e-12);
    const auto h = estimate(ps);
    for (std::size_t i = 0; i < 2; ++i) {
      double lo = 1.0;
      double hi = 0.0;
      for (std::size_t k = 0; k < ps.size(); ++k) {
        lo = std::min(lo, ps.states(k, i));
        hi = std::max(hi, ps.states(k, i));
      }
      CHECK(h[i] >= lo - 1e-12);
      CHECK(h[i] <= hi + 1e-12);
    }
    resample(ps, rng);
    CHECK(std::abs(weight_sum(ps) - 1.0) <= 1e-12);
  }
}

TEST_CASE("particle estimate tracks the grid Bayes filter") {
  FilterConfig cfg;
  cfg.particles = 1000;
  double err = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    RandomSource obs_rng(seed);
    const auto obs = synthetic::sliding_target(obs_rng, 100);
    oracle::GridBayes grid(201, cfg.alpha, cfg.beta, 0.0);
    auto ps = init_particles(HiddenState{0.0}, cfg);
    RandomSource rng(1000 + seed);
    for (const auto& o : obs) {
      const double g = grid.step(o.d0, o.d1);
      propagate(ps, cfg, rng);
      weigh(ps, std::vector<double>{o.d0}, std::vector<double>{o.d1}, {true});
      err += std::abs(estimate(ps)[0] - g);
      ++count;
      resample(ps, rng);
    }
  }
  MESSAGE("mean abs error vs grid = " << err / count);
  CHECK(err / count <= 0.05);
}
