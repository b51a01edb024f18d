#include "doctest.h"

#include <cmath>
#include <limits>

#include "subtrack/core.hpp"
#include "subtrack/error.hpp"
#include "subtrack/random.hpp"
#include "subtrack/task.hpp"

using namespace subtrack;

TEST_CASE("center is the box midpoint") {
  CHECK(center(BBox{0, 0, 10, 10}) == Point{5, 5});
  CHECK(center(BBox{4, 4, 4, 4}) == Point{4, 4});
  CHECK(center(BBox{0, 0, 640, 480}) == Point{320, 240});
}

TEST_CASE("binarize maps ties to incomplete") {
  CHECK(binarize(HiddenState{0.9, 0.1}, 0.5) == std::vector<int>{1, 0});
  CHECK(binarize(HiddenState{0.5}, 0.5) == std::vector<int>{0});
  CHECK(binarize(HiddenState{1.0, 0.0, 0.51}, 0.5) == std::vector<int>{1, 0, 1});
}

TEST_CASE("hidden state entries are clamped on every path") {
  HiddenState a{-0.5, 1.5, 0.25};
  CHECK(a[0] == 0.0);
  CHECK(a[1] == 1.0);
  CHECK(a[2] == 0.25);
  HiddenState b(std::vector<double>{2.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 0.0);
  HiddenState c(3, 7.0);
  for (double v : c.values()) CHECK(v == 1.0);
  c.set(1, -3.0);
  CHECK(c[1] == 0.0);
}

TEST_CASE("random source is reproducible over a million draws") {
  RandomSource a(42);
  RandomSource b(42);
  bool same = true;
  for (int i = 0; i < 1'000'000; ++i) same = same && a.next_u64() == b.next_u64();
  CHECK(same);
  RandomSource c(43);
  CHECK(RandomSource(42).next_u64() != c.next_u64());
}

TEST_CASE("random source helpers stay in range") {
  RandomSource rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.index(5) < 5);
  }
  RandomSource f1 = rng.fork(3);
  RandomSource f2 = rng.fork(3);
  CHECK(f1.next_u64() == f2.next_u64());
}

TEST_CASE("object id category") {
  CHECK(ObjectId("red_cube").category() == "cube");
  CHECK(ObjectId("drawer").category() == "drawer");
}

TEST_CASE("relations round trip and reject unknown names") {
  for (auto r : {SpatialRelation::kInside, SpatialRelation::kOnTopOf, SpatialRelation::kLeftAdjacent,
                 SpatialRelation::kRightAdjacent, SpatialRelation::kOnSurface, SpatialRelation::kDrawerOpen}) {
    CHECK(parse_relation(relation_name(r)) == r);
  }
  try {
    parse_relation("floating_above");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownRelation);
  }
}

TEST_CASE("subgoal validation") {
  SubgoalSpec a{1, SpatialRelation::kInside, ObjectId("red_cube"), ObjectId("red_bowl"), 1.0, ""};
  SubgoalSpec b{2, SpatialRelation::kDrawerOpen, ObjectId("handle"), std::nullopt, 1.0, ""};
  std::vector<SubgoalSpec> ok{a, b};
  CHECK_NOTHROW(validate_subgoals(ok));

  auto bad_ids = ok;
  bad_ids[1].id = 3;
  CHECK_THROWS_AS(validate_subgoals(bad_ids), Error);

  auto missing_ref = ok;
  missing_ref[0].reference.reset();
  CHECK_THROWS_AS(validate_subgoals(missing_ref), Error);

  auto zero = ok;
  zero[0].weight = 0.0;
  zero[1].weight = 0.0;
  CHECK_THROWS_AS(validate_subgoals(zero), Error);
}

TEST_CASE("trace validation") {
  EpisodeTrace t;
  t.task_id = "x";
  t.frames.push_back(TrackFrame{0, {}, {{ObjectId("a"), BBox{0, 0, 1, 1}}}});
  t.frames.push_back(TrackFrame{1, {}, {{ObjectId("a"), std::nullopt}}});
  CHECK_NOTHROW(validate_trace(t));
  t.frames[1].t = 0;
  CHECK_THROWS_AS(validate_trace(t), Error);
  t.frames[1].t = 1;
  t.ground_truth = std::vector<std::vector<int>>{{1}};
  CHECK_THROWS_AS(validate_trace(t), Error);
}

TEST_CASE("shipped task files load") {
  const auto ids = list_tasks();
  CHECK(ids == std::vector<std::string>{"cleanup-desk", "make-line", "place-same-color", "stack-tower"});
  CHECK(load_task("place-same-color").subgoals.size() == 4);
  CHECK(load_task("stack-tower").subgoals.size() == 3);
  CHECK(load_task("make-line").subgoals.size() == 2);
  const auto desk = load_task("cleanup-desk");
  CHECK(desk.subgoals.size() == 3);
  REQUIRE(desk.drawer_calibration());
  CHECK(desk.drawer_calibration()->closed_handle_px == Point{200, 240});
  CHECK(desk.drawer_calibration()->stroke_px == 60.0);
}

TEST_CASE("unknown task is reported") {
  try {
    load_task("no-such-task");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownTask);
  }
}
