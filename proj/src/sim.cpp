#include "subtrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_set>

#include "subtrack/error.hpp"

namespace subtrack {

using nlohmann::json;

namespace {

const ObjectId kTable("table");

double lerp(double a, double b, double s) { return a + (b - a) * s; }

// Slot centers relative to the container center.
std::vector<Point> slot_offsets(ObjectKind kind, double w, double h) {
  switch (kind) {
    case ObjectKind::kTray:
      return {{-w / 4, -h / 4}, {w / 4, -h / 4}, {-w / 4, h / 4}, {w / 4, h / 4}};
    case ObjectKind::kDrawer:
      return {{-w / 4, 0}, {w / 4, 0}};
    case ObjectKind::kBowl:
      return {{0, 0}};
    default:
      return {};
  }
}

}  // namespace

FailureScript FailureScript::make(FailureKind kind, int trigger_step) {
  FailureScript f;
  f.kind = kind;
  f.trigger_step = trigger_step;
  if (kind == FailureKind::kOccupied) {
    f.distractor = ObjectId("yellow_cube");
    f.destination = ObjectId("green_bowl");
  }
  return f;
}

json failure_to_json(const FailureScript& f) {
  json j;
  j["kind"] = std::string(failure_kind_name(f.kind));
  j["trigger_step"] = f.trigger_step;
  if (f.kind == FailureKind::kOccupied) {
    j["distractor"] = f.distractor.str();
    j["destination"] = f.destination.str();
  }
  if (f.kind == FailureKind::kPlacement) {
    j["scatter_count"] = f.scatter_count;
    j["fall_off"] = f.fall_off;
  }
  return j;
}

FailureScript failure_from_json(const json& j) {
  FailureScript f = FailureScript::make(parse_failure_kind(j.at("kind").get<std::string>()), j.value("trigger_step", 0));
  if (j.contains("distractor")) f.distractor = ObjectId(j["distractor"].get<std::string>());
  if (j.contains("destination")) f.destination = ObjectId(j["destination"].get<std::string>());
  f.scatter_count = j.value("scatter_count", f.scatter_count);
  f.fall_off = j.value("fall_off", f.fall_off);
  return f;
}

struct Simulator::Effect {
  SimState pre;
  bool succeeded = false;
  bool failure_fired = false;
  std::optional<ObjectId> mover;
  Pose from;
  Pose to;
  bool drawer_motion = false;
  double ext_from = 0.0;
  double ext_to = 0.0;
};

Simulator::Simulator(TaskDefinition task, int frames_per_action)
    : task_(std::move(task)), frames_per_action_(frames_per_action), geometry_(AffordanceGeometry::from_task(task_)) {
  if (frames_per_action_ < 1) throw Error(ErrorCode::kInvalidArgument, "frames_per_action must be >= 1");
}

Simulator Simulator::load(const std::string& task_id, int frames_per_action) {
  return Simulator(load_task(task_id), frames_per_action);
}

void Simulator::check_failure(const std::optional<FailureScript>& failure) const {
  if (!failure) return;
  if (!task_.failure_allowed(failure->kind)) {
    throw Error(ErrorCode::kIllegalFailureForTask, "failure '" + std::string(failure_kind_name(failure->kind)) +
                                                       "' is not defined for task " + task_.task_id);
  }
  if (failure->kind == FailureKind::kOccupied &&
      (!task_.has_object(failure->distractor) || !task_.has_object(failure->destination))) {
    throw Error(ErrorCode::kInvalidArgument, "occupied failure names unknown objects");
  }
}

namespace {

SimState build_scene(const TaskDefinition& task, RandomSource* rng) {
  auto jitter = [&]() { return rng ? rng->uniform(-task.jitter, task.jitter) : 0.0; };
  SimState s;
  for (const auto& [id, p] : task.fixtures) {
    const double jx = jitter();
    const double jy = jitter();
    s.poses[id] = Pose{p.x + jx, p.y + jy};
  }
  if (task.drawer) {
    const DrawerSpec& d = *task.drawer;
    s.poses[d.drawer] = Pose{d.closed_center.x, d.closed_center.y};
    s.poses[d.handle] = Pose{d.closed_center.x + d.handle_offset.x, d.closed_center.y + d.handle_offset.y};
  }
  for (const auto& [id, pl] : task.placements) {
    if (pl.on) {
      const ObjectSpec& host = task.object(*pl.on);
      const auto offsets = slot_offsets(host.kind, host.width, host.height);
      const Point off = offsets.at(static_cast<std::size_t>(pl.slot));
      const Pose& hp = s.poses.at(*pl.on);
      s.poses[id] = Pose{hp.x + off.x, hp.y + off.y};
      s.support[id] = Support{SupportKind::kFixture, *pl.on, pl.slot};
    } else {
      const double jx = jitter();
      const double jy = jitter();
      s.poses[id] = Pose{pl.at->x + jx, pl.at->y + jy};
      s.support[id] = Support{};
    }
  }
  return s;
}

}  // namespace

SimState Simulator::reset(RandomSource& rng, std::optional<FailureScript> failure) const {
  check_failure(failure);
  SimState s = build_scene(task_, &rng);
  s.failure = std::move(failure);
  return s;
}

SimState Simulator::canonical_state() const { return build_scene(task_, nullptr); }

bool Simulator::is_valid(const SimState& state, const MetaAction& action) const {
  if (std::find(task_.actions.begin(), task_.actions.end(), action) == task_.actions.end()) return false;
  switch (action.verb) {
    case Verb::kPick:
      return !state.gripper;
    case Verb::kPlace:
    case Verb::kPlace2Left:
    case Verb::kPlace2Right:
      return state.gripper && *state.gripper != action.argument;
    case Verb::kPull:
    case Verb::kPush:
      return !state.gripper;
  }
  return false;
}

std::vector<MetaAction> Simulator::valid_actions(const SimState& state) const {
  std::vector<MetaAction> out;
  for (const auto& a : task_.actions) {
    if (is_valid(state, a)) out.push_back(a);
  }
  return out;
}

bool Simulator::drawer_open(const SimState& state) const {
  return task_.drawer && state.drawer_extension > task_.drawer->open_fraction * task_.drawer->stroke - 1e-9;
}

bool Simulator::hidden_in_drawer(const SimState& state, const ObjectId& id) const {
  if (!task_.drawer) return false;
  const auto it = state.support.find(id);
  return it != state.support.end() && it->second.kind == SupportKind::kFixture &&
         it->second.ref == task_.drawer->drawer &&
         state.drawer_extension < task_.drawer->visible_fraction * task_.drawer->stroke;
}

WorldRect Simulator::footprint(const SimState& state, const ObjectId& id) const {
  const ObjectSpec& o = task_.object(id);
  const Pose& p = state.poses.at(id);
  return WorldRect{p.x - o.width / 2, p.y - o.height / 2, p.x + o.width / 2, p.y + o.height / 2};
}

std::optional<ObjectId> Simulator::object_on(const SimState& state, const ObjectId& base) const {
  for (const auto& [id, sup] : state.support) {
    if (sup.kind == SupportKind::kCube && sup.ref == base) return id;
  }
  return std::nullopt;
}

ObjectId Simulator::top_of_stack(const SimState& state, const ObjectId& base) const {
  ObjectId top = base;
  while (auto above = object_on(state, top)) top = *above;
  return top;
}

bool Simulator::position_clear(const SimState& state, Point p, const ObjectId& mover, double radius) const {
  for (const auto& [id, sup] : state.support) {
    if (id == mover) continue;
    const Pose& q = state.poses.at(id);
    if (std::hypot(q.x - p.x, q.y - p.y) < radius) return false;
  }
  for (const auto& o : task_.objects) {
    if (o.kind == ObjectKind::kCube || o.kind == ObjectKind::kHandle) continue;
    const WorldRect r = footprint(state, o.id);
    if (WorldRect{r.x0 - 3, r.y0 - 3, r.x1 + 3, r.y1 + 3}.contains(p.x, p.y)) return false;
  }
  return task_.workspace.contains(p.x, p.y);
}

Point Simulator::free_table_spot(const SimState& state, const ObjectId& mover) const {
  const double radius = task_.object(mover).width;
  for (const Point& p : task_.table_spots) {
    if (position_clear(state, p, mover, radius)) return p;
  }
  const WorldRect& ws = task_.workspace;
  for (double y = ws.y0 + 8; y <= ws.y1 - 8; y += 8) {
    for (double x = ws.x0 + 8; x <= ws.x1 - 8; x += 8) {
      if (position_clear(state, {x, y}, mover, radius)) return {x, y};
    }
  }
  return {(ws.x0 + ws.x1) / 2, (ws.y0 + ws.y1) / 2};
}

Point Simulator::free_scatter_spot(const SimState& state, const ObjectId& mover, RandomSource& rng) const {
  const WorldRect& ws = task_.workspace;
  const double radius = task_.object(mover).width * 1.5;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Point p{rng.uniform(ws.x0 + 10, ws.x1 - 10), rng.uniform(ws.y0 + 10, ws.y1 - 10)};
    if (position_clear(state, p, mover, radius)) return p;
  }
  return free_table_spot(state, mover);
}

void Simulator::set_extension(SimState& state, double extension) const {
  if (!task_.drawer) return;
  const DrawerSpec& d = *task_.drawer;
  const double delta = extension - state.drawer_extension;
  state.drawer_extension = extension;
  state.poses.at(d.drawer).x += delta;
  state.poses.at(d.handle).x += delta;
  for (const auto& [id, sup] : state.support) {
    if (sup.kind == SupportKind::kFixture && sup.ref == d.drawer) state.poses.at(id).x += delta;
  }
}

void Simulator::fire_pre_step_failure(SimState& state, Effect& effect) const {
  if (!state.failure || state.failure->fired || state.step_count < state.failure->trigger_step) return;
  FailureScript& f = *state.failure;
  if (f.kind == FailureKind::kOccupied) {
    f.fired = true;
    effect.failure_fired = true;
    const bool busy = std::any_of(state.support.begin(), state.support.end(), [&](const auto& kv) {
      return kv.first != f.distractor && kv.second.kind == SupportKind::kFixture && kv.second.ref == f.destination;
    });
    if (busy) return;
    if (state.gripper == f.distractor) state.gripper.reset();
    const Pose& dest = state.poses.at(f.destination);
    state.poses[f.distractor] = Pose{dest.x, dest.y};
    state.support[f.distractor] = Support{SupportKind::kFixture, f.destination, 0};
  } else if (f.kind == FailureKind::kClosed) {
    f.fired = true;
    effect.failure_fired = true;
    set_extension(state, 0.0);
  }
}

Simulator::Effect Simulator::execute(SimState& state, const MetaAction& action, RandomSource& rng) const {
  if (!is_valid(state, action)) {
    throw Error(ErrorCode::kIllegalAction, to_string(action) + " is not allowed in the current state");
  }
  Effect e;
  fire_pre_step_failure(state, e);
  e.pre = state;
  ++state.step_count;

  const ObjectId& arg = action.argument;
  switch (action.verb) {
    case Verb::kPick: {
      const bool covered = object_on(state, arg).has_value();
      const bool dropped = state.failure && state.failure->kind == FailureKind::kDrop && !state.failure->fired &&
                           state.step_count - 1 >= state.failure->trigger_step;
      if (dropped) {
        state.failure->fired = true;
        e.failure_fired = true;
      }
      if (covered || dropped || hidden_in_drawer(state, arg)) break;
      Pose& p = state.poses.at(arg);
      e.mover = arg;
      e.from = p;
      p.held = true;
      p.lift = task_.held_lift;
      e.to = p;
      state.support.erase(arg);
      state.gripper = arg;
      e.succeeded = true;
      break;
    }
    case Verb::kPlace:
    case Verb::kPlace2Left:
    case Verb::kPlace2Right: {
      const ObjectId held = *state.gripper;
      Pose& p = state.poses.at(held);
      e.mover = held;
      e.from = p;
      Support sup;
      Point dest;
      int z = 0;
      bool stacked = false;
      if (action.verb != Verb::kPlace) {
        const Pose& ref = state.poses.at(arg);
        const double w = task_.object(held).width;
        const Point beside{ref.x + (action.verb == Verb::kPlace2Left ? -w : w), ref.y};
        if (position_clear(state, beside, held, 0.5 * w)) {
          dest = beside;
          sup = Support{SupportKind::kBeside, arg, action.verb == Verb::kPlace2Left ? 0 : 1};
        } else {
          dest = free_table_spot(state, held);
        }
      } else if (arg == kTable) {
        dest = free_table_spot(state, held);
      } else {
        const ObjectSpec& host = task_.object(arg);
        if (host.kind == ObjectKind::kCube) {
          const ObjectId top = top_of_stack(state, arg);
          const Pose& tp = state.poses.at(top);
          dest = {tp.x, tp.y};
          z = tp.z + 1;
          sup = Support{SupportKind::kCube, top, -1};
          stacked = true;
        } else if (host.kind == ObjectKind::kDrawer && !drawer_open(state)) {
          dest = free_table_spot(state, held);
          for (const Point& spot : task_.drawer->closed_drop_spots) {
            if (position_clear(state, spot, held, task_.object(held).width)) {
              dest = spot;
              break;
            }
          }
        } else {
          const auto offsets = slot_offsets(host.kind, host.width, host.height);
          std::set<int> used;
          for (const auto& [id, s] : state.support) {
            if (s.kind == SupportKind::kFixture && s.ref == arg) used.insert(s.slot);
          }
          int slot = -1;
          for (int i = 0; i < static_cast<int>(offsets.size()); ++i) {
            if (!used.count(i)) {
              slot = i;
              break;
            }
          }
          if (slot >= 0) {
            const Pose& hp = state.poses.at(arg);
            dest = {hp.x + offsets[static_cast<std::size_t>(slot)].x, hp.y + offsets[static_cast<std::size_t>(slot)].y};
            sup = Support{SupportKind::kFixture, arg, slot};
          } else {
            dest = free_table_spot(state, held);
          }
        }
      }
      p = Pose{dest.x, dest.y, z};
      e.to = p;
      state.support[held] = sup;
      state.gripper.reset();
      e.succeeded = true;

      if (stacked && state.failure && state.failure->kind == FailureKind::kPlacement && !state.failure->fired &&
          state.step_count - 1 >= state.failure->trigger_step) {
        FailureScript& f = *state.failure;
        f.fired = true;
        e.failure_fired = true;
        ObjectId cur = held;
        for (int n = 0; n < f.scatter_count; ++n) {
          Pose& cp = state.poses.at(cur);
          if (cp.z < 1) break;
          const ObjectId below = state.support.at(cur).ref;
          const Point spot = free_scatter_spot(state, cur, rng);
          cp = Pose{spot.x, spot.y, 0};
          state.support[cur] = Support{};
          cur = below;
        }
        if (f.fall_off) state.terminal_failure = true;
      }
      break;
    }
    case Verb::kPull:
    case Verb::kPush: {
      if (!task_.drawer) break;
      e.drawer_motion = true;
      e.ext_from = state.drawer_extension;
      e.ext_to = action.verb == Verb::kPull ? task_.drawer->stroke : 0.0;
      set_extension(state, e.ext_to);
      e.succeeded = true;
      break;
    }
  }
  return e;
}

bool Simulator::transition(SimState& state, const MetaAction& action, RandomSource& rng) const {
  return execute(state, action, rng).succeeded;
}

StepOutcome Simulator::apply(SimState& state, const MetaAction& action, RandomSource& rng) const {
  Effect e = execute(state, action, rng);
  StepOutcome out;
  out.action_succeeded = e.succeeded;
  out.failure_fired = e.failure_fired;

  const int f = frames_per_action_;
  const int travel = std::max(1, f / 5);
  const int settle = std::min(f, travel + std::max(1, f / 10));
  for (int k = 1; k <= f; ++k) {
    SimState snap;
    if (e.mover && e.to.held && k <= travel) {
      // Grasp and lift.
      snap = e.pre;
      Pose& p = snap.poses.at(*e.mover);
      p.held = true;
      p.lift = e.from.lift + (e.to.lift - e.from.lift) * k / travel;
      snap.support.erase(*e.mover);
      snap.gripper = e.mover;
    } else if (e.mover && !e.to.held && k < settle) {
      // Carry at height, then lower onto the destination.
      snap = e.pre;
      Pose& p = snap.poses.at(*e.mover);
      const double level_from = e.from.z + e.from.lift;
      if (k <= travel) {
        const double s = static_cast<double>(k) / travel;
        p = Pose{lerp(e.from.x, e.to.x, s), lerp(e.from.y, e.to.y, s), 0, level_from, true};
      } else {
        const double s = static_cast<double>(k - travel) / (settle - travel);
        p = Pose{e.to.x, e.to.y, 0, lerp(level_from, e.to.z, s), true};
      }
    } else if (e.drawer_motion && k <= travel) {
      snap = e.pre;
      set_extension(snap, lerp(e.ext_from, e.ext_to, static_cast<double>(k) / travel));
    } else {
      snap = state;
    }
    out.frames.push_back(render(snap, state.frame + k));
    out.ground_truth.push_back(ground_truth(snap));
  }
  state.frame += f;
  return out;
}

TrackFrame Simulator::render(const SimState& state, int t) const {
  TrackFrame frame;
  frame.t = t;
  frame.image_size = task_.image_size;
  for (const auto& o : task_.objects) {
    if (hidden_in_drawer(state, o.id)) {
      frame.boxes[o.id] = std::nullopt;
      continue;
    }
    const Pose& p = state.poses.at(o.id);
    const Point c = task_.camera.to_pixel(p.x, p.y, p.z + p.lift);
    frame.boxes[o.id] = BBox::around(c, task_.camera.to_pixels(o.width), task_.camera.to_pixels(o.height));
  }
  return frame;
}

bool Simulator::relation_holds(const SimState& state, const SubgoalSpec& s) const {
  if (s.relation == SpatialRelation::kDrawerOpen) return drawer_open(state);
  const auto ti = state.poses.find(s.target);
  const auto ri = state.poses.find(*s.reference);
  if (ti == state.poses.end() || ri == state.poses.end()) {
    throw Error(ErrorCode::kMissingObject, "subgoal " + std::to_string(s.id) + " refers to an unknown object");
  }
  const Pose& t = ti->second;
  const Pose& r = ri->second;
  if (t.held || r.held) return false;
  const ObjectSpec& ts = task_.object(s.target);
  switch (s.relation) {
    case SpatialRelation::kInside:
    case SpatialRelation::kOnSurface:
      return footprint(state, *s.reference).contains(t.x, t.y);
    case SpatialRelation::kOnTopOf:
      return std::abs(t.x - r.x) < 0.5 * ts.width && std::abs(t.y - r.y) < 0.5 * ts.height && t.z == r.z + 1;
    case SpatialRelation::kLeftAdjacent:
    case SpatialRelation::kRightAdjacent: {
      const double gap = s.relation == SpatialRelation::kLeftAdjacent ? r.x - t.x : t.x - r.x;
      return gap >= 0.5 * ts.width && gap <= 1.5 * ts.width && std::abs(t.y - r.y) < 0.5 * ts.height;
    }
    case SpatialRelation::kDrawerOpen:
      break;
  }
  return false;
}

std::vector<int> Simulator::ground_truth(const SimState& state) const {
  std::vector<int> out;
  out.reserve(task_.subgoals.size());
  for (const auto& s : task_.subgoals) out.push_back(relation_holds(state, s) ? 1 : 0);
  return out;
}

double Simulator::completion_ratio(const SimState& state) const {
  const auto gt = ground_truth(state);
  return static_cast<double>(std::count(gt.begin(), gt.end(), 1)) / static_cast<double>(gt.size());
}

bool Simulator::success(const SimState& state) const {
  const auto gt = ground_truth(state);
  return std::all_of(gt.begin(), gt.end(), [](int b) { return b == 1; });
}

std::string Simulator::location_symbol(const SimState& state, const ObjectId& id) const {
  if (state.gripper == id) return "held";
  const auto it = state.support.find(id);
  if (it == state.support.end()) return "table";
  const Support& s = it->second;
  switch (s.kind) {
    case SupportKind::kTable:
      return "table";
    case SupportKind::kFixture:
      return "in:" + s.ref.str();
    case SupportKind::kCube:
      return "on:" + s.ref.str();
    case SupportKind::kBeside:
      return (s.slot == 0 ? "left:" : "right:") + s.ref.str();
  }
  return "table";
}

std::string Simulator::exact_key(const SimState& state) const {
  std::ostringstream k;
  for (const auto& [id, p] : state.poses) {
    k << id.str() << ':' << std::lround(p.x * 100) << ',' << std::lround(p.y * 100) << ',' << p.z << ','
      << (p.held ? 1 : 0) << ';';
  }
  k << "ext:" << std::lround(state.drawer_extension * 100);
  return k.str();
}

std::vector<int> frame_ground_truth(const TrackFrame& frame, const std::vector<SubgoalSpec>& subgoals,
                                    const AffordanceGeometry& geometry) {
  std::vector<int> out;
  for (const auto& s : subgoals) {
    for (const ObjectId* id : {&s.target, s.reference ? &*s.reference : nullptr}) {
      if (id && !frame.boxes.count(*id)) {
        throw Error(ErrorCode::kMissingObject, "object '" + id->str() + "' is not part of the frame");
      }
    }
    const auto target = frame.box(s.target);
    if (!target || (s.reference && !frame.box(*s.reference))) {
      out.push_back(0);
      continue;
    }
    const BBox region = satisfied_region(s, frame, geometry);
    const Point c = center(*target);
    bool inside = region.contains(c);
    if (s.relation == SpatialRelation::kDrawerOpen) inside = c.x >= region.x_min;
    out.push_back(inside ? 1 : 0);
  }
  return out;
}

MetaAction RandomPolicy::act(const Simulator& sim, const SimState& state, RandomSource& rng) {
  const auto actions = sim.valid_actions(state);
  if (actions.empty()) throw Error(ErrorCode::kIllegalAction, "no valid action available");
  return actions[rng.index(actions.size())];
}

std::vector<MetaAction> ExpertPolicy::plan(const Simulator& sim, const SimState& state) const {
  SimState root = state;
  root.failure.reset();
  if (sim.success(root)) return {};
  struct Node {
    SimState state;
    int parent;
    MetaAction action;
    int depth;
  };
  std::vector<Node> nodes;
  nodes.push_back(Node{root, -1, {}, 0});
  std::unordered_set<std::string> seen{sim.exact_key(root)};
  RandomSource scratch(0);
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (nodes[head].depth >= max_depth_) continue;
    for (const MetaAction& a : sim.valid_actions(nodes[head].state)) {
      SimState next = nodes[head].state;
      sim.transition(next, a, scratch);
      if (next.terminal_failure || !seen.insert(sim.exact_key(next)).second) continue;
      const bool done = sim.success(next);
      nodes.push_back(Node{std::move(next), static_cast<int>(head), a, nodes[head].depth + 1});
      if (done) {
        std::vector<MetaAction> path;
        for (int i = static_cast<int>(nodes.size()) - 1; i > 0; i = nodes[static_cast<std::size_t>(i)].parent) {
          path.push_back(nodes[static_cast<std::size_t>(i)].action);
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "no plan found for task " + sim.task().task_id);
}

void ExpertPolicy::begin_episode(const Simulator& /*sim*/, const SimState& /*state*/) {
  plan_.clear();
  expected_.clear();
}

MetaAction ExpertPolicy::act(const Simulator& sim, const SimState& state, RandomSource& /*rng*/) {
  if (plan_.empty() || expected_.front() != sim.exact_key(state)) {
    plan_ = plan(sim, state);
    if (plan_.empty()) throw Error(ErrorCode::kInvalidArgument, "task already solved");
    expected_.clear();
    SimState s = state;
    s.failure.reset();
    RandomSource scratch(0);
    for (const auto& a : plan_) {
      expected_.push_back(sim.exact_key(s));
      sim.transition(s, a, scratch);
    }
  }
  const MetaAction a = plan_.front();
  plan_.erase(plan_.begin());
  expected_.erase(expected_.begin());
  return a;
}

EpisodeRecord run_episode(const Simulator& sim, Policy& policy, RandomSource& rng, std::optional<FailureScript> failure,
                          int max_steps) {
  EpisodeRecord rec;
  SimState state = sim.reset(rng, std::move(failure));
  policy.begin_episode(sim, state);
  EpisodeTrace& trace = rec.trace;
  trace.task_id = sim.task().task_id;
  trace.image_size = sim.task().image_size;
  trace.objects = sim.task().object_ids();
  trace.decision_interval = sim.frames_per_action();
  trace.frames.push_back(sim.render(state, 0));
  std::vector<std::vector<int>> gt{sim.ground_truth(state)};
  while (!sim.success(state) && state.step_count < max_steps && !state.terminal_failure) {
    const MetaAction a = policy.act(sim, state, rng);
    rec.actions.push_back(a);
    StepOutcome out = sim.apply(state, a, rng);
    for (auto& f : out.frames) trace.frames.push_back(std::move(f));
    for (auto& g : out.ground_truth) gt.push_back(std::move(g));
  }
  trace.ground_truth = std::move(gt);
  rec.success = sim.success(state);
  rec.final_state = std::move(state);
  return rec;
}

std::string_view policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kExpert:
      return "expert";
    case PolicyKind::kRandom:
      return "random";
    case PolicyKind::kMixed:
      return "mixed";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "expert") return PolicyKind::kExpert;
  if (name == "random") return PolicyKind::kRandom;
  if (name == "mixed") return PolicyKind::kMixed;
  throw Error(ErrorCode::kInvalidArgument, "policy must be expert, random or mixed");
}

std::vector<EpisodeTrace> run_policy(const Simulator& sim, PolicyKind kind, int episodes, const RandomSource& rng,
                                     const NoiseProfile& noise, int max_steps) {
  std::vector<EpisodeTrace> out;
  ExpertPolicy expert;
  RandomPolicy random;
  for (int i = 0; i < episodes; ++i) {
    const bool use_expert = kind == PolicyKind::kExpert || (kind == PolicyKind::kMixed && i < (episodes + 1) / 2);
    Policy& policy = use_expert ? static_cast<Policy&>(expert) : static_cast<Policy&>(random);
    RandomSource ep = rng.fork(static_cast<std::uint64_t>(i));
    EpisodeRecord rec = run_episode(sim, policy, ep, std::nullopt, max_steps);
    if (noise.is_identity()) {
      out.push_back(std::move(rec.trace));
    } else {
      RandomSource noise_rng = rng.fork(1'000'000ULL + static_cast<std::uint64_t>(i));
      out.push_back(corrupt(rec.trace, noise, noise_rng));
    }
  }
  return out;
}

}  // namespace subtrack
