#include "subtrack/task.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <utility>

#include "subtrack/error.hpp"

#ifndef SUBTRACK_DEFAULT_TASKS_DIR
#define SUBTRACK_DEFAULT_TASKS_DIR "tasks"
#endif

namespace subtrack {

using nlohmann::json;

std::string_view object_kind_name(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::kCube: return "cube";
    case ObjectKind::kBowl: return "bowl";
    case ObjectKind::kTray: return "tray";
    case ObjectKind::kDrawer: return "drawer";
    case ObjectKind::kHandle: return "handle";
  }
  return "unknown";
}

namespace {

ObjectKind parse_object_kind(std::string_view name) {
  for (ObjectKind k : {ObjectKind::kCube, ObjectKind::kBowl, ObjectKind::kTray, ObjectKind::kDrawer, ObjectKind::kHandle}) {
    if (object_kind_name(k) == name) return k;
  }
  throw Error(ErrorCode::kMalformedTaskFile, "unknown object kind '" + std::string(name) + "'");
}

constexpr std::array<std::pair<Verb, std::string_view>, 6> kVerbs{{
    {Verb::kPick, "PICK"},
    {Verb::kPlace, "PLACE"},
    {Verb::kPlace2Left, "PLACE2LEFT"},
    {Verb::kPlace2Right, "PLACE2RIGHT"},
    {Verb::kPull, "PULL"},
    {Verb::kPush, "PUSH"},
}};

constexpr std::array<std::pair<FailureKind, std::string_view>, 4> kFailures{{
    {FailureKind::kOccupied, "occupied"},
    {FailureKind::kClosed, "closed"},
    {FailureKind::kDrop, "drop"},
    {FailureKind::kPlacement, "placement"},
}};

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::kMalformedTaskFile, what); }

Point read_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) malformed(what + " must be [x, y]");
  return Point{j[0].get<double>(), j[1].get<double>()};
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

std::string_view verb_name(Verb verb) {
  for (const auto& [v, n] : kVerbs) {
    if (v == verb) return n;
  }
  return "UNKNOWN";
}

Verb parse_verb(std::string_view name) {
  for (const auto& [v, n] : kVerbs) {
    if (n == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown verb '" + std::string(name) + "'");
}

std::string to_string(const MetaAction& action) {
  return "[" + std::string(verb_name(action.verb)) + ", " + action.argument.str() + "]";
}

std::string_view failure_kind_name(FailureKind kind) {
  for (const auto& [k, n] : kFailures) {
    if (k == kind) return n;
  }
  return "unknown";
}

FailureKind parse_failure_kind(std::string_view name) {
  for (const auto& [k, n] : kFailures) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown failure kind '" + std::string(name) + "'");
}

const ObjectSpec& TaskDefinition::object(const ObjectId& id) const {
  for (const auto& o : objects) {
    if (o.id == id) return o;
  }
  throw Error(ErrorCode::kMissingObject, "task '" + task_id + "' has no object '" + id.str() + "'");
}

bool TaskDefinition::has_object(const ObjectId& id) const {
  return std::any_of(objects.begin(), objects.end(), [&](const ObjectSpec& o) { return o.id == id; });
}

std::vector<ObjectId> TaskDefinition::object_ids() const {
  std::vector<ObjectId> ids;
  for (const auto& o : objects) ids.push_back(o.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<ObjectId> TaskDefinition::movable_ids() const {
  std::vector<ObjectId> ids;
  for (const auto& o : objects) {
    if (o.kind == ObjectKind::kCube) ids.push_back(o.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool TaskDefinition::failure_allowed(FailureKind kind) const {
  return std::find(failures.begin(), failures.end(), kind) != failures.end();
}

BBox TaskDefinition::workspace_px() const {
  const Point a = camera.to_pixel(workspace.x0, workspace.y0);
  const Point b = camera.to_pixel(workspace.x1, workspace.y1);
  return BBox{std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
}

std::optional<DrawerCalibration> TaskDefinition::drawer_calibration() const {
  if (!drawer) return std::nullopt;
  const Point h{drawer->closed_center.x + drawer->handle_offset.x, drawer->closed_center.y + drawer->handle_offset.y};
  return DrawerCalibration{drawer->handle, camera.to_pixel(h.x, h.y), camera.to_pixels(drawer->stroke),
                           drawer->open_fraction};
}

std::filesystem::path tasks_directory(const std::optional<std::filesystem::path>& override_dir) {
  if (override_dir) return *override_dir;
  if (const char* env = std::getenv("SUBTRACK_TASKS_DIR"); env != nullptr && *env != '\0') return env;
  return SUBTRACK_DEFAULT_TASKS_DIR;
}

std::vector<std::string> list_tasks(const std::optional<std::filesystem::path>& dir) {
  std::vector<std::string> out;
  const auto root = tasks_directory(dir);
  if (!std::filesystem::is_directory(root)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

json subgoal_to_json(const SubgoalSpec& s) {
  json j;
  j["relation"] = std::string(relation_name(s.relation));
  j["target"] = s.target.str();
  j["reference"] = s.reference ? json(s.reference->str()) : json(nullptr);
  j["weight"] = s.weight;
  j["description"] = s.description;
  return j;
}

SubgoalSpec subgoal_from_json(const json& j, int id) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "subgoal must be an object");
  if (!j.contains("relation") || !j["relation"].is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "subgoal relation must be a string");
  }
  if (!j.contains("target") || !j["target"].is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "subgoal target must be a string");
  }
  SubgoalSpec s;
  s.id = id;
  s.relation = parse_relation(j["relation"].get<std::string>());
  s.target = ObjectId(j["target"].get<std::string>());
  if (j.contains("reference") && !j["reference"].is_null()) {
    if (!j["reference"].is_string()) throw Error(ErrorCode::kInvalidArgument, "subgoal reference must be a string");
    s.reference = ObjectId(j["reference"].get<std::string>());
  }
  if (j.contains("weight")) {
    if (!j["weight"].is_number()) throw Error(ErrorCode::kInvalidArgument, "subgoal weight must be a number");
    s.weight = j["weight"].get<double>();
  }
  if (j.contains("description") && j["description"].is_string()) s.description = j["description"].get<std::string>();
  return s;
}

TaskDefinition parse_task(const json& doc) {
  TaskDefinition task;
  try {
    task.task_id = require(doc, "task_id").get<std::string>();
    if (doc.contains("version")) task.version = doc["version"].get<int>();
    if (doc.contains("image_size")) {
      const Point sz = read_point(doc["image_size"], "image_size");
      task.image_size = ImageSize{static_cast<int>(sz.x), static_cast<int>(sz.y)};
    }
    if (doc.contains("camera")) {
      const json& c = doc["camera"];
      task.camera.scale = c.value("scale", task.camera.scale);
      task.camera.z_px = c.value("z_px", task.camera.z_px);
      if (c.contains("offset")) {
        const Point off = read_point(c["offset"], "camera.offset");
        task.camera.offset_x = off.x;
        task.camera.offset_y = off.y;
      }
    }
    if (doc.contains("workspace")) {
      const auto ws = doc["workspace"].get<std::vector<double>>();
      if (ws.size() != 4 || ws[0] >= ws[2] || ws[1] >= ws[3]) malformed("workspace must be [x0, y0, x1, y1]");
      task.workspace = WorldRect{ws[0], ws[1], ws[2], ws[3]};
    }
    task.held_lift = doc.value("held_lift", task.held_lift);

    for (const json& o : require(doc, "objects")) {
      ObjectSpec spec;
      spec.id = ObjectId(require(o, "id").get<std::string>());
      spec.kind = parse_object_kind(require(o, "kind").get<std::string>());
      const Point size = read_point(require(o, "size"), "object size");
      spec.width = size.x;
      spec.height = size.y;
      if (spec.id.empty() || task.has_object(spec.id)) malformed("object ids must be nonempty and unique");
      task.objects.push_back(spec);
    }

    int id = 1;
    for (const json& s : require(doc, "subgoals")) task.subgoals.push_back(subgoal_from_json(s, id++));
    validate_subgoals(task.subgoals);
    for (const auto& s : task.subgoals) {
      if (!task.has_object(s.target) || (s.reference && !task.has_object(*s.reference))) {
        malformed("subgoal " + std::to_string(s.id) + " references an unknown object");
      }
    }

    const json& scene = require(doc, "scene");
    task.jitter = scene.value("jitter", task.jitter);
    if (scene.contains("fixtures")) {
      for (const auto& [name, pos] : scene["fixtures"].items()) {
        task.fixtures[ObjectId(name)] = read_point(pos, "fixture " + name);
      }
    }
    if (scene.contains("placements")) {
      for (const auto& [name, p] : scene["placements"].items()) {
        Placement pl;
        if (p.contains("on")) {
          pl.on = ObjectId(p["on"].get<std::string>());
          pl.slot = p.value("slot", 0);
        } else {
          pl.at = read_point(require(p, "at"), "placement " + name);
        }
        task.placements[ObjectId(name)] = pl;
      }
    }
    if (scene.contains("table_spots")) {
      for (const json& p : scene["table_spots"]) task.table_spots.push_back(read_point(p, "table spot"));
    }

    if (doc.contains("drawer")) {
      const json& d = doc["drawer"];
      DrawerSpec spec;
      spec.drawer = ObjectId(require(d, "drawer").get<std::string>());
      spec.handle = ObjectId(require(d, "handle").get<std::string>());
      spec.closed_center = read_point(require(d, "closed_center"), "drawer.closed_center");
      spec.handle_offset = read_point(require(d, "handle_offset"), "drawer.handle_offset");
      spec.stroke = require(d, "stroke").get<double>();
      spec.open_fraction = d.value("open_fraction", spec.open_fraction);
      spec.visible_fraction = d.value("visible_fraction", spec.visible_fraction);
      if (d.contains("closed_drop_spots")) {
        for (const json& p : d["closed_drop_spots"]) spec.closed_drop_spots.push_back(read_point(p, "drop spot"));
      }
      if (!(spec.stroke > 0.0)) malformed("drawer stroke must be positive");
      task.drawer = spec;
    }

    for (const json& a : require(doc, "actions")) {
      if (!a.is_array() || a.size() != 2) malformed("actions must be [VERB, object] pairs");
      task.actions.push_back(MetaAction{parse_verb(a[0].get<std::string>()), ObjectId(a[1].get<std::string>())});
    }
    if (doc.contains("failures")) {
      for (const json& f : doc["failures"]) task.failures.push_back(parse_failure_kind(f.get<std::string>()));
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedTaskFile) throw;
    malformed(e.what());
  }
  return task;
}

TaskDefinition load_task(std::string_view task_id, const std::optional<std::filesystem::path>& dir) {
  const auto path = tasks_directory(dir) / (std::string(task_id) + ".json");
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnknownTask, "no task file for '" + std::string(task_id) + "' at " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    malformed(path.string() + ": " + e.what());
  }
  TaskDefinition task = parse_task(doc);
  if (task.task_id != task_id) malformed(path.string() + ": task_id does not match file name");
  return task;
}

}  // namespace subtrack
