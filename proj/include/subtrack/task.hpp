#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "subtrack/core.hpp"

namespace subtrack {

enum class ObjectKind { kCube, kBowl, kTray, kDrawer, kHandle };

std::string_view object_kind_name(ObjectKind kind);

struct ObjectSpec {
  ObjectId id;
  ObjectKind kind = ObjectKind::kCube;
  double width = 6.0;  // world units
  double height = 6.0;
};

// Fixed top-down camera with a slight tilt: stacking raises a box by z_px
// pixels per level. Affine in (x, y, level).
struct Camera {
  double scale = 4.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double z_px = 24.0;

  Point to_pixel(double x, double y, double level = 0.0) const {
    return Point{offset_x + scale * x, offset_y + scale * y - z_px * level};
  }
  double to_pixels(double length) const { return scale * length; }
};

struct WorldRect {
  double x0 = 0.0, y0 = 0.0, x1 = 160.0, y1 = 120.0;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

enum class Verb { kPick, kPlace, kPlace2Left, kPlace2Right, kPull, kPush };

std::string_view verb_name(Verb verb);
Verb parse_verb(std::string_view name);

struct MetaAction {
  Verb verb = Verb::kPick;
  ObjectId argument;
  bool operator==(const MetaAction&) const = default;
};

std::string to_string(const MetaAction& action);

enum class FailureKind { kOccupied, kClosed, kDrop, kPlacement };

std::string_view failure_kind_name(FailureKind kind);
FailureKind parse_failure_kind(std::string_view name);

// Initial placement of a movable object: onto a slot of a fixture, or at a
// table position.
struct Placement {
  std::optional<ObjectId> on;
  int slot = 0;
  std::optional<Point> at;
};

struct DrawerSpec {
  ObjectId drawer;
  ObjectId handle;
  Point closed_center;      // world, drawer body center when closed
  Point handle_offset;      // handle center relative to body center
  double stroke = 15.0;     // world units along +x
  double open_fraction = 0.9;
  double visible_fraction = 0.5;  // contents hidden below this extension
  std::vector<Point> closed_drop_spots;  // where a place into a shut drawer lands
};

// Pixel-space calibration of the drawer handle track.
struct DrawerCalibration {
  ObjectId handle;
  Point closed_handle_px;
  double stroke_px = 60.0;
  double open_fraction = 0.9;
};

struct TaskDefinition {
  std::string task_id;
  int version = 1;
  ImageSize image_size;
  Camera camera;
  WorldRect workspace;
  double held_lift = 3.0;  // stack levels a held object is raised by
  std::vector<ObjectSpec> objects;
  std::vector<SubgoalSpec> subgoals;
  std::map<ObjectId, Point> fixtures;
  std::map<ObjectId, Placement> placements;
  std::vector<Point> table_spots;
  double jitter = 1.0;
  std::optional<DrawerSpec> drawer;
  std::vector<MetaAction> actions;
  std::vector<FailureKind> failures;

  const ObjectSpec& object(const ObjectId& id) const;
  bool has_object(const ObjectId& id) const;
  std::vector<ObjectId> object_ids() const;
  std::vector<ObjectId> movable_ids() const;
  bool failure_allowed(FailureKind kind) const;
  BBox workspace_px() const;
  std::optional<DrawerCalibration> drawer_calibration() const;
};

// Search order: explicit directory, $SUBTRACK_TASKS_DIR, the build-time default.
std::filesystem::path tasks_directory(const std::optional<std::filesystem::path>& override_dir = std::nullopt);
std::vector<std::string> list_tasks(const std::optional<std::filesystem::path>& dir = std::nullopt);

// Throws Error(kUnknownTask) if no file exists, kMalformedTaskFile on schema errors.
TaskDefinition load_task(std::string_view task_id, const std::optional<std::filesystem::path>& dir = std::nullopt);
TaskDefinition parse_task(const nlohmann::json& doc);

nlohmann::json subgoal_to_json(const SubgoalSpec& s);
SubgoalSpec subgoal_from_json(const nlohmann::json& j, int id);

}  // namespace subtrack
