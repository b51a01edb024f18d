#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace subtrack {

// Name of a task-relevant object, e.g. "red_cube" or "gray_tray".
class ObjectId {
 public:
  ObjectId() = default;
  explicit ObjectId(std::string name);

  const std::string& str() const { return name_; }
  bool empty() const { return name_.empty(); }
  // Trailing token after the last '_' ("red_cube" -> "cube").
  std::string category() const;

  auto operator<=>(const ObjectId&) const = default;

 private:
  std::string name_;
};

enum class SpatialRelation { kInside, kOnTopOf, kLeftAdjacent, kRightAdjacent, kOnSurface, kDrawerOpen };

std::string_view relation_name(SpatialRelation relation);
// Throws Error(kUnknownRelation) for anything outside the enum.
SpatialRelation parse_relation(std::string_view name);
inline bool relation_needs_reference(SpatialRelation r) { return r != SpatialRelation::kDrawerOpen; }

// One decomposed subgoal. `id` is 1-based; storage order is id - 1.
struct SubgoalSpec {
  int id = 1;
  SpatialRelation relation = SpatialRelation::kInside;
  ObjectId target;
  std::optional<ObjectId> reference;
  double weight = 1.0;
  std::string description;
};

// Throws Error(kInvalidArgument) if ids are not 1..N, a reference is
// missing/extra for the relation, a weight is negative or all weights are 0.
void validate_subgoals(std::span<const SubgoalSpec> subgoals);
std::vector<double> subgoal_weights(std::span<const SubgoalSpec> subgoals);

// Per-subgoal completion belief. Entries are clamped into [0, 1] on every
// write path.
class HiddenState {
 public:
  HiddenState() = default;
  explicit HiddenState(std::size_t n, double fill = 0.0);
  explicit HiddenState(std::vector<double> values);
  HiddenState(std::initializer_list<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  void set(std::size_t i, double v);
  std::span<const double> values() const { return values_; }

  bool operator==(const HiddenState&) const = default;

 private:
  std::vector<double> values_;
};

// 1 iff value > threshold; a value equal to the threshold counts as incomplete.
std::vector<int> binarize(const HiddenState& h, double threshold);

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

// Pixel box, origin top-left.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double diagonal() const;
  bool valid() const;
  bool contains(Point p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  static BBox around(Point c, double width, double height);

  bool operator==(const BBox&) const = default;
};

Point center(const BBox& b);
// Euclidean distance from p to the (closed) box; 0 inside.
double distance_to_box(Point p, const BBox& b);

struct ImageSize {
  int width = 640;
  int height = 480;
  bool operator==(const ImageSize&) const = default;
};

// One per-frame slice of the tracked boxes. A nullopt entry is an object
// that was not detected in this frame.
struct TrackFrame {
  int t = 0;
  ImageSize image_size;
  std::map<ObjectId, std::optional<BBox>> boxes;

  // nullopt when the object is absent or undetected.
  std::optional<BBox> box(const ObjectId& id) const;
  bool operator==(const TrackFrame&) const = default;
};

struct EpisodeTrace {
  std::string task_id;
  ImageSize image_size;
  std::vector<ObjectId> objects;
  int decision_interval = 10;
  std::vector<TrackFrame> frames;
  // When present, one binary vector per frame.
  std::optional<std::vector<std::vector<int>>> ground_truth;

  bool operator==(const EpisodeTrace&) const = default;
};

// Throws Error(kMalformedTrace) on ordering or box violations.
void validate_trace(const EpisodeTrace& trace);

}  // namespace subtrack

template <>
struct std::hash<subtrack::ObjectId> {
  std::size_t operator()(const subtrack::ObjectId& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};
