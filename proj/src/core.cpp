#include "subtrack/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "subtrack/error.hpp"

namespace subtrack {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingReference: return "MissingReference";
    case ErrorCode::kMissingTarget: return "MissingTarget";
    case ErrorCode::kMissingObject: return "MissingObject";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kProviderUnreachable: return "ProviderUnreachable";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kUnknownRelation: return "UnknownRelation";
    case ErrorCode::kUnknownTask: return "UnknownTask";
    case ErrorCode::kMalformedTaskFile: return "MalformedTaskFile";
    case ErrorCode::kMalformedTrace: return "MalformedTrace";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kStaleFrame: return "StaleFrame";
    case ErrorCode::kIllegalAction: return "IllegalAction";
    case ErrorCode::kIllegalFailureForTask: return "IllegalFailureForTask";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Error";
}

ObjectId::ObjectId(std::string name) : name_(std::move(name)) {}

std::string ObjectId::category() const {
  const auto pos = name_.rfind('_');
  return pos == std::string::npos ? name_ : name_.substr(pos + 1);
}

namespace {

constexpr std::array<std::pair<SpatialRelation, std::string_view>, 6> kRelationNames{{
    {SpatialRelation::kInside, "inside"},
    {SpatialRelation::kOnTopOf, "on_top_of"},
    {SpatialRelation::kLeftAdjacent, "left_adjacent"},
    {SpatialRelation::kRightAdjacent, "right_adjacent"},
    {SpatialRelation::kOnSurface, "on_surface"},
    {SpatialRelation::kDrawerOpen, "drawer_open"},
}};

}  // namespace

std::string_view relation_name(SpatialRelation relation) {
  for (const auto& [r, name] : kRelationNames) {
    if (r == relation) return name;
  }
  return "unknown";
}

SpatialRelation parse_relation(std::string_view name) {
  for (const auto& [r, n] : kRelationNames) {
    if (n == name) return r;
  }
  throw Error(ErrorCode::kUnknownRelation, "relation '" + std::string(name) + "' is not recognized");
}

void validate_subgoals(std::span<const SubgoalSpec> subgoals) {
  if (subgoals.empty()) throw Error(ErrorCode::kInvalidArgument, "subgoal list is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < subgoals.size(); ++i) {
    const SubgoalSpec& s = subgoals[i];
    if (s.id != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::kInvalidArgument, "subgoal ids must be 1..N in order");
    }
    if (s.target.empty()) throw Error(ErrorCode::kInvalidArgument, "subgoal target is empty");
    if (relation_needs_reference(s.relation) != s.reference.has_value()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subgoal " + std::to_string(s.id) + ": relation '" + std::string(relation_name(s.relation)) +
                      "' has the wrong number of reference objects");
    }
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
      throw Error(ErrorCode::kInvalidArgument, "subgoal weights must be finite and nonnegative");
    }
    total += s.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "subgoal weights sum to zero");
}

std::vector<double> subgoal_weights(std::span<const SubgoalSpec> subgoals) {
  std::vector<double> w;
  w.reserve(subgoals.size());
  for (const auto& s : subgoals) w.push_back(s.weight);
  return w;
}

namespace {

double clamp01(double v) {
  if (std::isnan(v)) return 0.0;
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

HiddenState::HiddenState(std::size_t n, double fill) : values_(n, clamp01(fill)) {}

HiddenState::HiddenState(std::vector<double> values) : values_(std::move(values)) {
  for (double& v : values_) v = clamp01(v);
}

HiddenState::HiddenState(std::initializer_list<double> values) : HiddenState(std::vector<double>(values)) {}

void HiddenState::set(std::size_t i, double v) { values_.at(i) = clamp01(v); }

std::vector<int> binarize(const HiddenState& h, double threshold) {
  std::vector<int> bits(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) bits[i] = h[i] > threshold ? 1 : 0;
  return bits;
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double BBox::diagonal() const { return std::hypot(width(), height()); }

bool BBox::valid() const {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
         x_min <= x_max && y_min <= y_max;
}

BBox BBox::around(Point c, double width, double height) {
  return BBox{c.x - width / 2.0, c.y - height / 2.0, c.x + width / 2.0, c.y + height / 2.0};
}

Point center(const BBox& b) { return Point{(b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0}; }

double distance_to_box(Point p, const BBox& b) {
  const double dx = std::max({b.x_min - p.x, 0.0, p.x - b.x_max});
  const double dy = std::max({b.y_min - p.y, 0.0, p.y - b.y_max});
  return std::hypot(dx, dy);
}

std::optional<BBox> TrackFrame::box(const ObjectId& id) const {
  const auto it = boxes.find(id);
  if (it == boxes.end()) return std::nullopt;
  return it->second;
}

void validate_trace(const EpisodeTrace& trace) {
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    const TrackFrame& f = trace.frames[i];
    if (f.t < 0) throw Error(ErrorCode::kMalformedTrace, "frame " + std::to_string(i) + " has negative t");
    if (i > 0 && f.t <= trace.frames[i - 1].t) {
      throw Error(ErrorCode::kMalformedTrace, "frame indices must be strictly increasing at frame " + std::to_string(i));
    }
    for (const auto& [id, box] : f.boxes) {
      if (box && !box->valid()) {
        throw Error(ErrorCode::kMalformedTrace, "invalid box for '" + id.str() + "' at t=" + std::to_string(f.t));
      }
    }
  }
  if (trace.decision_interval < 1) throw Error(ErrorCode::kMalformedTrace, "decision interval must be >= 1");
  if (trace.ground_truth && trace.ground_truth->size() != trace.frames.size()) {
    throw Error(ErrorCode::kMalformedTrace, "ground truth must have one entry per frame");
  }
}

}  // namespace subtrack
