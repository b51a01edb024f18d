#include "subtrack/affordance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subtrack/error.hpp"

namespace subtrack {

namespace {

constexpr double kFramePadding = 0.2;

BBox padded_frame(ImageSize image) {
  const double px = kFramePadding * image.width;
  const double py = kFramePadding * image.height;
  return BBox{-px, -py, image.width + px, image.height + py};
}

int grid_side(int n) { return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))))); }

// Cell-centered grid of cols x rows over `r`; a degenerate axis collapses
// onto its single coordinate.
void append_grid(const BBox& r, int cols, int rows, std::vector<Point>& out) {
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      out.push_back(Point{r.x_min + (i + 0.5) * r.width() / cols, r.y_min + (j + 0.5) * r.height() / rows});
    }
  }
}

// n points evenly spaced along the perimeter of `r`, clockwise from the
// top-left corner, offset by half a step.
void append_perimeter(const BBox& r, int n, std::vector<Point>& out) {
  const double w = r.width();
  const double h = r.height();
  const double perimeter = 2.0 * (w + h);
  if (perimeter <= 0.0) {
    out.push_back(center(r));
    return;
  }
  const double step = perimeter / n;
  for (int k = 0; k < n; ++k) {
    double s = (k + 0.5) * step;
    if (s < w) {
      out.push_back({r.x_min + s, r.y_min});
      continue;
    }
    s -= w;
    if (s < h) {
      out.push_back({r.x_max, r.y_min + s});
      continue;
    }
    s -= h;
    if (s < w) {
      out.push_back({r.x_max - s, r.y_max});
      continue;
    }
    s -= w;
    out.push_back({r.x_min, r.y_max - std::min(s, h)});
  }
}

std::pair<double, double> target_size(const SubgoalSpec& subgoal, const TrackFrame& frame,
                                      const AffordanceGeometry& geometry) {
  if (const auto box = frame.box(subgoal.target)) return {box->width(), box->height()};
  const auto it = geometry.object_size_px.find(subgoal.target);
  if (it != geometry.object_size_px.end()) return it->second;
  throw Error(ErrorCode::kMissingTarget, "no size known for target '" + subgoal.target.str() + "'");
}

BBox reference_box(const SubgoalSpec& subgoal, const TrackFrame& frame) {
  const auto box = frame.box(*subgoal.reference);
  if (!box) {
    throw Error(ErrorCode::kMissingReference,
                "reference '" + subgoal.reference->str() + "' not detected at t=" + std::to_string(frame.t));
  }
  return *box;
}

}  // namespace

void validate_sample_set(const AffordanceSampleSet& set, ImageSize image) {
  if (set.points.empty()) throw Error(ErrorCode::kMalformedResponse, "sample set is empty");
  const BBox bound = padded_frame(image);
  for (const Point& p : set.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !bound.contains(p)) {
      throw Error(ErrorCode::kMalformedResponse, "sample point outside the padded frame");
    }
  }
}

AffordanceGeometry AffordanceGeometry::from_task(const TaskDefinition& task) {
  AffordanceGeometry g;
  g.image_size = task.image_size;
  g.workspace_px = task.workspace_px();
  for (const auto& o : task.objects) {
    g.object_size_px[o.id] = {task.camera.to_pixels(o.width), task.camera.to_pixels(o.height)};
  }
  g.drawer = task.drawer_calibration();
  return g;
}

BBox satisfied_region(const SubgoalSpec& subgoal, const TrackFrame& frame, const AffordanceGeometry& geometry) {
  switch (subgoal.relation) {
    case SpatialRelation::kInside:
    case SpatialRelation::kOnSurface:
      return reference_box(subgoal, frame);
    case SpatialRelation::kOnTopOf: {
      const BBox ref = reference_box(subgoal, frame);
      const auto [tw, th] = target_size(subgoal, frame, geometry);
      const double cx = center(ref).x;
      return BBox{cx - tw / 2.0, ref.y_min - th, cx + tw / 2.0, ref.y_min};
    }
    case SpatialRelation::kLeftAdjacent:
    case SpatialRelation::kRightAdjacent: {
      const BBox ref = reference_box(subgoal, frame);
      const auto [tw, th] = target_size(subgoal, frame, geometry);
      const Point c = center(ref);
      const double sign = subgoal.relation == SpatialRelation::kLeftAdjacent ? -1.0 : 1.0;
      const double a = c.x + sign * 0.5 * tw;
      const double b = c.x + sign * 1.5 * tw;
      return BBox{std::min(a, b), c.y - 0.5 * th, std::max(a, b), c.y + 0.5 * th};
    }
    case SpatialRelation::kDrawerOpen: {
      if (!geometry.drawer) throw Error(ErrorCode::kInvalidArgument, "drawer relation without drawer calibration");
      const DrawerCalibration& d = *geometry.drawer;
      const double x0 = d.closed_handle_px.x + d.open_fraction * d.stroke_px;
      return BBox{x0, d.closed_handle_px.y, d.closed_handle_px.x + d.stroke_px, d.closed_handle_px.y};
    }
  }
  throw Error(ErrorCode::kUnknownRelation, "unhandled relation");
}

double unsatisfied_margin(const SubgoalSpec& subgoal, const TrackFrame& frame, const AffordanceGeometry& geometry) {
  const auto [w, h] = target_size(subgoal, frame, geometry);
  return 0.5 * std::hypot(w, h);
}

AffordanceSampleSet scripted_affordance(const SubgoalSpec& subgoal, Polarity polarity, const TrackFrame& frame,
                                        const AffordanceGeometry& geometry, RandomSource& /*rng*/,
                                        int samples_per_set) {
  if (samples_per_set < 1) throw Error(ErrorCode::kInvalidArgument, "samples_per_set must be >= 1");
  const BBox region = satisfied_region(subgoal, frame, geometry);
  AffordanceSampleSet out;
  const bool track = region.height() <= 0.0;

  if (polarity == Polarity::kSatisfied) {
    if (track) {
      append_grid(region, samples_per_set, 1, out.points);
    } else {
      const int g = grid_side(samples_per_set);
      append_grid(region, g, g, out.points);
    }
    return out;
  }

  const double margin = unsatisfied_margin(subgoal, frame, geometry);
  const double keep_out = margin + 1.0;
  const BBox bound = padded_frame(geometry.image_size);

  if (track) {
    // Handle positions along the same track, short of the open region.
    const DrawerCalibration& d = *geometry.drawer;
    const double x_end = region.x_min - keep_out;
    if (x_end > d.closed_handle_px.x) {
      append_grid(BBox{d.closed_handle_px.x, region.y_min, x_end, region.y_min}, samples_per_set, 1, out.points);
    } else {
      out.points.push_back(Point{region.x_min - keep_out, region.y_min});
    }
    return out;
  }

  const BBox ring{region.x_min - keep_out, region.y_min - keep_out, region.x_max + keep_out, region.y_max + keep_out};
  std::vector<Point> candidates;
  append_perimeter(ring, samples_per_set, candidates);
  const BBox& ws = geometry.workspace_px;
  const double aspect = ws.height() > 0.0 ? ws.width() / ws.height() : 1.0;
  const int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(samples_per_set * aspect))));
  const int rows = std::max(1, static_cast<int>(std::lround(static_cast<double>(samples_per_set) / cols)));
  append_grid(ws, cols, rows, candidates);

  for (const Point& p : candidates) {
    if (bound.contains(p) && distance_to_box(p, region) > margin) out.points.push_back(p);
  }
  if (out.points.empty()) {
    for (const Point& p : {Point{bound.x_min, bound.y_min}, Point{bound.x_max, bound.y_min},
                           Point{bound.x_min, bound.y_max}, Point{bound.x_max, bound.y_max}}) {
      if (distance_to_box(p, region) > margin) out.points.push_back(p);
    }
  }
  return out;
}

double min_distance(Point observed, const AffordanceSampleSet& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : set.points) best = std::min(best, distance(observed, p));
  return best;
}

SubgoalDistances distances(const SubgoalSpec& subgoal, const TrackFrame& frame, const AffordanceSampleSet& set0,
                           const AffordanceSampleSet& set1) {
  const auto box = frame.box(subgoal.target);
  if (!box) {
    throw Error(ErrorCode::kMissingTarget,
                "target '" + subgoal.target.str() + "' not detected at t=" + std::to_string(frame.t));
  }
  if (set0.points.empty() || set1.points.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "affordance sample sets must be nonempty");
  }
  const Point c = center(*box);
  return SubgoalDistances{std::max(min_distance(c, set0), kDistanceFloor),
                          std::max(min_distance(c, set1), kDistanceFloor)};
}

void AffordanceProvider::begin_episode(const std::string& episode_id) {
  episode_ = episode_id;
  generated_.clear();
}

AffordanceSampleSet AffordanceProvider::sample(const SubgoalSpec& subgoal, Polarity polarity, const TrackFrame& frame,
                                               RandomSource& rng) {
  AffordanceSampleSet set = evaluate(subgoal, polarity, frame, rng);
  if (generated_.insert({subgoal.id, static_cast<int>(polarity)}).second) ++ledger_.function_generations;
  ++ledger_.evaluations;
  return set;
}

ScriptedAffordanceProvider::ScriptedAffordanceProvider(AffordanceGeometry geometry, int samples_per_set)
    : geometry_(std::move(geometry)), samples_per_set_(samples_per_set) {}

AffordanceSampleSet ScriptedAffordanceProvider::evaluate(const SubgoalSpec& subgoal, Polarity polarity,
                                                         const TrackFrame& frame, RandomSource& rng) {
  return scripted_affordance(subgoal, polarity, frame, geometry_, rng, samples_per_set_);
}

}  // namespace subtrack
