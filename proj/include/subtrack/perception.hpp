#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "subtrack/core.hpp"
#include "subtrack/random.hpp"

namespace subtrack {

struct OcclusionWindow {
  ObjectId object;
  int t_start = 0;  // inclusive
  int t_end = 0;    // inclusive
};

// Segmentation-style imperfections applied to clean box trajectories.
struct NoiseProfile {
  double p_miss = 0.0;        // per object-frame dropout
  double jitter_sigma = 0.0;  // px, per axis, box size preserved
  double p_swap = 0.0;        // per frame chance of starting a label swap
  int swap_max_frames = 10;   // swap windows last 1..swap_max_frames frames
  std::vector<OcclusionWindow> occlusion_windows;

  static NoiseProfile none() { return {}; }
  static NoiseProfile standard() {
    NoiseProfile p;
    p.p_miss = 0.1;
    p.jitter_sigma = 3.0;
    return p;
  }
  bool is_identity() const {
    return p_miss == 0.0 && jitter_sigma == 0.0 && p_swap == 0.0 && occlusion_windows.empty();
  }
  // Throws Error(kInvalidArgument).
  void validate() const;
};

nlohmann::json noise_to_json(const NoiseProfile& p);
NoiseProfile noise_from_json(const nlohmann::json& j);

// Line-delimited JSON: a header line, then one line per frame.
// Throws Error(kMalformedTrace) naming the offending line.
EpisodeTrace load_trace(const std::filesystem::path& path);
EpisodeTrace read_trace(std::istream& in);
void save_trace(const EpisodeTrace& trace, const std::filesystem::path& path);
void write_trace(const EpisodeTrace& trace, std::ostream& out);

nlohmann::json frame_to_json(const TrackFrame& frame);
// Reads "t" and "boxes"; image size is supplied by the caller.
TrackFrame frame_from_json(const nlohmann::json& j, ImageSize image_size);

// Applies swaps, occlusion windows, dropout and jitter, in that order.
// Frame count, timestamps and ground truth are never altered. Draws nothing
// from `rng` for a component whose parameter is zero.
EpisodeTrace corrupt(const EpisodeTrace& trace, const NoiseProfile& profile, RandomSource& rng);

}  // namespace subtrack
