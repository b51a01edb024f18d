#include "subtrack/perception.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "subtrack/error.hpp"

namespace subtrack {

using nlohmann::json;

void NoiseProfile::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_miss) || !prob(p_swap)) throw Error(ErrorCode::kInvalidArgument, "noise probabilities must lie in [0, 1]");
  if (!(jitter_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "jitter_sigma must be >= 0");
  if (swap_max_frames < 1) throw Error(ErrorCode::kInvalidArgument, "swap_max_frames must be >= 1");
  for (const auto& w : occlusion_windows) {
    if (w.t_end < w.t_start) throw Error(ErrorCode::kInvalidArgument, "occlusion window ends before it starts");
  }
}

json noise_to_json(const NoiseProfile& p) {
  json j;
  j["p_miss"] = p.p_miss;
  j["jitter_sigma"] = p.jitter_sigma;
  j["p_swap"] = p.p_swap;
  j["swap_max_frames"] = p.swap_max_frames;
  j["occlusion_windows"] = json::array();
  for (const auto& w : p.occlusion_windows) {
    j["occlusion_windows"].push_back({{"object", w.object.str()}, {"t_start", w.t_start}, {"t_end", w.t_end}});
  }
  return j;
}

NoiseProfile noise_from_json(const json& j) {
  NoiseProfile p;
  p.p_miss = j.value("p_miss", p.p_miss);
  p.jitter_sigma = j.value("jitter_sigma", p.jitter_sigma);
  p.p_swap = j.value("p_swap", p.p_swap);
  p.swap_max_frames = j.value("swap_max_frames", p.swap_max_frames);
  if (j.contains("occlusion_windows")) {
    for (const json& w : j["occlusion_windows"]) {
      p.occlusion_windows.push_back(
          OcclusionWindow{ObjectId(w.at("object").get<std::string>()), w.at("t_start").get<int>(), w.at("t_end").get<int>()});
    }
  }
  p.validate();
  return p;
}

json frame_to_json(const TrackFrame& frame) {
  json boxes = json::object();
  for (const auto& [id, box] : frame.boxes) {
    boxes[id.str()] = box ? json::array({box->x_min, box->y_min, box->x_max, box->y_max}) : json(nullptr);
  }
  json j;
  j["t"] = frame.t;
  j["boxes"] = std::move(boxes);
  return j;
}

TrackFrame frame_from_json(const json& j, ImageSize image_size) {
  TrackFrame f;
  f.image_size = image_size;
  if (!j.is_object() || !j.contains("t") || !j["t"].is_number_integer()) {
    throw Error(ErrorCode::kMalformedTrace, "frame needs an integer 't'");
  }
  f.t = j["t"].get<int>();
  if (!j.contains("boxes") || !j["boxes"].is_object()) throw Error(ErrorCode::kMalformedTrace, "frame needs 'boxes'");
  for (const auto& [name, value] : j["boxes"].items()) {
    if (value.is_null()) {
      f.boxes[ObjectId(name)] = std::nullopt;
      continue;
    }
    if (!value.is_array() || value.size() != 4) {
      throw Error(ErrorCode::kMalformedTrace, "box for '" + name + "' must be [x0, y0, x1, y1] or null");
    }
    for (const json& v : value) {
      if (!v.is_number()) throw Error(ErrorCode::kMalformedTrace, "box for '" + name + "' has a non-numeric entry");
    }
    const BBox b{value[0].get<double>(), value[1].get<double>(), value[2].get<double>(), value[3].get<double>()};
    if (!b.valid()) throw Error(ErrorCode::kMalformedTrace, "box for '" + name + "' is inverted or non-finite");
    f.boxes[ObjectId(name)] = b;
  }
  return f;
}

EpisodeTrace read_trace(std::istream& in) {
  EpisodeTrace trace;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::optional<bool> frames_have_gt;
  std::vector<std::vector<int>> gt;
  auto fail = [&](const std::string& msg) -> void {
    throw Error(ErrorCode::kMalformedTrace, "line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (!j.is_object() || !j.contains("task_id") || !j["task_id"].is_string()) fail("header needs 'task_id'");
        trace.task_id = j["task_id"].get<std::string>();
        if (j.contains("image_size")) {
          const auto sz = j["image_size"].get<std::vector<int>>();
          if (sz.size() != 2 || sz[0] <= 0 || sz[1] <= 0) fail("image_size must be [w, h]");
          trace.image_size = ImageSize{sz[0], sz[1]};
        }
        if (j.contains("objects")) {
          for (const json& o : j["objects"]) trace.objects.emplace_back(o.get<std::string>());
        }
        trace.decision_interval = j.value("decision_interval", trace.decision_interval);
        if (trace.decision_interval < 1) fail("decision_interval must be >= 1");
        have_header = true;
        continue;
      }
      TrackFrame frame = frame_from_json(j, trace.image_size);
      if (!trace.frames.empty() && frame.t <= trace.frames.back().t) fail("frame indices must strictly increase");
      if (frame.t < 0) fail("negative frame index");
      const bool has_gt = j.contains("gt");
      if (frames_have_gt && *frames_have_gt != has_gt) fail("'gt' must be present on every frame or none");
      frames_have_gt = has_gt;
      if (has_gt) {
        auto bits = j["gt"].get<std::vector<int>>();
        for (int b : bits) {
          if (b != 0 && b != 1) fail("'gt' entries must be 0 or 1");
        }
        gt.push_back(std::move(bits));
      }
      trace.frames.push_back(std::move(frame));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kMalformedTrace && std::string(e.what()).find("line ") != std::string::npos) throw;
      fail(e.what());
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::kMalformedTrace, "line 0: missing header line");
  if (frames_have_gt.value_or(false)) trace.ground_truth = std::move(gt);
  return trace;
}

EpisodeTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMalformedTrace, "cannot open trace file " + path.string());
  return read_trace(in);
}

void write_trace(const EpisodeTrace& trace, std::ostream& out) {
  json header;
  header["task_id"] = trace.task_id;
  header["image_size"] = {trace.image_size.width, trace.image_size.height};
  header["objects"] = json::array();
  for (const auto& o : trace.objects) header["objects"].push_back(o.str());
  header["decision_interval"] = trace.decision_interval;
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    json j = frame_to_json(trace.frames[i]);
    if (trace.ground_truth) j["gt"] = (*trace.ground_truth)[i];
    out << j.dump() << '\n';
  }
}

void save_trace(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write trace file " + path.string());
  write_trace(trace, out);
}

namespace {

struct ActiveSwap {
  ObjectId a;
  ObjectId b;
  int frames_left = 0;
};

}  // namespace

EpisodeTrace corrupt(const EpisodeTrace& trace, const NoiseProfile& profile, RandomSource& rng) {
  profile.validate();
  if (!trace.frames.empty()) {
    for (const auto& w : profile.occlusion_windows) {
      if (w.t_start < trace.frames.front().t || w.t_end > trace.frames.back().t) {
        throw Error(ErrorCode::kInvalidArgument, "occlusion window for '" + w.object.str() + "' exceeds the trace");
      }
    }
  }
  EpisodeTrace out = trace;
  std::optional<ActiveSwap> swap;

  for (TrackFrame& frame : out.frames) {
    if (profile.p_swap > 0.0) {
      if (!swap && rng.bernoulli(profile.p_swap)) {
        // Pick two detected objects of the same category.
        std::map<std::string, std::vector<ObjectId>> by_category;
        for (const auto& [id, box] : frame.boxes) {
          if (box) by_category[id.category()].push_back(id);
        }
        std::vector<std::vector<ObjectId>*> groups;
        for (auto& [cat, ids] : by_category) {
          if (ids.size() >= 2) groups.push_back(&ids);
        }
        if (!groups.empty()) {
          auto& ids = *groups[rng.index(groups.size())];
          const std::size_t i = rng.index(ids.size());
          std::size_t j = rng.index(ids.size() - 1);
          if (j >= i) ++j;
          swap = ActiveSwap{ids[i], ids[j], 1 + static_cast<int>(rng.index(static_cast<std::size_t>(profile.swap_max_frames)))};
        }
      }
      if (swap) {
        auto ia = frame.boxes.find(swap->a);
        auto ib = frame.boxes.find(swap->b);
        if (ia != frame.boxes.end() && ib != frame.boxes.end()) std::swap(ia->second, ib->second);
        if (--swap->frames_left == 0) swap.reset();
      }
    }

    for (const auto& w : profile.occlusion_windows) {
      if (frame.t >= w.t_start && frame.t <= w.t_end) {
        if (auto it = frame.boxes.find(w.object); it != frame.boxes.end()) it->second.reset();
      }
    }

    for (auto& [id, box] : frame.boxes) {
      if (!box) continue;
      if (profile.p_miss > 0.0 && rng.bernoulli(profile.p_miss)) {
        box.reset();
        continue;
      }
      if (profile.jitter_sigma > 0.0) {
        const double dx = rng.normal(0.0, profile.jitter_sigma);
        const double dy = rng.normal(0.0, profile.jitter_sigma);
        box->x_min += dx;
        box->x_max += dx;
        box->y_min += dy;
        box->y_max += dy;
      }
    }
  }
  return out;
}

}  // namespace subtrack
