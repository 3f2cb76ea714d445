#include "spatialqa/qa_temporal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "qa_common.hpp"
#include "spatialqa/error.hpp"
#include "spatialqa/rng.hpp"

namespace spatialqa {

using detail::RecordSink;

namespace {

std::vector<int> visible_unique(const SceneGraph& g, int frame_id) {
  std::vector<int> out;
  for (int id : g.visible_in(frame_id)) {
    if (g.is_category_unique(id)) out.push_back(id);
  }
  return out;
}

int seq_length(const std::vector<int>& seq) { return static_cast<int>(seq.size()); }

}  // namespace

std::vector<QaRecord> gen_cam_obj_abs_dist(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg) {
  RecordSink sink(g, Task::CamObjAbsDist);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const int frame_id = seq[k];
    const auto candidates = visible_unique(g, frame_id);
    if (candidates.empty()) continue;
    Rng rng = Rng::named(stream_name(cfg, g.scene_id(), Task::CamObjAbsDist, k));
    const ObjectInstance& o = g.object(candidates[rng.below(candidates.size())]);
    const double d = closest_point_on_box(g.camera_position(frame_id), o.box).distance;
    const std::string truth = format_fixed(d, 1);
    // Camera inside the box, or too close for a nonzero answer.
    if (d == 0.0 || *parse_decimal(truth) <= 0.0) continue;
    QaRecord& r = sink.add(AnswerType::NA,
                           fmt::format("In frame {} of {}, approximately how far (in meters) is the camera from the "
                                       "closest point of the {}?",
                                       k + 1, seq_length(seq), o.category),
                           truth);
    r.frame_refs = {frame_id};
    r.meta["frame_index"] = k + 1;
    r.meta["instance"] = o.instance_id;
    r.meta["distance_m"] = d;
  }
  return sink.take();
}

std::vector<QaRecord> gen_cam_obj_rel_dist(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg) {
  RecordSink sink(g, Task::CamObjRelDist);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const int frame_id = seq[k];
    const auto visible = visible_unique(g, frame_id);
    if (visible.size() < 4) continue;
    Rng rng = Rng::named(stream_name(cfg, g.scene_id(), Task::CamObjRelDist, k));
    const Vec3 camera = g.camera_position(frame_id);
    std::vector<int> candidates;
    std::vector<double> distances;
    for (std::size_t idx : rng.sample(visible.size(), 4)) {
      candidates.push_back(visible[idx]);
      distances.push_back(closest_point_on_box(camera, g.object(visible[idx]).box).distance);
    }
    std::vector<std::size_t> order(4);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return distances[x] < distances[y]; });
    if (distances[order[1]] - distances[order[0]] < cfg.ambiguity_margin_m) continue;

    std::vector<std::string> options;
    for (int id : candidates) options.push_back(g.object(id).category);
    QaRecord& r = sink.add(AnswerType::MCA,
                           fmt::format("In frame {} of {}, which of these objects ({}) is the closest to the camera?",
                                       k + 1, seq_length(seq), detail::join_names(options)),
                           options[order[0]]);
    r.options = options;
    r.frame_refs = {frame_id};
    r.meta["frame_index"] = k + 1;
    r.meta["candidate_instances"] = candidates;
    r.meta["candidate_distances_m"] = distances;
    r.meta["ambiguity_margin_m"] = cfg.ambiguity_margin_m;
  }
  return sink.take();
}

std::optional<std::string> relative_position_label(const std::array<Vec3, 8>& a_cam, const std::array<Vec3, 8>& b_cam,
                                                   RelPosAxis axis, double margin) {
  const int component = axis == RelPosAxis::NearFar ? 2 : (axis == RelPosAxis::LeftRight ? 0 : 1);
  auto interval = [&](const std::array<Vec3, 8>& corners) {
    double lo = corners[0][component];
    double hi = lo;
    for (const Vec3& c : corners) {
      lo = std::min(lo, c[component]);
      hi = std::max(hi, c[component]);
    }
    return std::pair{lo, hi};
  };
  const auto [a_lo, a_hi] = interval(a_cam);
  const auto [b_lo, b_hi] = interval(b_cam);
  static constexpr const char* kLow[] = {"near", "left", "up"};
  static constexpr const char* kHigh[] = {"far", "right", "down"};
  const int slot = static_cast<int>(axis);
  if (a_hi + margin <= b_lo) return kLow[slot];
  if (b_hi + margin <= a_lo) return kHigh[slot];
  return std::nullopt;
}

std::vector<QaRecord> gen_obj_obj_rel_pos(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg) {
  RecordSink sink(g, Task::ObjObjRelPos);
  const int n = seq_length(seq);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const int frame_id = seq[k];
    const auto visible = visible_unique(g, frame_id);
    if (visible.size() < 2) continue;
    Rng rng = Rng::named(stream_name(cfg, g.scene_id(), Task::ObjObjRelPos, k));
    const auto pick = rng.sample(visible.size(), 2);
    const ObjectInstance& a = g.object(visible[pick[0]]);
    const ObjectInstance& b = g.object(visible[pick[1]]);
    const auto a_cam = g.object_in_camera(frame_id, a.instance_id);
    const auto b_cam = g.object_in_camera(frame_id, b.instance_id);

    struct AxisQuestion {
      RelPosAxis axis;
      const char* name;
      std::vector<std::string> options;
      std::string text;
    };
    const std::string prefix = fmt::format("In frame {} of {}, from the camera's perspective,", k + 1, n);
    const AxisQuestion questions[] = {
        {RelPosAxis::NearFar, "near_far", {"near", "far"},
         fmt::format("{} is the {} nearer or farther than the {}?", prefix, a.category, b.category)},
        {RelPosAxis::LeftRight, "left_right", {"left", "right"},
         fmt::format("{} is the {} to the left or to the right of the {}?", prefix, a.category, b.category)},
        {RelPosAxis::UpDown, "up_down", {"up", "down"},
         fmt::format("{} is the {} above or below the {}?", prefix, a.category, b.category)},
    };
    for (const auto& q : questions) {
      const auto label = relative_position_label(a_cam, b_cam, q.axis, cfg.rel_pos_margin_m);
      if (!label) continue;
      QaRecord& r = sink.add(AnswerType::MCA, q.text, *label);
      r.options = q.options;
      r.frame_refs = {frame_id};
      r.meta["frame_index"] = k + 1;
      r.meta["axis"] = q.name;
      r.meta["instances"] = {a.instance_id, b.instance_id};
      r.meta["rel_pos_margin_m"] = cfg.rel_pos_margin_m;
    }
  }
  return sink.take();
}

namespace {

// One (i, j) pair per start position i, with j drawn uniformly from (i, n].
std::vector<FramePairSpec> draw_pairs(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg, Task task) {
  std::vector<FramePairSpec> pairs;
  const int n = seq_length(seq);
  for (int i = 1; i < n; ++i) {
    Rng rng = Rng::named(stream_name(cfg, g.scene_id(), task, static_cast<std::size_t>(i)));
    const int j = i + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    pairs.push_back({i, j, n});
  }
  return pairs;
}

}  // namespace

std::vector<QaRecord> gen_cam_displacement(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg) {
  RecordSink sink(g, Task::CamDisplacement);
  if (seq.size() < 2) return sink.take();
  for (const FramePairSpec& p : draw_pairs(g, seq, cfg, Task::CamDisplacement)) {
    const int fi = seq[p.i - 1];
    const int fj = seq[p.j - 1];
    const double d = distance(g.camera_position(fj), g.camera_position(fi));
    if (d < cfg.min_displacement_m) continue;
    QaRecord& r = sink.add(
        AnswerType::NA,
        fmt::format("Approximately how far (in meters) did the camera move between frame {} and frame {} of {}?", p.i,
                    p.j, p.n),
        format_fixed(d, 1));
    r.frame_refs = {fi, fj};
    r.meta["frame_indices"] = {p.i, p.j};
    r.meta["displacement_m"] = d;
    r.meta["min_displacement_m"] = cfg.min_displacement_m;
  }
  return sink.take();
}

std::optional<std::string> camera_move_label(const Pose& start, const Pose& end, double dominance_ratio,
                                             double min_displacement) {
  const Vec3 net = end.translation - start.translation;
  if (norm(net) < min_displacement) return std::nullopt;
  const Vec3 local = start.rotation.transposed() * net;
  const double ax = std::abs(local.x);
  const double az = std::abs(local.z);
  if (az > 0.0 && az >= dominance_ratio * ax) return local.z > 0 ? "Forward" : "Backward";
  if (ax > 0.0 && ax >= dominance_ratio * az) return local.x > 0 ? "Right" : "Left";
  return std::nullopt;
}

std::vector<QaRecord> gen_cam_move_dir(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg) {
  RecordSink sink(g, Task::CamMoveDir);
  if (seq.size() < 2) return sink.take();
  for (const FramePairSpec& p : draw_pairs(g, seq, cfg, Task::CamMoveDir)) {
    const int fi = seq[p.i - 1];
    const int fj = seq[p.j - 1];
    const Pose& start = g.frame(fi).pose;
    const Pose& end = g.frame(fj).pose;
    const auto label = camera_move_label(start, end, cfg.dominance_ratio, cfg.min_displacement_m);
    if (!label) continue;
    QaRecord& r = sink.add(AnswerType::MCA,
                           fmt::format("Between frame {} and frame {} of {}, in which direction did the camera mainly "
                                       "move, relative to its orientation at frame {}?",
                                       p.i, p.j, p.n, p.i),
                           *label);
    r.options = {"Forward", "Backward", "Left", "Right"};
    r.frame_refs = {fi, fj};
    const Vec3 local = start.rotation.transposed() * (end.translation - start.translation);
    r.meta["frame_indices"] = {p.i, p.j};
    r.meta["local_displacement"] = {local.x, local.y, local.z};
    r.meta["dominance_ratio"] = cfg.dominance_ratio;
    r.meta["min_displacement_m"] = cfg.min_displacement_m;
  }
  return sink.take();
}

}  // namespace spatialqa
