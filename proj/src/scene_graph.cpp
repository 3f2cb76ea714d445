#include "spatialqa/scene_graph.hpp"

#include <fmt/format.h>

#include "spatialqa/error.hpp"

namespace spatialqa {

SceneGraph SceneGraph::build(SceneMetadata scene, FrameMetadata frames, const GraphOptions& options) {
  SceneGraph g;
  g.scene_ = std::move(scene);
  g.frames_ = std::move(frames);
  g.min_bbox_area_px_ = options.min_bbox_area_px;

  for (std::size_t i = 0; i < g.scene_.objects.size(); ++i) g.object_index_[g.scene_.objects[i].instance_id] = i;

  for (std::size_t i = 0; i < g.frames_.frames.size(); ++i) {
    const CameraFrame& f = g.frames_.frames[i];
    g.frame_index_[f.frame_id] = i;
    auto& visible = g.visibility_[f.frame_id];
    for (const auto& v : f.visible_objects) {
      if (g.object_index_.count(v.instance_id) == 0) {
        throw Error(ErrorCode::DanglingInstanceRef,
                    fmt::format("frame {} references unknown instance {}", f.frame_id, v.instance_id));
      }
      if (v.bbox_2d.area() >= options.min_bbox_area_px) visible.insert(v.instance_id);
    }
    for (int id : visible) g.first_seen_.try_emplace(id, f.frame_id);
  }

  for (const auto& [id, frame_id] : g.first_seen_) {
    const std::string& category = g.object(id).category;
    auto [it, inserted] = g.category_first_seen_.try_emplace(category, frame_id);
    if (!inserted) it->second = std::min(it->second, frame_id);
  }
  return g;
}

const CameraFrame& SceneGraph::frame(int frame_id) const {
  const auto it = frame_index_.find(frame_id);
  if (it == frame_index_.end()) throw Error(ErrorCode::UnknownFrame, fmt::format("frame {}", frame_id));
  return frames_.frames[it->second];
}

const ObjectInstance& SceneGraph::object(int instance_id) const {
  const auto it = object_index_.find(instance_id);
  if (it == object_index_.end()) throw Error(ErrorCode::UnknownInstance, fmt::format("instance {}", instance_id));
  return scene_.objects[it->second];
}

const std::set<int>& SceneGraph::visible_in(int frame_id) const {
  const auto it = visibility_.find(frame_id);
  if (it == visibility_.end()) throw Error(ErrorCode::UnknownFrame, fmt::format("frame {}", frame_id));
  return it->second;
}

Vec3 SceneGraph::camera_position(int frame_id) const { return frame(frame_id).pose.translation; }

std::array<Vec3, 8> SceneGraph::object_in_camera(int frame_id, int instance_id) const {
  const Pose& pose = frame(frame_id).pose;
  std::array<Vec3, 8> corners = object(instance_id).box.corners();
  for (Vec3& c : corners) c = world_to_camera(c, pose);
  return corners;
}

std::vector<int> SceneGraph::unique_instances() const {
  std::vector<int> out;
  for (const auto& [id, index] : object_index_) {
    if (scene_.category_counts.at(scene_.objects[index].category) == 1) out.push_back(id);
  }
  return out;
}

bool SceneGraph::is_category_unique(int instance_id) const {
  return scene_.category_counts.at(object(instance_id).category) == 1;
}

std::vector<int> SceneGraph::sample_frame_sequence(int n) const {
  const auto total = static_cast<long long>(frames_.frames.size());
  if (total < 2) throw Error(ErrorCode::TooFewFrames, fmt::format("{} frame(s); need at least 2", total));
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "sequence length must be at least 2");
  std::vector<int> out;
  if (n >= total) {
    for (const auto& f : frames_.frames) out.push_back(f.frame_id);
    return out;
  }
  const long long span = total - 1;
  const long long steps = n - 1;
  for (long long k = 0; k < n; ++k) {
    const long long index = (2 * k * span + steps) / (2 * steps);
    out.push_back(frames_.frames[static_cast<std::size_t>(index)].frame_id);
  }
  return out;
}

nlohmann::json SceneGraph::debug_dump() const {
  nlohmann::json doc;
  doc["scene_id"] = scene_.scene_id;
  doc["min_bbox_area_px"] = min_bbox_area_px_;
  doc["objects"] = nlohmann::json::array();
  for (const auto& o : scene_.objects) {
    doc["objects"].push_back({{"instance_id", o.instance_id},
                              {"category", o.category},
                              {"first_seen", first_seen_.count(o.instance_id) ? nlohmann::json(first_seen_.at(o.instance_id))
                                                                               : nlohmann::json(nullptr)}});
  }
  doc["frames"] = nlohmann::json::array();
  for (const auto& f : frames_.frames) {
    const Vec3 t = f.pose.translation;
    doc["frames"].push_back({{"frame_id", f.frame_id},
                             {"camera_position", {t.x, t.y, t.z}},
                             {"visible", visibility_.at(f.frame_id)}});
  }
  doc["category_first_seen"] = category_first_seen_;
  return doc;
}

}  // namespace spatialqa
