#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/metadata.hpp"

namespace spatialqa {

struct GraphOptions {
  double min_bbox_area_px = 400.0;
};

// Spatio-temporal scene graph: object nodes (3D boxes + semantics), one
// temporal node per camera frame, and visibility edges between them.
// Immutable once built.
class SceneGraph {
 public:
  // Throws DanglingInstanceRef if a frame references an unknown instance.
  static SceneGraph build(SceneMetadata scene, FrameMetadata frames, const GraphOptions& options = {});

  const SceneMetadata& scene() const { return scene_; }
  const FrameMetadata& frames() const { return frames_; }
  const std::string& scene_id() const { return scene_.scene_id; }
  double min_bbox_area_px() const { return min_bbox_area_px_; }

  const std::map<int, std::set<int>>& visibility() const { return visibility_; }
  const std::map<int, int>& first_seen() const { return first_seen_; }
  const std::map<std::string, int>& category_first_seen() const { return category_first_seen_; }

  const CameraFrame& frame(int frame_id) const;
  const ObjectInstance& object(int instance_id) const;
  bool has_frame(int frame_id) const { return frame_index_.count(frame_id) != 0; }
  const std::set<int>& visible_in(int frame_id) const;

  Vec3 camera_position(int frame_id) const;
  std::array<Vec3, 8> object_in_camera(int frame_id, int instance_id) const;

  // Instances whose category occurs exactly once in the scene, ascending id.
  std::vector<int> unique_instances() const;
  bool is_category_unique(int instance_id) const;

  // `n` frame ids uniformly spaced over the frame list, first and last
  // included: index_k = round(k * (N - 1) / (n - 1)), halves rounded up.
  std::vector<int> sample_frame_sequence(int n = 32) const;

  nlohmann::json debug_dump() const;

 private:
  SceneGraph() = default;

  SceneMetadata scene_;
  FrameMetadata frames_;
  double min_bbox_area_px_ = 0.0;
  std::map<int, std::size_t> frame_index_;
  std::map<int, std::size_t> object_index_;
  std::map<int, std::set<int>> visibility_;
  std::map<int, int> first_seen_;
  std::map<std::string, int> category_first_seen_;
};

}  // namespace spatialqa
