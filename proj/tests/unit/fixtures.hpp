#pragma once

// Small hand-built scenes for unit tests.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "spatialqa/geometry.hpp"
#include "spatialqa/metadata.hpp"
#include "spatialqa/scene_graph.hpp"

namespace fx {

using namespace spatialqa;

inline OrientedBox3 box(Vec3 center, Vec3 size = {1, 1, 1}, double yaw_deg = 0.0) {
  OrientedBox3 b;
  b.center = center;
  b.size = size;
  b.rotation = Quaternion::from_axis_angle({0, 0, 1}, deg_to_rad(yaw_deg));
  return b;
}

inline ObjectInstance object(int id, std::string category, Vec3 center, Vec3 size = {1, 1, 1}, double yaw_deg = 0.0) {
  return {id, std::move(category), box(center, size, yaw_deg)};
}

// Extents cover every box corner; counts come from the objects.
inline SceneMetadata scene(std::vector<ObjectInstance> objects, std::string id = "fixture") {
  SceneMetadata s;
  s.scene_id = std::move(id);
  s.scene_extents = {{0, 0, 0}, {1, 1, 1}};
  bool first = true;
  for (const auto& o : objects) {
    ++s.category_counts[o.category];
    for (const Vec3& c : o.box.corners()) {
      for (int i = 0; i < 3; ++i) {
        if (first || c[i] < s.scene_extents.min[i]) s.scene_extents.min[i] = c[i];
        if (first || c[i] > s.scene_extents.max[i]) s.scene_extents.max[i] = c[i];
      }
      first = false;
    }
  }
  s.room_center = 0.5 * (s.scene_extents.min + s.scene_extents.max);
  s.objects = std::move(objects);
  return s;
}

inline Pose translated(Vec3 t) {
  Pose p;
  p.translation = t;
  return p;
}

inline CameraFrame frame(int id, Pose pose, std::vector<int> visible = {}, double box_side_px = 30.0) {
  CameraFrame f;
  f.frame_id = id;
  f.pose = pose;
  f.color_path = "color/" + std::to_string(id) + ".jpg";
  f.depth_path = "depth/" + std::to_string(id) + ".png";
  for (int v : visible) f.visible_objects.push_back({v, {10, 10, 10 + box_side_px, 10 + box_side_px}});
  return f;
}

inline FrameMetadata frames(std::string scene_id, std::vector<CameraFrame> list) {
  FrameMetadata fm;
  fm.scene_id = std::move(scene_id);
  fm.intrinsics = {500, 500, 320, 240, 640, 480};
  fm.frames = std::move(list);
  return fm;
}

// Every object visible in every one of `n` frames with identity rotation.
inline SceneGraph still_graph(const SceneMetadata& s, int n = 2) {
  std::vector<int> ids;
  for (const auto& o : s.objects) ids.push_back(o.instance_id);
  std::vector<CameraFrame> list;
  for (int i = 0; i < n; ++i) list.push_back(frame(i, Pose{}, ids));
  return SceneGraph::build(s, frames(s.scene_id, list));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("spatialqa_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fx
