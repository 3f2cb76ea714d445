#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/geometry.hpp"
#include "spatialqa/ply.hpp"

namespace spatialqa {

struct ObjectInstance {
  int instance_id = 0;
  std::string category;
  OrientedBox3 box;

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

struct Extents {
  Vec3 min;
  Vec3 max;

  friend bool operator==(const Extents&, const Extents&) = default;
};

struct SceneMetadata {
  std::string scene_id;
  Extents scene_extents;
  Vec3 room_center;
  std::map<std::string, int> category_counts;
  std::vector<ObjectInstance> objects;

  friend bool operator==(const SceneMetadata&, const SceneMetadata&) = default;
};

struct BBox2D {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double area() const { return (xmax - xmin) * (ymax - ymin); }

  friend bool operator==(const BBox2D&, const BBox2D&) = default;
};

struct VisibleObject {
  int instance_id = 0;
  BBox2D bbox_2d;

  friend bool operator==(const VisibleObject&, const VisibleObject&) = default;
};

struct CameraFrame {
  int frame_id = 0;
  Pose pose;  // camera-to-world
  std::string color_path;
  std::string depth_path;
  std::vector<VisibleObject> visible_objects;

  friend bool operator==(const CameraFrame&, const CameraFrame&) = default;
};

struct FrameMetadata {
  std::string scene_id;
  Intrinsics intrinsics;
  std::vector<CameraFrame> frames;

  friend bool operator==(const FrameMetadata&, const FrameMetadata&) = default;
};

// JSON layout (field names are normative):
//
// scene_metadata.json
//   { "scene_id": str,
//     "scene_extents": {"min": [x,y,z], "max": [x,y,z]},
//     "room_center": [x,y,z],
//     "category_counts": {category: int, ...},
//     "objects": [{"instance_id": int, "category": str,
//                  "center": [x,y,z], "size": [sx,sy,sz],
//                  "rotation": [w,x,y,z]}, ...] }
//
// frame_metadata.json
//   { "scene_id": str,
//     "intrinsics": {"fx", "fy", "cx", "cy": num, "width", "height": int},
//     "frames": [{"frame_id": int, "pose_c2w": [16 row-major],
//                 "color_path": str, "depth_path": str,
//                 "visible_objects": [{"instance_id": int,
//                                      "bbox_2d": [xmin,ymin,xmax,ymax]}]}] }
//
// Unknown top-level keys (e.g. "provenance") are ignored. Violations raise
// SchemaViolation whose detail starts with the offending field path.
SceneMetadata scene_metadata_from_json(const nlohmann::json& doc);
FrameMetadata frame_metadata_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SceneMetadata& scene);
nlohmann::json to_json(const FrameMetadata& frames);

SceneMetadata load_scene_metadata(const std::filesystem::path& path);
FrameMetadata load_frame_metadata(const std::filesystem::path& path);

// Deterministic serialization: sorted keys, two-space indent, trailing newline.
std::string dump_document(const nlohmann::json& doc);
void write_document(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_document(const std::filesystem::path& path);

// Converts a row-major 3x3 rotation matrix to the stored quaternion form.
std::array<double, 4> rotation_matrix_to_wxyz(const Mat3& r);

// ---------------------------------------------------------------------------
// Instance boxes from a labeled point cloud.

enum class BoxFit { AxisAligned, PcaYaw };

struct InstanceBoxOptions {
  int min_points = 50;
  BoxFit fit = BoxFit::AxisAligned;
};

struct InstanceBoxResult {
  std::vector<ObjectInstance> instances;  // ascending instance id
  int dropped_small = 0;                  // fewer than min_points
  int dropped_unlabeled = 0;              // majority semantic label not in the label map
};

// Category of an instance is the majority semantic label among its points
// (ties resolve to the smallest label id).
InstanceBoxResult derive_instance_boxes(const LabeledPointCloud& cloud,
                                        const std::map<int, std::string>& label_map,
                                        const InstanceBoxOptions& options = {});

// Assembles scene metadata from derived instances: extents and room center
// come from the whole cloud, category counts from the instances.
SceneMetadata make_scene_metadata(std::string scene_id, const LabeledPointCloud& cloud,
                                  std::vector<ObjectInstance> instances);

}  // namespace spatialqa
