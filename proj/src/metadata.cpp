#include "spatialqa/metadata.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "spatialqa/error.hpp"

namespace spatialqa {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& path, std::string_view what) {
  throw Error(ErrorCode::SchemaViolation, fmt::format("{}: {}", path, what));
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) violation(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) violation(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) violation(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) violation(path, "expected a finite number");
  return d;
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) violation(path, "expected an integer");
  const auto i = v.get<long long>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) violation(path, "integer out of range");
  return static_cast<int>(i);
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) violation(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, std::size_t n, const std::string& path) {
  if (!v.is_array() || v.size() != n) violation(path, fmt::format("expected an array of {} numbers", n));
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(number(v[i], fmt::format("{}[{}]", path, i)));
  return out;
}

Vec3 vec3(const json& v, const std::string& path) {
  const auto n = numbers(v, 3, path);
  return {n[0], n[1], n[2]};
}

json vec3_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

ObjectInstance parse_object(const json& obj, const std::string& path) {
  ObjectInstance inst;
  inst.instance_id = integer(field(obj, "instance_id", path), join(path, "instance_id"));
  inst.category = text(field(obj, "category", path), join(path, "category"));
  if (inst.category.empty()) violation(join(path, "category"), "must be nonempty");
  inst.box.center = vec3(field(obj, "center", path), join(path, "center"));
  inst.box.size = vec3(field(obj, "size", path), join(path, "size"));
  if (!(inst.box.size.x > 0 && inst.box.size.y > 0 && inst.box.size.z > 0)) {
    violation(join(path, "size"), "all components must be positive");
  }
  const auto q = numbers(field(obj, "rotation", path), 4, join(path, "rotation"));
  inst.box.rotation = Quaternion{q[0], q[1], q[2], q[3]};
  if (std::abs(inst.box.rotation.norm() - 1.0) > tol::kTransform) {
    violation(join(path, "rotation"), "quaternion (w,x,y,z) must have unit norm");
  }
  return inst;
}

Pose parse_pose(const json& v, const std::string& path) {
  const auto m = numbers(v, 16, path);
  const std::string pose_path = path.substr(0, path.rfind('.') == std::string::npos ? 0 : path.rfind('.') + 1) + "pose";
  if (std::abs(m[12]) > tol::kTransform || std::abs(m[13]) > tol::kTransform ||
      std::abs(m[14]) > tol::kTransform || std::abs(m[15] - 1.0) > tol::kTransform) {
    violation(pose_path + ".last_row", "pose_c2w last row must be (0,0,0,1)");
  }
  Pose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = m[r * 4 + c];
  }
  pose.translation = {m[3], m[7], m[11]};
  if (!pose.rotation.is_rotation(tol::kTransform)) {
    violation(pose_path + ".rotation", "pose_c2w rotation must be orthonormal with det +1");
  }
  return pose;
}

json pose_json(const Pose& pose) {
  const Mat3& r = pose.rotation;
  const Vec3 t = pose.translation;
  return json::array({r(0, 0), r(0, 1), r(0, 2), t.x, r(1, 0), r(1, 1), r(1, 2), t.y, r(2, 0), r(2, 1),
                      r(2, 2), t.z, 0.0, 0.0, 0.0, 1.0});
}

}  // namespace

SceneMetadata scene_metadata_from_json(const json& doc) {
  SceneMetadata scene;
  if (!doc.is_object()) violation("$", "expected an object");
  scene.scene_id = text(field(doc, "scene_id", ""), "scene_id");
  if (scene.scene_id.empty()) violation("scene_id", "must be nonempty");
  const json& ext = field(doc, "scene_extents", "");
  scene.scene_extents.min = vec3(field(ext, "min", "scene_extents"), "scene_extents.min");
  scene.scene_extents.max = vec3(field(ext, "max", "scene_extents"), "scene_extents.max");
  for (int i = 0; i < 3; ++i) {
    if (scene.scene_extents.min[i] > scene.scene_extents.max[i]) violation("scene_extents", "min must not exceed max");
  }
  scene.room_center = vec3(field(doc, "room_center", ""), "room_center");

  const json& counts = field(doc, "category_counts", "");
  if (!counts.is_object()) violation("category_counts", "expected an object");
  for (const auto& [category, count] : counts.items()) {
    scene.category_counts[category] = integer(count, "category_counts." + category);
  }

  const json& objects = field(doc, "objects", "");
  if (!objects.is_array()) violation("objects", "expected an array");
  std::set<int> ids;
  std::map<std::string, int> observed;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = fmt::format("objects[{}]", i);
    ObjectInstance inst = parse_object(objects[i], path);
    if (!ids.insert(inst.instance_id).second) violation(path + ".instance_id", "duplicate instance id");
    ++observed[inst.category];
    scene.objects.push_back(std::move(inst));
  }
  if (observed != scene.category_counts) violation("category_counts", "inconsistent with objects");
  return scene;
}

FrameMetadata frame_metadata_from_json(const json& doc) {
  FrameMetadata meta;
  if (!doc.is_object()) violation("$", "expected an object");
  meta.scene_id = text(field(doc, "scene_id", ""), "scene_id");
  if (meta.scene_id.empty()) violation("scene_id", "must be nonempty");

  const json& intr = field(doc, "intrinsics", "");
  Intrinsics& k = meta.intrinsics;
  k.fx = number(field(intr, "fx", "intrinsics"), "intrinsics.fx");
  k.fy = number(field(intr, "fy", "intrinsics"), "intrinsics.fy");
  k.cx = number(field(intr, "cx", "intrinsics"), "intrinsics.cx");
  k.cy = number(field(intr, "cy", "intrinsics"), "intrinsics.cy");
  k.width = integer(field(intr, "width", "intrinsics"), "intrinsics.width");
  k.height = integer(field(intr, "height", "intrinsics"), "intrinsics.height");
  if (!k.valid()) violation("intrinsics", "requires fx, fy > 0, positive image size and principal point inside the image");

  const json& frames = field(doc, "frames", "");
  if (!frames.is_array()) violation("frames", "expected an array");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string path = fmt::format("frames[{}]", i);
    const json& f = frames[i];
    CameraFrame frame;
    frame.frame_id = integer(field(f, "frame_id", path), path + ".frame_id");
    if (!meta.frames.empty() && frame.frame_id <= meta.frames.back().frame_id) {
      violation(path + ".frame_id", "frame ids must be strictly increasing");
    }
    frame.pose = parse_pose(field(f, "pose_c2w", path), path + ".pose_c2w");
    frame.color_path = text(field(f, "color_path", path), path + ".color_path");
    frame.depth_path = text(field(f, "depth_path", path), path + ".depth_path");
    const json& vis = field(f, "visible_objects", path);
    if (!vis.is_array()) violation(path + ".visible_objects", "expected an array");
    for (std::size_t j = 0; j < vis.size(); ++j) {
      const std::string vpath = fmt::format("{}.visible_objects[{}]", path, j);
      VisibleObject v;
      v.instance_id = integer(field(vis[j], "instance_id", vpath), vpath + ".instance_id");
      const auto b = numbers(field(vis[j], "bbox_2d", vpath), 4, vpath + ".bbox_2d");
      v.bbox_2d = {b[0], b[1], b[2], b[3]};
      if (!(b[0] < b[2] && b[1] < b[3])) violation(vpath + ".bbox_2d", "requires xmin < xmax and ymin < ymax");
      if (b[0] < 0 || b[1] < 0 || b[2] > k.width || b[3] > k.height) {
        violation(vpath + ".bbox_2d", "must lie within the image bounds");
      }
      frame.visible_objects.push_back(v);
    }
    meta.frames.push_back(std::move(frame));
  }
  return meta;
}

json to_json(const SceneMetadata& scene) {
  json doc;
  doc["scene_id"] = scene.scene_id;
  doc["scene_extents"] = {{"min", vec3_json(scene.scene_extents.min)}, {"max", vec3_json(scene.scene_extents.max)}};
  doc["room_center"] = vec3_json(scene.room_center);
  doc["category_counts"] = json::object();
  for (const auto& [category, count] : scene.category_counts) doc["category_counts"][category] = count;
  doc["objects"] = json::array();
  for (const auto& o : scene.objects) {
    const Quaternion& q = o.box.rotation;
    doc["objects"].push_back({{"instance_id", o.instance_id},
                              {"category", o.category},
                              {"center", vec3_json(o.box.center)},
                              {"size", vec3_json(o.box.size)},
                              {"rotation", json::array({q.w, q.x, q.y, q.z})}});
  }
  return doc;
}

json to_json(const FrameMetadata& meta) {
  json doc;
  doc["scene_id"] = meta.scene_id;
  const Intrinsics& k = meta.intrinsics;
  doc["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  doc["frames"] = json::array();
  for (const auto& f : meta.frames) {
    json vis = json::array();
    for (const auto& v : f.visible_objects) {
      vis.push_back({{"instance_id", v.instance_id},
                     {"bbox_2d", json::array({v.bbox_2d.xmin, v.bbox_2d.ymin, v.bbox_2d.xmax, v.bbox_2d.ymax})}});
    }
    doc["frames"].push_back({{"frame_id", f.frame_id},
                             {"pose_c2w", pose_json(f.pose)},
                             {"color_path", f.color_path},
                             {"depth_path", f.depth_path},
                             {"visible_objects", std::move(vis)}});
  }
  return doc;
}

std::string dump_document(const json& doc) { return doc.dump(2) + "\n"; }

void write_document(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path.string()));
  out << dump_document(doc);
}

json read_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, fmt::format("{}: invalid JSON ({})", path.string(), e.what()));
  }
}

SceneMetadata load_scene_metadata(const std::filesystem::path& path) {
  return scene_metadata_from_json(read_document(path));
}

FrameMetadata load_frame_metadata(const std::filesystem::path& path) {
  return frame_metadata_from_json(read_document(path));
}

std::array<double, 4> rotation_matrix_to_wxyz(const Mat3& r) {
  const Quaternion q = Quaternion::from_rotation(r);
  return {q.w, q.x, q.y, q.z};
}

}  // namespace spatialqa
