#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "spatialqa/error.hpp"
#include "spatialqa/metadata.hpp"

namespace spatialqa {
namespace {

// Boxes fitted to flat point sets still need strictly positive extents.
constexpr double kMinExtent = 1e-3;

Extents bounds(const std::vector<Vec3>& points) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Extents e{{inf, inf, inf}, {-inf, -inf, -inf}};
  for (const Vec3& p : points) {
    for (int i = 0; i < 3; ++i) {
      e.min[i] = std::min(e.min[i], p[i]);
      e.max[i] = std::max(e.max[i], p[i]);
    }
  }
  return e;
}

OrientedBox3 box_from_bounds(const Extents& e) {
  OrientedBox3 box;
  box.center = 0.5 * (e.min + e.max);
  for (int i = 0; i < 3; ++i) box.size[i] = std::max(e.max[i] - e.min[i], kMinExtent);
  return box;
}

OrientedBox3 fit_axis_aligned(const std::vector<Vec3>& points) { return box_from_bounds(bounds(points)); }

OrientedBox3 fit_pca_yaw(const std::vector<Vec3>& points) {
  double mx = 0.0, my = 0.0;
  for (const Vec3& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (const Vec3& p : points) {
    cxx += (p.x - mx) * (p.x - mx);
    cyy += (p.y - my) * (p.y - my);
    cxy += (p.x - mx) * (p.y - my);
  }
  const double yaw = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);

  OrientedBox3 box;
  box.rotation = Quaternion::from_axis_angle({0, 0, 1}, yaw);
  const Mat3 r = box.rotation.to_rotation();
  const Mat3 rt = r.transposed();
  std::vector<Vec3> local;
  local.reserve(points.size());
  for (const Vec3& p : points) local.push_back(rt * p);
  const OrientedBox3 local_box = box_from_bounds(bounds(local));
  box.center = r * local_box.center;
  box.size = local_box.size;
  return box;
}

}  // namespace

InstanceBoxResult derive_instance_boxes(const LabeledPointCloud& cloud, const std::map<int, std::string>& label_map,
                                        const InstanceBoxOptions& options) {
  if (cloud.points.empty()) throw Error(ErrorCode::InvalidArgument, "point cloud is empty");
  if (options.min_points < 1) throw Error(ErrorCode::InvalidArgument, "min_points must be positive");

  std::map<int, std::vector<Vec3>> members;
  std::map<int, std::map<int, int>> label_votes;
  for (const auto& p : cloud.points) {
    members[p.instance_label].push_back(p.position);
    ++label_votes[p.instance_label][p.semantic_label];
  }

  InstanceBoxResult result;
  for (const auto& [instance_id, points] : members) {
    if (static_cast<int>(points.size()) < options.min_points) {
      ++result.dropped_small;
      continue;
    }
    int best_label = 0;
    int best_votes = -1;
    for (const auto& [label, votes] : label_votes[instance_id]) {
      if (votes > best_votes) {
        best_label = label;
        best_votes = votes;
      }
    }
    const auto category = label_map.find(best_label);
    if (category == label_map.end()) {
      ++result.dropped_unlabeled;
      continue;
    }
    ObjectInstance inst;
    inst.instance_id = instance_id;
    inst.category = category->second;
    inst.box = options.fit == BoxFit::AxisAligned ? fit_axis_aligned(points) : fit_pca_yaw(points);
    result.instances.push_back(std::move(inst));
  }
  if (result.instances.empty()) {
    throw Error(ErrorCode::EmptyAfterFiltering,
                fmt::format("no instance survived filtering ({} below min_points={}, {} unlabeled)",
                            result.dropped_small, options.min_points, result.dropped_unlabeled));
  }
  return result;
}

SceneMetadata make_scene_metadata(std::string scene_id, const LabeledPointCloud& cloud,
                                  std::vector<ObjectInstance> instances) {
  std::vector<Vec3> positions;
  positions.reserve(cloud.points.size());
  for (const auto& p : cloud.points) positions.push_back(p.position);

  SceneMetadata scene;
  scene.scene_id = std::move(scene_id);
  scene.scene_extents = bounds(positions);
  scene.room_center = 0.5 * (scene.scene_extents.min + scene.scene_extents.max);
  for (const auto& inst : instances) ++scene.category_counts[inst.category];
  scene.objects = std::move(instances);
  return scene;
}

}  // namespace spatialqa
