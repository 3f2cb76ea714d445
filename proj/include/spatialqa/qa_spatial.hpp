#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spatialqa/ply.hpp"
#include "spatialqa/qa_record.hpp"
#include "spatialqa/scene_graph.hpp"

namespace spatialqa {

// Configurational and measurement questions over a whole scene. Each
// generator returns its records in emission order with qids numbered from 0.

std::vector<QaRecord> gen_object_count(const SceneGraph& g, const GenConfig& cfg);
std::vector<QaRecord> gen_absolute_distance(const SceneGraph& g, const GenConfig& cfg);
std::vector<QaRecord> gen_relative_distance(const SceneGraph& g, const GenConfig& cfg);
std::vector<QaRecord> gen_relative_direction(const SceneGraph& g, const GenConfig& cfg);
std::vector<QaRecord> gen_object_size(const SceneGraph& g, const GenConfig& cfg);
std::vector<QaRecord> gen_room_size(const SceneGraph& g, const GenConfig& cfg,
                                    const LabeledPointCloud* cloud = nullptr);
std::vector<QaRecord> gen_appearance_order(const SceneGraph& g, const GenConfig& cfg);

// Direction of `query` for an observer standing at `observer` facing
// `facing`, on the floor plane. Returns "left", "right" or "back", or
// nullopt when the answer falls in the front cone, on a bin boundary, or the
// geometry is degenerate.
std::optional<std::string> relative_direction_label(Vec3 observer, Vec3 facing, Vec3 query,
                                                    const GenConfig& cfg);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

// Counter-clockwise convex hull (monotone chain), collinear points dropped.
std::vector<Point2> convex_hull(std::vector<Point2> points);
double polygon_area(const std::vector<Point2>& polygon);

}  // namespace spatialqa
