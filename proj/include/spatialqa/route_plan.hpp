#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spatialqa/qa_record.hpp"
#include "spatialqa/scene_graph.hpp"

namespace spatialqa {

enum class TrajectorySource { Ingested, GridPlanner };

// Floor-plane path in world coordinates.
struct Trajectory {
  std::vector<Vec3> waypoints;
  TrajectorySource source = TrajectorySource::Ingested;
};

enum class RouteKind { TurnLeft, TurnRight, TurnBack };
enum class TemplateMode { Template1, Template2 };

std::string_view route_answer(RouteKind kind);  // "turn left" | "turn right" | "turn back"

struct RouteAnchors {
  Vec3 src;
  Vec3 mid;
  Vec3 tgt;
};

struct ClassifiedRoute {
  RouteKind kind = RouteKind::TurnBack;
  RouteAnchors anchors;
  double turn_angle_deg = 0.0;  // signed, CCW positive; 0 for TurnBack
  TemplateMode template_mode = TemplateMode::Template2;
};

struct TurnDetection {
  double turn_threshold_deg = 30.0;
  int window_segments = 3;
  double alternative_min_deg = 45.0;
};

// Heading changes are accumulated over sliding windows of consecutive
// segments; adjacent same-sign windows whose accumulated change exceeds the
// threshold form one turn. One turn gives TurnLeft/TurnRight with anchors
// (start, turn point, end); none gives TurnBack with anchors
// (start, arclength midpoint, end). Throws MultiTurn or TooShort.
ClassifiedRoute classify_trajectory(const Trajectory& t, const TurnDetection& detection = {});

// Template 2 variant of a turn sharper than the alternative threshold: the
// agent starts at the turn point facing the original end and heads back to
// the original start. Throws InvalidArgument when not applicable.
ClassifiedRoute alternative_mode(const ClassifiedRoute& route, const TurnDetection& detection = {});

// Action the agent needs for the traversal the chosen template describes,
// or nullopt when that traversal needs no turn. Template 1: the agent walks
// SRC -> MID -> TGT and the heading change at MID gives left/right. Template
// 2: the agent stands at MID facing one anchor and must head for another
// (turns: face TGT, go to SRC; TurnBack: face SRC, go to TGT); a change of at
// least 180 - threshold degrees is "turn back", otherwise left/right by sign.
std::optional<RouteKind> rederive_answer(const ClassifiedRoute& route, const TurnDetection& detection = {});

struct AnchorLabels {
  std::string src;
  std::string mid;
  std::string tgt;
  int src_instance = 0;
  int mid_instance = 0;
  int tgt_instance = 0;
};

// Nearest object (planar center distance) per anchor. Throws NoNearbyObject
// when an anchor has nothing within `max_anchor_dist_m`, SharedAnchor when
// two anchors resolve to the same instance.
AnchorLabels label_anchors(const ClassifiedRoute& route, const SceneGraph& g, double max_anchor_dist_m = 2.0);

// Fills the route-planning template chosen by `route.template_mode`; the
// answer is `rederive_answer`, which must agree with the classified kind
// except for Template 2 turns (recorded in meta either way). Throws
// InvalidArgument when the described traversal has no valid answer. The
// record's qid is left for the caller to assign.
QaRecord render_route_qa(const ClassifiedRoute& route, const AnchorLabels& labels, const SceneGraph& g,
                         const GenConfig& cfg, const TurnDetection& detection = {});

// Template texts; SRC / MID / TGT are replaced verbatim.
std::string template1_text(const std::string& src, const std::string& mid, const std::string& tgt);
std::string template2_text(const std::string& src, const std::string& mid, const std::string& tgt);

struct GridCell {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double cell_size_m = 1.0;
  Vec3 origin;                       // world position of cell (0, 0)'s lower corner
  std::vector<std::uint8_t> blocked;  // row-major, y * width + x

  bool in_bounds(GridCell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_free(GridCell c) const { return in_bounds(c) && blocked[static_cast<std::size_t>(c.y) * width + c.x] == 0; }
  Vec3 cell_center(GridCell c) const;
};

// Shortest 4-connected path (breadth-first, neighbours expanded +X, +Y, -X,
// -Y), collinear runs merged into single segments. Throws NoPath.
Trajectory plan_grid_path(const OccupancyGrid& grid, GridCell start, GridCell goal);

// Occupancy from object footprints within the scene extents.
OccupancyGrid occupancy_from_scene(const SceneGraph& g, double cell_size_m);

// JSONL: {"scene_id": str, "waypoints": [[x, y, z?], ...]} per line.
struct IngestedTrajectory {
  std::string scene_id;
  Trajectory trajectory;
};
std::vector<IngestedTrajectory> load_trajectories(const std::filesystem::path& path);

// Route-plan records for a scene: ingested trajectories when given,
// otherwise paths between seeded free-cell pairs from the grid planner.
// Trajectories that fail classification or labeling are skipped.
std::vector<QaRecord> gen_route_plan(const SceneGraph& g, const GenConfig& cfg,
                                     const std::vector<Trajectory>* trajectories = nullptr);

}  // namespace spatialqa
