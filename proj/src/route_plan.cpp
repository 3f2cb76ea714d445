#include "spatialqa/route_plan.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "qa_common.hpp"
#include "spatialqa/error.hpp"
#include "spatialqa/rng.hpp"

namespace spatialqa {

std::string_view route_answer(RouteKind kind) {
  switch (kind) {
    case RouteKind::TurnLeft: return "turn left";
    case RouteKind::TurnRight: return "turn right";
    case RouteKind::TurnBack: return "turn back";
  }
  return "";
}

namespace {

constexpr double kMinWaypointGap = 1e-6;

Vec3 point_at_arclength(const std::vector<Vec3>& pts, double target) {
  double walked = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = distance(pts[i - 1], pts[i]);
    if (walked + seg >= target) {
      const double t = (target - walked) / seg;
      return pts[i - 1] + t * (pts[i] - pts[i - 1]);
    }
    walked += seg;
  }
  return pts.back();
}

struct Locus {
  int first_window = 0;
  int last_window = 0;
  int sign = 0;
};

}  // namespace

ClassifiedRoute classify_trajectory(const Trajectory& t, const TurnDetection& detection) {
  const auto& w = t.waypoints;
  if (w.size() < 2) throw Error(ErrorCode::TooShort, fmt::format("{} waypoint(s); need at least 2", w.size()));
  std::vector<Vec3> segments;
  for (std::size_t i = 1; i < w.size(); ++i) {
    // floor-plane paths: a purely vertical step has no heading
    if (std::hypot(w[i].x - w[i - 1].x, w[i].y - w[i - 1].y) <= kMinWaypointGap) {
      throw Error(ErrorCode::TooShort, fmt::format("waypoints {} and {} coincide on the floor plane", i - 1, i));
    }
    segments.push_back(w[i] - w[i - 1]);
  }

  // change[k] is the heading change at interior waypoint k + 1.
  std::vector<double> change;
  for (std::size_t k = 1; k < segments.size(); ++k) {
    try {
      change.push_back(planar_signed_angle(segments[k - 1], segments[k]));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDirection) throw;
      throw Error(ErrorCode::TooShort, fmt::format("segment {} has no floor-plane extent", k));
    }
  }

  const int vertices = static_cast<int>(change.size());
  const int span = std::max(1, detection.window_segments - 1);
  std::vector<Locus> loci;
  for (int v = 0; v < vertices; ++v) {
    double window = 0.0;
    for (int k = v; k < std::min(vertices, v + span); ++k) window += change[k];
    if (std::abs(window) <= detection.turn_threshold_deg) continue;
    const int sign = window > 0 ? 1 : -1;
    if (!loci.empty() && loci.back().last_window == v - 1 && loci.back().sign == sign) {
      loci.back().last_window = v;
    } else {
      loci.push_back({v, v, sign});
    }
  }

  ClassifiedRoute route;
  if (loci.empty()) {
    double length = 0.0;
    for (const Vec3& s : segments) length += norm(s);
    route.kind = RouteKind::TurnBack;
    route.anchors = {w.front(), point_at_arclength(w, 0.5 * length), w.back()};
    route.turn_angle_deg = 0.0;
    route.template_mode = TemplateMode::Template2;
    return route;
  }
  if (loci.size() > 1) throw Error(ErrorCode::MultiTurn, fmt::format("{} separate turns", loci.size()));

  const Locus& turn = loci.front();
  const int last_vertex = std::min(vertices - 1, turn.last_window + span - 1);
  double total = 0.0;
  int pivot = turn.first_window;
  for (int k = turn.first_window; k <= last_vertex; ++k) {
    total += change[k];
    if (std::abs(change[k]) > std::abs(change[pivot])) pivot = k;
  }
  route.kind = turn.sign > 0 ? RouteKind::TurnLeft : RouteKind::TurnRight;
  route.anchors = {w.front(), w[static_cast<std::size_t>(pivot) + 1], w.back()};
  route.turn_angle_deg = total;
  route.template_mode = TemplateMode::Template1;
  return route;
}

ClassifiedRoute alternative_mode(const ClassifiedRoute& route, const TurnDetection& detection) {
  if (route.kind == RouteKind::TurnBack || std::abs(route.turn_angle_deg) <= detection.alternative_min_deg) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("alternative mode needs a turn sharper than {} degrees", detection.alternative_min_deg));
  }
  ClassifiedRoute alt = route;
  alt.template_mode = TemplateMode::Template2;
  return alt;
}

std::optional<RouteKind> rederive_answer(const ClassifiedRoute& route, const TurnDetection& detection) {
  const RouteAnchors& a = route.anchors;
  const double threshold = detection.turn_threshold_deg;
  if (route.template_mode == TemplateMode::Template1) {
    const double delta = planar_signed_angle(a.mid - a.src, a.tgt - a.mid);
    if (delta > threshold) return RouteKind::TurnLeft;
    if (delta < -threshold) return RouteKind::TurnRight;
    return std::nullopt;
  }
  const bool turn_back_route = route.kind == RouteKind::TurnBack;
  const Vec3 facing = turn_back_route ? a.src : a.tgt;
  const Vec3 destination = turn_back_route ? a.tgt : a.src;
  const double delta = planar_signed_angle(facing - a.mid, destination - a.mid);
  if (std::abs(delta) >= 180.0 - threshold) return RouteKind::TurnBack;
  if (delta > threshold) return RouteKind::TurnLeft;
  if (delta < -threshold) return RouteKind::TurnRight;
  return std::nullopt;
}

AnchorLabels label_anchors(const ClassifiedRoute& route, const SceneGraph& g, double max_anchor_dist_m) {
  auto nearest = [&](Vec3 p, const char* which) {
    const ObjectInstance* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& o : g.scene().objects) {
      const double d = std::hypot(o.box.center.x - p.x, o.box.center.y - p.y);
      if (d < best_d || (d == best_d && best != nullptr && o.instance_id < best->instance_id)) {
        best = &o;
        best_d = d;
      }
    }
    if (best == nullptr || best_d > max_anchor_dist_m) {
      throw Error(ErrorCode::NoNearbyObject,
                  fmt::format("{} anchor has no object within {} m", which, max_anchor_dist_m));
    }
    return best;
  };
  const ObjectInstance* src = nearest(route.anchors.src, "source");
  const ObjectInstance* mid = nearest(route.anchors.mid, "middle");
  const ObjectInstance* tgt = nearest(route.anchors.tgt, "target");
  if (src == mid || mid == tgt || src == tgt) {
    throw Error(ErrorCode::SharedAnchor, "two anchors resolve to the same object instance");
  }
  return {src->category, mid->category, tgt->category, src->instance_id, mid->instance_id, tgt->instance_id};
}

std::string template1_text(const std::string& src, const std::string& mid, const std::string& tgt) {
  return fmt::format(
      "You are a robot beginning at the {0} facing the {1}. You want to navigate to the {2}. You will perform the "
      "following actions (Note: for each [please fill in], choose either 'turn back,' 'turn left,' or 'turn "
      "right.'): 1. Go forward until the {1}. 2. [please fill in] 3. Go forward until the {2}. You have reached the "
      "final destination.",
      src, mid, tgt);
}

std::string template2_text(const std::string& src, const std::string& mid, const std::string& tgt) {
  return fmt::format(
      "You are a robot beginning at the {1} facing the {2}. You want to navigate to the {0}. You will perform the "
      "following actions (Note: for each [please fill in], choose either 'turn back,' 'turn left,' or 'turn "
      "right.'): 1. [please fill in] 2. Go forward until the {0}. You have reached the final destination.",
      src, mid, tgt);
}

namespace {

std::string_view kind_name(RouteKind kind) {
  switch (kind) {
    case RouteKind::TurnLeft: return "TurnLeft";
    case RouteKind::TurnRight: return "TurnRight";
    case RouteKind::TurnBack: return "TurnBack";
  }
  return "";
}

nlohmann::ordered_json point_json(Vec3 p) { return {p.x, p.y, p.z}; }

}  // namespace

QaRecord render_route_qa(const ClassifiedRoute& route, const AnchorLabels& labels, const SceneGraph& g,
                         const GenConfig& cfg, const TurnDetection& detection) {
  const auto answer = rederive_answer(route, detection);
  if (!answer) throw Error(ErrorCode::InvalidArgument, "the described traversal needs no turn");
  const bool template2_turn = route.template_mode == TemplateMode::Template2 && route.kind != RouteKind::TurnBack;
  if (!template2_turn && *answer != route.kind) {
    throw Error(ErrorCode::InvalidArgument, "anchor traversal disagrees with the path classification");
  }

  QaRecord r;
  r.scene_id = g.scene_id();
  r.task = Task::RoutePlan;
  r.answer_type = AnswerType::MCA;
  if (route.template_mode == TemplateMode::Template1) {
    r.question = template1_text(labels.src, labels.mid, labels.tgt);
  } else if (route.kind == RouteKind::TurnBack) {
    // Agent at the midpoint faces the start and must reach the end.
    r.question = template2_text(labels.tgt, labels.mid, labels.src);
  } else {
    r.question = template2_text(labels.src, labels.mid, labels.tgt);
  }
  r.options = {"turn back", "turn left", "turn right"};
  r.ground_truth = std::string(route_answer(*answer));
  r.meta["conventions"] = {{"world", kWorldConvention}, {"camera", kCameraConvention}};
  r.meta["template"] = route.template_mode == TemplateMode::Template1 ? "Template1" : "Template2";
  r.meta["classified_kind"] = kind_name(route.kind);
  r.meta["rederived_kind"] = kind_name(*answer);
  r.meta["turn_angle_deg"] = route.turn_angle_deg;
  r.meta["anchors"] = {point_json(route.anchors.src), point_json(route.anchors.mid), point_json(route.anchors.tgt)};
  r.meta["anchor_instances"] = {labels.src_instance, labels.mid_instance, labels.tgt_instance};
  r.meta["max_anchor_dist_m"] = cfg.max_anchor_dist_m;
  return r;
}

Vec3 OccupancyGrid::cell_center(GridCell c) const {
  return {origin.x + (c.x + 0.5) * cell_size_m, origin.y + (c.y + 0.5) * cell_size_m, origin.z};
}

Trajectory plan_grid_path(const OccupancyGrid& grid, GridCell start, GridCell goal) {
  if (!grid.is_free(start) || !grid.is_free(goal)) {
    throw Error(ErrorCode::InvalidArgument, "start and goal must be free cells inside the grid");
  }
  Trajectory out;
  out.source = TrajectorySource::GridPlanner;
  if (start == goal) {
    out.waypoints.push_back(grid.cell_center(start));
    return out;
  }

  const auto index = [&](GridCell c) { return static_cast<std::size_t>(c.y) * grid.width + c.x; };
  constexpr int kUnvisited = -1;
  std::vector<int> parent(static_cast<std::size_t>(grid.width) * grid.height, kUnvisited);
  static constexpr GridCell kSteps[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  std::deque<GridCell> queue{start};
  parent[index(start)] = static_cast<int>(index(start));
  bool found = false;
  while (!queue.empty() && !found) {
    const GridCell c = queue.front();
    queue.pop_front();
    for (const GridCell step : kSteps) {
      const GridCell n{c.x + step.x, c.y + step.y};
      if (!grid.is_free(n) || parent[index(n)] != kUnvisited) continue;
      parent[index(n)] = static_cast<int>(index(c));
      if (n == goal) {
        found = true;
        break;
      }
      queue.push_back(n);
    }
  }
  if (!found) throw Error(ErrorCode::NoPath, fmt::format("no path from ({},{}) to ({},{})", start.x, start.y, goal.x, goal.y));

  std::vector<GridCell> cells;
  for (GridCell c = goal;; ) {
    cells.push_back(c);
    if (c == start) break;
    const int p = parent[index(c)];
    c = {p % grid.width, p / grid.width};
  }
  std::reverse(cells.begin(), cells.end());

  std::vector<GridCell> corners{cells.front()};
  for (std::size_t i = 1; i + 1 < cells.size(); ++i) {
    const GridCell in{cells[i].x - cells[i - 1].x, cells[i].y - cells[i - 1].y};
    const GridCell outd{cells[i + 1].x - cells[i].x, cells[i + 1].y - cells[i].y};
    if (!(in == outd)) corners.push_back(cells[i]);
  }
  corners.push_back(cells.back());
  for (GridCell c : corners) out.waypoints.push_back(grid.cell_center(c));
  return out;
}

OccupancyGrid occupancy_from_scene(const SceneGraph& g, double cell_size_m) {
  if (!(cell_size_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  const Extents& e = g.scene().scene_extents;
  OccupancyGrid grid;
  grid.cell_size_m = cell_size_m;
  grid.origin = {e.min.x, e.min.y, 0.0};
  grid.width = std::max(1, static_cast<int>(std::ceil((e.max.x - e.min.x) / cell_size_m)));
  grid.height = std::max(1, static_cast<int>(std::ceil((e.max.y - e.min.y) / cell_size_m)));
  grid.blocked.assign(static_cast<std::size_t>(grid.width) * grid.height, 0);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const Vec3 c = grid.cell_center({x, y});
      for (const auto& o : g.scene().objects) {
        const Vec3 local = o.box.to_local({c.x, c.y, o.box.center.z});
        const Vec3 h = o.box.half_extents();
        if (std::abs(local.x) <= h.x && std::abs(local.y) <= h.y) {
          grid.blocked[static_cast<std::size_t>(y) * grid.width + x] = 1;
          break;
        }
      }
    }
  }
  return grid;
}

std::vector<IngestedTrajectory> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  std::vector<IngestedTrajectory> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = [&] { return fmt::format("{}:{}", path.string(), line_no); };
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::SchemaViolation, fmt::format("{}: invalid JSON", where()));
    }
    if (!doc.is_object() || !doc.contains("scene_id") || !doc["scene_id"].is_string() || !doc.contains("waypoints") ||
        !doc["waypoints"].is_array()) {
      throw Error(ErrorCode::SchemaViolation, fmt::format("{}: expected {{scene_id, waypoints}}", where()));
    }
    IngestedTrajectory t;
    t.scene_id = doc["scene_id"].get<std::string>();
    for (const auto& wp : doc["waypoints"]) {
      if (!wp.is_array() || wp.size() < 2 || wp.size() > 3) {
        throw Error(ErrorCode::SchemaViolation, fmt::format("{}: waypoint must be [x, y] or [x, y, z]", where()));
      }
      Vec3 p;
      for (std::size_t i = 0; i < wp.size(); ++i) {
        if (!wp[i].is_number()) throw Error(ErrorCode::SchemaViolation, fmt::format("{}: non-numeric waypoint", where()));
        p[static_cast<int>(i)] = wp[i].get<double>();
      }
      t.trajectory.waypoints.push_back(p);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<QaRecord> gen_route_plan(const SceneGraph& g, const GenConfig& cfg, const std::vector<Trajectory>* trajectories) {
  std::vector<Trajectory> planned;
  if (trajectories == nullptr) {
    const OccupancyGrid grid = occupancy_from_scene(g, cfg.route_grid_cell_m);
    std::vector<GridCell> free_cells;
    for (int y = 0; y < grid.height; ++y)
      for (int x = 0; x < grid.width; ++x)
        if (grid.is_free({x, y})) free_cells.push_back({x, y});
    if (free_cells.size() >= 2) {
      for (int attempt = 0; attempt < cfg.route_attempts; ++attempt) {
        Rng rng = Rng::named(stream_name(cfg, g.scene_id(), Task::RoutePlan, static_cast<std::size_t>(attempt)));
        const auto pick = rng.sample(free_cells.size(), 2);
        try {
          planned.push_back(plan_grid_path(grid, free_cells[pick[0]], free_cells[pick[1]]));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoPath) throw;
        }
      }
    }
    trajectories = &planned;
  }

  std::vector<QaRecord> out;
  auto emit = [&](QaRecord r, std::size_t trajectory_index, const Trajectory& t) {
    r.qid = make_qid(g.scene_id(), Task::RoutePlan, out.size());
    r.meta["trajectory_index"] = trajectory_index;
    r.meta["source"] = t.source == TrajectorySource::Ingested ? "ingested" : "grid_planner";
    out.push_back(std::move(r));
  };
  for (std::size_t i = 0; i < trajectories->size(); ++i) {
    const Trajectory& t = (*trajectories)[i];
    try {
      const ClassifiedRoute route = classify_trajectory(t);
      const AnchorLabels labels = label_anchors(route, g, cfg.max_anchor_dist_m);
      emit(render_route_qa(route, labels, g, cfg), i, t);
      if (cfg.route_alternative_mode && route.kind != RouteKind::TurnBack &&
          std::abs(route.turn_angle_deg) > TurnDetection{}.alternative_min_deg) {
        emit(render_route_qa(alternative_mode(route), labels, g, cfg), i, t);
      }
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::MultiTurn:
        case ErrorCode::TooShort:
        case ErrorCode::NoNearbyObject:
        case ErrorCode::SharedAnchor:
        case ErrorCode::InvalidArgument:
        case ErrorCode::DegenerateDirection:
          continue;
        default:
          throw;
      }
    }
  }
  return out;
}

}  // namespace spatialqa
