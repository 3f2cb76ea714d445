#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "fixtures.hpp"
#include "spatialqa/error.hpp"
#include "spatialqa/route_plan.hpp"

using namespace spatialqa;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

ClassifiedRoute classify(std::vector<Vec3> pts) { return classify_trajectory(Trajectory{std::move(pts)}); }

Vec3 polar(double deg, double r = 1.0) { return {r * std::cos(deg_to_rad(deg)), r * std::sin(deg_to_rad(deg)), 0}; }

// BFS over the same 4-neighbourhood; returns the number of steps.
int bfs_steps(const OccupancyGrid& g, GridCell s, GridCell t) {
  std::vector<int> dist(g.blocked.size(), -1);
  std::deque<GridCell> q{s};
  dist[s.y * g.width + s.x] = 0;
  while (!q.empty()) {
    const GridCell c = q.front();
    q.pop_front();
    if (c == t) return dist[c.y * g.width + c.x];
    for (GridCell n : {GridCell{c.x + 1, c.y}, GridCell{c.x - 1, c.y}, GridCell{c.x, c.y + 1}, GridCell{c.x, c.y - 1}}) {
      if (!g.is_free(n) || dist[n.y * g.width + n.x] >= 0) continue;
      dist[n.y * g.width + n.x] = dist[c.y * g.width + c.x] + 1;
      q.push_back(n);
    }
  }
  return -1;
}

OccupancyGrid empty_grid(int w, int h) {
  OccupancyGrid g;
  g.width = w;
  g.height = h;
  g.cell_size_m = 1.0;
  g.blocked.assign(static_cast<std::size_t>(w * h), 0);
  return g;
}

}  // namespace

TEST(Classify, RightAngles) {
  auto left = classify({{0, 0, 0}, {2, 0, 0}, {2, 2, 0}});
  EXPECT_EQ(left.kind, RouteKind::TurnLeft);
  EXPECT_DOUBLE_EQ(left.turn_angle_deg, 90.0);
  EXPECT_EQ(left.anchors.mid, (Vec3{2, 0, 0}));
  EXPECT_EQ(left.template_mode, TemplateMode::Template1);
  EXPECT_EQ(classify({{0, 0, 0}, {2, 0, 0}, {2, -2, 0}}).kind, RouteKind::TurnRight);
}

TEST(Classify, StraightIsTurnBackAtMidpoint) {
  const auto r = classify({{0, 0, 0}, {4, 0, 0}});
  EXPECT_EQ(r.kind, RouteKind::TurnBack);
  EXPECT_EQ(r.anchors.mid, (Vec3{2, 0, 0}));
  EXPECT_EQ(r.template_mode, TemplateMode::Template2);
  // arclength, not vertex count
  EXPECT_EQ(classify({{0, 0, 0}, {1, 0, 0}, {1.1, 0.01, 0}, {6, 0.02, 0}}).kind, RouteKind::TurnBack);
}

TEST(Classify, GradualTurnIsOneTurn) {
  const auto r = classify({{0, 0, 0}, {2, 0, 0}, polar(45, 1) + Vec3{2, 0, 0}, polar(45, 1) + Vec3{2, 2, 0}});
  EXPECT_EQ(r.kind, RouteKind::TurnLeft);
  EXPECT_NEAR(r.turn_angle_deg, 90.0, 1e-9);
}

TEST(Classify, SmallWiggleIgnored) {
  EXPECT_EQ(classify({{0, 0, 0}, {2, 0, 0}, Vec3{2, 0, 0} + polar(20, 2)}).kind, RouteKind::TurnBack);
}

TEST(Classify, Errors) {
  EXPECT_EQ(code_of([] { classify({{0, 0, 0}}); }), ErrorCode::TooShort);
  EXPECT_EQ(code_of([] { classify({{1, 1, 0}, {1, 1, 0}}); }), ErrorCode::TooShort);
  EXPECT_EQ(code_of([] { classify({{0, 0, 0}, {0, 0, 2}}); }), ErrorCode::TooShort);
  // left, then far later right
  EXPECT_EQ(code_of([] { classify({{0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {2, 4, 0}, {2, 6, 0}, {4, 6, 0}}); }),
            ErrorCode::MultiTurn);
}

TEST(Rederive, Template1AndTurnBack) {
  const auto left = classify({{0, 0, 0}, {2, 0, 0}, {2, 2, 0}});
  EXPECT_EQ(rederive_answer(left), RouteKind::TurnLeft);
  const auto straight = classify({{0, 0, 0}, {4, 0, 0}});
  EXPECT_EQ(rederive_answer(straight), RouteKind::TurnBack);
}

TEST(Rederive, AlternativeModeMatchesReversedTraversal) {
  const Vec3 mid{2, 0, 0};
  const auto route = classify({{0, 0, 0}, mid, mid + polar(-50, 2)});
  ASSERT_EQ(route.kind, RouteKind::TurnRight);
  const auto alt = alternative_mode(route);
  EXPECT_EQ(alt.template_mode, TemplateMode::Template2);
  // agent arrives at mid heading toward tgt, then walks to src
  const Vec3 heading = route.anchors.tgt - mid;
  const auto reversed = classify({mid - heading, mid, route.anchors.src});
  const auto answer = rederive_answer(alt);
  ASSERT_TRUE(answer);
  EXPECT_EQ(*answer, reversed.kind);
  EXPECT_EQ(*answer, RouteKind::TurnRight);

  EXPECT_EQ(code_of([&] { alternative_mode(classify({{0, 0, 0}, mid, mid + polar(40, 2)})); }),
            ErrorCode::InvalidArgument);
}

TEST(Rederive, MirroredRoutesFlip) {
  for (double a = 35; a < 150; a += 7) {
    const auto l = classify({{0, 0, 0}, {3, 0, 0}, Vec3{3, 0, 0} + polar(a, 2)});
    const auto r = classify({{0, 0, 0}, {3, 0, 0}, Vec3{3, 0, 0} + polar(-a, 2)});
    EXPECT_EQ(l.kind, RouteKind::TurnLeft) << a;
    EXPECT_EQ(r.kind, RouteKind::TurnRight) << a;
    EXPECT_DOUBLE_EQ(l.turn_angle_deg, -r.turn_angle_deg);
  }
}

namespace {

SceneGraph anchor_graph() {
  return fx::still_graph(fx::scene({fx::object(1, "table", {0, 0.4, 0.4}), fx::object(2, "sofa", {2.4, 0, 0.4}),
                                    fx::object(3, "door", {2, 2.3, 1})}));
}

}  // namespace

TEST(Anchors, NearestDistinctObjects) {
  const auto g = anchor_graph();
  const auto route = classify({{0, 0, 0}, {2, 0, 0}, {2, 2, 0}});
  const auto labels = label_anchors(route, g);
  EXPECT_EQ(labels.src, "table");
  EXPECT_EQ(labels.mid, "sofa");
  EXPECT_EQ(labels.tgt, "door");

  EXPECT_EQ(code_of([&] { label_anchors(classify({{0, 0, 0}, {2, 0, 0}, {2, 9, 0}}), g); }), ErrorCode::NoNearbyObject);
  EXPECT_EQ(code_of([&] { label_anchors(classify({{0, 0, 0}, {0.3, 0, 0}, {2, 2, 0}}), g); }), ErrorCode::SharedAnchor);
}

TEST(Templates, TextAndAnswers) {
  const auto g = anchor_graph();
  const auto route = classify({{0, 0, 0}, {2, 0, 0}, {2, 2, 0}});
  const auto r = render_route_qa(route, label_anchors(route, g), g, {});
  EXPECT_EQ(r.question, template1_text("table", "sofa", "door"));
  EXPECT_EQ(r.ground_truth, "turn left");
  EXPECT_EQ(r.options, (std::vector<std::string>{"turn back", "turn left", "turn right"}));
  EXPECT_NE(r.question.find("beginning at the table facing the sofa"), std::string::npos);

  const auto line = classify({{0, 0.4, 0}, {4.5, 0.4, 0}});
  const auto g2 = fx::still_graph(fx::scene({fx::object(1, "table", {0, 0.4, 0.4}), fx::object(2, "rug", {2.25, 0.4, 0}),
                                             fx::object(3, "door", {4.5, 0.4, 1})}));
  const auto back = render_route_qa(line, label_anchors(line, g2), g2, {});
  EXPECT_EQ(back.ground_truth, "turn back");
  EXPECT_EQ(back.meta["template"], "Template2");
  EXPECT_NE(back.question.find("beginning at the rug facing the table"), std::string::npos) << back.question;
}

TEST(GridPlanner, EmptyGridCornerToCorner) {
  const auto g = empty_grid(10, 10);
  const auto path = plan_grid_path(g, {0, 0}, {9, 9});
  EXPECT_EQ(path.waypoints.size(), 3u);
  EXPECT_EQ(path.source, TrajectorySource::GridPlanner);
  double length = 0;
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) length += distance(path.waypoints[i - 1], path.waypoints[i]);
  EXPECT_DOUBLE_EQ(length, bfs_steps(g, {0, 0}, {9, 9}) * g.cell_size_m);
  EXPECT_EQ(classify_trajectory(path).kind, RouteKind::TurnLeft);
}

TEST(GridPlanner, ShortestAroundWall) {
  auto g = empty_grid(9, 9);
  for (int y = 0; y < 8; ++y) g.blocked[y * 9 + 4] = 1;
  const auto path = plan_grid_path(g, {0, 0}, {8, 0});
  double length = 0;
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) length += distance(path.waypoints[i - 1], path.waypoints[i]);
  EXPECT_DOUBLE_EQ(length, bfs_steps(g, {0, 0}, {8, 0}));
}

TEST(GridPlanner, DegenerateAndBlocked) {
  auto g = empty_grid(5, 5);
  const auto same = plan_grid_path(g, {2, 2}, {2, 2});
  EXPECT_EQ(code_of([&] { classify_trajectory(same); }), ErrorCode::TooShort);
  g.blocked[3 * 5 + 4] = g.blocked[4 * 5 + 3] = 1;  // wall off (4, 4)
  EXPECT_EQ(code_of([&] { plan_grid_path(g, {0, 0}, {4, 4}); }), ErrorCode::NoPath);
}

TEST(RoutePlan, IngestedTrajectoriesAndAlternative) {
  const auto g = anchor_graph();
  std::vector<Trajectory> ts{{{{0, 0, 0}, {2, 0, 0}, {2, 2, 0}}},   // left 90: Template1 plus alternative
                             {{{0, 0, 0}, {2, 0, 0}, {2, 9, 0}}}};  // no anchor near the end
  const auto rs = gen_route_plan(g, {}, &ts);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[0].meta["template"], "Template1");
  EXPECT_EQ(rs[1].meta["template"], "Template2");
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_NO_THROW(validate_record(rs[i]));
    EXPECT_EQ(rs[i].qid, make_qid(g.scene_id(), Task::RoutePlan, i));
  }
  GenConfig plain;
  plain.route_alternative_mode = false;
  EXPECT_EQ(gen_route_plan(g, plain, &ts).size(), 1u);
}

TEST(RoutePlan, GridPlannerIsDeterministic) {
  const auto g = fx::still_graph(fx::scene({fx::object(1, "table", {1, 1, 0.4}), fx::object(2, "sofa", {4, 1, 0.4}),
                                            fx::object(3, "door", {4, 4, 1}), fx::object(4, "bed", {1, 4, 0.4}),
                                            fx::object(5, "lamp", {2.5, 2.5, 0.8}, {0.3, 0.3, 1.6})}));
  const auto a = gen_route_plan(g, {});
  EXPECT_EQ(a, gen_route_plan(g, {}));
  for (const auto& r : a) {
    EXPECT_NO_THROW(validate_record(r));
    EXPECT_EQ(r.meta["source"], "grid_planner");
  }
}

TEST(Trajectories, LoadAndReject) {
  const auto dir = fx::temp_dir("traj");
  fx::write_text(dir / "t.jsonl", "{\"scene_id\": \"s\", \"waypoints\": [[0, 0], [1, 0, 0.5]]}\n\n"
                                  "{\"scene_id\": \"s\", \"waypoints\": [[2, 2], [3, 3]]}\n");
  const auto ts = load_trajectories(dir / "t.jsonl");
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[0].trajectory.waypoints[1], (Vec3{1, 0, 0.5}));
  fx::write_text(dir / "bad.jsonl", "{\"scene_id\": \"s\", \"waypoints\": [[0]]}\n");
  EXPECT_EQ(code_of([&] { load_trajectories(dir / "bad.jsonl"); }), ErrorCode::SchemaViolation);
}
