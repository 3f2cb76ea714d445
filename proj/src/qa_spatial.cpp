#include "spatialqa/qa_spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "qa_common.hpp"
#include "spatialqa/error.hpp"
#include "spatialqa/rng.hpp"

namespace spatialqa {

using detail::RecordSink;

std::vector<QaRecord> gen_object_count(const SceneGraph& g, const GenConfig&) {
  RecordSink sink(g, Task::ObjCount);
  for (const auto& [category, count] : g.scene().category_counts) {
    if (count < 2) continue;
    sink.add(AnswerType::NA, fmt::format("How many {}(s) are in this room?", category), std::to_string(count))
        .meta["category"] = category;
  }
  return sink.take();
}

std::vector<QaRecord> gen_absolute_distance(const SceneGraph& g, const GenConfig& cfg) {
  RecordSink sink(g, Task::AbsDist);
  const auto unique = g.unique_instances();
  for (std::size_t i = 0; i < unique.size(); ++i) {
    for (std::size_t j = i + 1; j < unique.size(); ++j) {
      const ObjectInstance& a = g.object(unique[i]);
      const ObjectInstance& b = g.object(unique[j]);
      const double d = box_box_distance(a.box, b.box);
      if (d < cfg.min_pair_dist_m) continue;
      QaRecord& r = sink.add(AnswerType::NA,
                             fmt::format("Measuring from the closest point of each object, what is the direct "
                                         "distance between the {} and the {} (in meters)?",
                                         a.category, b.category),
                             format_fixed(d, 1));
      r.meta["instances"] = {a.instance_id, b.instance_id};
      r.meta["distance_m"] = d;
      r.meta["min_pair_dist_m"] = cfg.min_pair_dist_m;
    }
  }
  return sink.take();
}

std::vector<QaRecord> gen_relative_distance(const SceneGraph& g, const GenConfig& cfg) {
  RecordSink sink(g, Task::RelDist);
  const auto unique = g.unique_instances();
  if (unique.size() < 5) return sink.take();
  for (std::size_t t = 0; t < unique.size(); ++t) {
    const ObjectInstance& target = g.object(unique[t]);
    std::vector<int> others;
    for (int id : unique) {
      if (id != target.instance_id) others.push_back(id);
    }
    Rng rng = Rng::named(stream_name(cfg, g.scene_id(), Task::RelDist, t));
    std::vector<int> candidates;
    std::vector<double> distances;
    for (std::size_t k : rng.sample(others.size(), 4)) {
      candidates.push_back(others[k]);
      distances.push_back(box_box_distance(target.box, g.object(others[k]).box));
    }
    std::vector<std::size_t> order(4);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return distances[x] < distances[y]; });
    if (distances[order[1]] - distances[order[0]] < cfg.ambiguity_margin_m) continue;

    std::vector<std::string> options;
    for (int id : candidates) options.push_back(g.object(id).category);
    const std::string truth = options[order[0]];
    QaRecord& r = sink.add(AnswerType::MCA,
                           fmt::format("Measuring from the closest point of each object, which of these objects "
                                       "({}) is the closest to the {}?",
                                       detail::join_names(options), target.category),
                           truth);
    r.options = options;
    r.meta["target_instance"] = target.instance_id;
    r.meta["candidate_instances"] = candidates;
    r.meta["candidate_distances_m"] = distances;
    r.meta["ambiguity_margin_m"] = cfg.ambiguity_margin_m;
  }
  return sink.take();
}

std::optional<std::string> relative_direction_label(Vec3 observer, Vec3 facing, Vec3 query, const GenConfig& cfg) {
  const Vec3 forward{facing.x - observer.x, facing.y - observer.y, 0.0};
  const Vec3 to_query{query.x - observer.x, query.y - observer.y, 0.0};
  if (norm(to_query) < cfg.rel_dir_min_planar_dist_m) return std::nullopt;
  double theta = 0.0;
  try {
    theta = planar_signed_angle(forward, to_query);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateDirection) return std::nullopt;
    throw;
  }
  const double side = cfg.rel_dir_side_min_deg;
  const double back = cfg.rel_dir_back_min_deg;
  if (std::abs(theta) >= back) return "back";
  if (theta > side) return "left";
  if (theta < -side) return "right";
  return std::nullopt;
}

std::vector<QaRecord> gen_relative_direction(const SceneGraph& g, const GenConfig& cfg) {
  RecordSink sink(g, Task::RelDir);
  const auto unique = g.unique_instances();
  if (unique.size() < 3) return sink.take();
  std::size_t pair_index = 0;
  for (int a_id : unique) {
    for (int b_id : unique) {
      if (a_id == b_id) continue;
      std::vector<int> rest;
      for (int id : unique) {
        if (id != a_id && id != b_id) rest.push_back(id);
      }
      Rng rng = Rng::named(stream_name(cfg, g.scene_id(), Task::RelDir, pair_index++));
      const int c_id = rest[rng.below(rest.size())];
      const ObjectInstance& a = g.object(a_id);
      const ObjectInstance& b = g.object(b_id);
      const ObjectInstance& c = g.object(c_id);
      const auto label = relative_direction_label(a.box.center, b.box.center, c.box.center, cfg);
      if (!label) continue;
      QaRecord& r = sink.add(
          AnswerType::MCA,
          fmt::format("If I am standing by the {} and facing the {}, is the {} to my left, right, or back? An object "
                      "is to my back if I would have to turn at least {} degrees in order to face it.",
                      a.category, b.category, c.category, cfg.rel_dir_back_min_deg),
          *label);
      r.options = {"left", "right", "back"};
      r.meta["instances"] = {a_id, b_id, c_id};
      r.meta["angle_deg"] = planar_signed_angle(b.box.center - a.box.center, c.box.center - a.box.center);
      r.meta["rel_dir_side_min_deg"] = cfg.rel_dir_side_min_deg;
      r.meta["rel_dir_back_min_deg"] = cfg.rel_dir_back_min_deg;
    }
  }
  return sink.take();
}

std::vector<QaRecord> gen_object_size(const SceneGraph& g, const GenConfig&) {
  RecordSink sink(g, Task::ObjSize);
  for (int id : g.unique_instances()) {
    const ObjectInstance& o = g.object(id);
    const double longest_cm = 100.0 * std::max({o.box.size.x, o.box.size.y, o.box.size.z});
    const std::string truth = format_fixed(longest_cm, 0);
    if (truth == "0") continue;
    QaRecord& r = sink.add(AnswerType::NA,
                           fmt::format("What is the length of the longest dimension (length, width, or height) of "
                                       "the {}, measured in centimeters?",
                                       o.category),
                           truth);
    r.meta["instance"] = id;
    r.meta["longest_cm"] = longest_cm;
  }
  return sink.take();
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto turn = [](Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const std::vector<Point2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % poly.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

std::vector<QaRecord> gen_room_size(const SceneGraph& g, const GenConfig&, const LabeledPointCloud* cloud) {
  RecordSink sink(g, Task::RoomSize);
  double area = 0.0;
  std::string method;
  if (cloud != nullptr && !cloud->points.empty()) {
    std::vector<Point2> floor;
    floor.reserve(cloud->points.size());
    for (const auto& p : cloud->points) floor.push_back({p.position.x, p.position.y});
    area = polygon_area(convex_hull(std::move(floor)));
    method = "convex_hull";
  } else {
    const Extents& e = g.scene().scene_extents;
    area = (e.max.x - e.min.x) * (e.max.y - e.min.y);
    method = "extents";
  }
  const std::string truth = format_fixed(area, 1);
  if (*parse_decimal(truth) <= 0.0) return sink.take();
  QaRecord& r = sink.add(AnswerType::NA,
                         "What is the size of this room (in square meters)? If multiple rooms are shown, estimate "
                         "the size of the combined space.",
                         truth);
  r.meta["method"] = method;
  r.meta["area_m2"] = area;
  return sink.take();
}

std::vector<QaRecord> gen_appearance_order(const SceneGraph& g, const GenConfig& cfg) {
  RecordSink sink(g, Task::AppearanceOrder);
  std::vector<std::pair<std::string, int>> seen(g.category_first_seen().begin(), g.category_first_seen().end());
  if (seen.size() < 4) return sink.take();

  const int gap = cfg.appearance_gap_frames;
  auto separated = [&](std::size_t i, std::size_t j) { return std::abs(seen[i].second - seen[j].second) >= gap; };
  std::vector<std::array<std::size_t, 4>> groups;
  const std::size_t n = seen.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!separated(a, b)) continue;
      for (std::size_t c = b + 1; c < n; ++c) {
        if (!separated(a, c) || !separated(b, c)) continue;
        for (std::size_t d = c + 1; d < n; ++d) {
          if (separated(a, d) && separated(b, d) && separated(c, d)) groups.push_back({a, b, c, d});
        }
      }
    }
  if (groups.empty()) return sink.take();

  Rng pick = Rng::named(stream_name(cfg, g.scene_id(), Task::AppearanceOrder, 0));
  const auto chosen =
      pick.sample(groups.size(), std::min<std::size_t>(groups.size(), static_cast<std::size_t>(cfg.appearance_max_questions)));
  for (std::size_t q = 0; q < chosen.size(); ++q) {
    std::array<std::size_t, 4> group = groups[chosen[q]];
    std::vector<std::string> listed;
    for (std::size_t i : group) listed.push_back(seen[i].first);  // alphabetical

    std::sort(group.begin(), group.end(), [&](std::size_t x, std::size_t y) { return seen[x].second < seen[y].second; });
    std::vector<std::string> ordered;
    std::vector<int> frames;
    for (std::size_t i : group) {
      ordered.push_back(seen[i].first);
      frames.push_back(seen[i].second);
    }
    const std::string truth = detail::join_names(ordered);

    std::vector<std::string> distractors;
    std::vector<std::string> perm = ordered;
    std::sort(perm.begin(), perm.end());
    do {
      const std::string text = detail::join_names(perm);
      if (text != truth) distractors.push_back(text);
    } while (std::next_permutation(perm.begin(), perm.end()));

    Rng rng = Rng::named(stream_name(cfg, g.scene_id(), Task::AppearanceOrder, q + 1));
    std::vector<std::string> options{truth};
    for (std::size_t k : rng.sample(distractors.size(), 3)) options.push_back(distractors[k]);
    rng.shuffle(options);

    QaRecord& r = sink.add(AnswerType::MCA,
                           fmt::format("What will be the first-time appearance order of the following categories in "
                                       "the video: {}?",
                                       detail::join_names(listed)),
                           truth);
    r.options = std::move(options);
    r.frame_refs = frames;
    r.meta["categories"] = ordered;
    r.meta["first_seen_frames"] = frames;
    r.meta["appearance_gap_frames"] = gap;
  }
  return sink.take();
}

}  // namespace spatialqa
