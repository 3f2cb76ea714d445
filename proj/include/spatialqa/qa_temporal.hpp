#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spatialqa/qa_record.hpp"
#include "spatialqa/scene_graph.hpp"

namespace spatialqa {

// Indices i < j into a sampled sequence of length n, 1-based as they appear
// in question text.
struct FramePairSpec {
  int i = 1;
  int j = 2;
  int n = 2;

  bool valid() const { return 1 <= i && i < j && j <= n; }
};

// Temporal generators work over `seq`, a list of frame ids from
// SceneGraph::sample_frame_sequence. Questions refer to frames by their
// 1-based position in `seq`.
std::vector<QaRecord> gen_cam_obj_abs_dist(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg);
std::vector<QaRecord> gen_cam_obj_rel_dist(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg);
std::vector<QaRecord> gen_obj_obj_rel_pos(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg);
std::vector<QaRecord> gen_cam_displacement(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg);
std::vector<QaRecord> gen_cam_move_dir(const SceneGraph& g, const std::vector<int>& seq, const GenConfig& cfg);

enum class RelPosAxis { NearFar, LeftRight, UpDown };

// Answer for "is A <first option> or <second option> than B" along one
// camera axis: the first option when A's corner interval lies entirely below
// B's by at least `margin`, the second when entirely above, nullopt
// otherwise. Options are near/far (Z), left/right (X), up/down (Y, +Y down).
std::optional<std::string> relative_position_label(const std::array<Vec3, 8>& a_cam,
                                                   const std::array<Vec3, 8>& b_cam, RelPosAxis axis,
                                                   double margin);

// Net camera motion between two poses expressed in the first pose's frame,
// vertical (camera Y) ignored: "Forward" (+Z), "Backward", "Right" (+X),
// "Left"; nullopt if no planar axis dominates by `dominance_ratio` or the net
// 3D displacement is shorter than `min_displacement`.
std::optional<std::string> camera_move_label(const Pose& start, const Pose& end, double dominance_ratio,
                                             double min_displacement);

}  // namespace spatialqa
