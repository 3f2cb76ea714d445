#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace spatialqa {

enum class Task {
  ObjCount,
  AbsDist,
  RelDist,
  RelDir,
  ObjSize,
  RoomSize,
  AppearanceOrder,
  RoutePlan,
  CamObjAbsDist,
  CamObjRelDist,
  ObjObjRelPos,
  CamDisplacement,
  CamMoveDir,
};

inline constexpr std::array<Task, 13> kAllTasks{
    Task::ObjCount,      Task::AbsDist,       Task::RelDist,      Task::RelDir,
    Task::ObjSize,       Task::RoomSize,      Task::AppearanceOrder, Task::RoutePlan,
    Task::CamObjAbsDist, Task::CamObjRelDist, Task::ObjObjRelPos, Task::CamDisplacement,
    Task::CamMoveDir,
};

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);

enum class AnswerType { NA, MCA };

std::string_view answer_type_name(AnswerType type);

struct QaRecord {
  std::string qid;
  std::string scene_id;
  Task task = Task::ObjCount;
  AnswerType answer_type = AnswerType::NA;
  std::string question;
  std::vector<std::string> options;  // MCA only
  std::string ground_truth;
  std::vector<int> frame_refs;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  friend bool operator==(const QaRecord&, const QaRecord&) = default;
};

// Throws SchemaViolation when a record breaks the answer-type contract:
// MCA needs 2-4 distinct options containing the ground truth; NA needs a
// ground truth that is a plain decimal number and no options.
void validate_record(const QaRecord& record);

// One JSON object per line with keys in the order
// qid, scene_id, task, answer_type, question, options (MCA only),
// ground_truth, frame_refs, meta.
std::string to_jsonl_line(const QaRecord& record);
QaRecord record_from_json(const nlohmann::ordered_json& doc);

// Parses a plain decimal numeral ("12", "-0.5", "3.0"); nullopt otherwise.
std::optional<double> parse_decimal(std::string_view text);

// Fixed-point formatting used for every numeric ground truth.
std::string format_fixed(double value, int decimals);

// Generator thresholds and seed material. Every value is logged into the
// meta of the records it influences.
struct GenConfig {
  std::string seed = "spatialqa";

  double ambiguity_margin_m = 0.15;
  double min_pair_dist_m = 0.1;

  double rel_dir_side_min_deg = 30.0;   // |angle| must exceed this for left/right
  double rel_dir_back_min_deg = 150.0;  // |angle| at or above this is "back"
  double rel_dir_min_planar_dist_m = 0.3;

  int appearance_gap_frames = 5;
  int appearance_max_questions = 4;

  int sequence_length = 32;
  double rel_pos_margin_m = 0.15;
  double min_displacement_m = 0.5;
  double dominance_ratio = 1.5;

  double max_anchor_dist_m = 2.0;
  bool route_alternative_mode = true;
  double route_grid_cell_m = 0.25;
  int route_attempts = 12;

  nlohmann::ordered_json to_json() const;
  // Keys absent from `doc` keep their defaults; unknown keys are rejected.
  static GenConfig from_json(const nlohmann::json& doc);
  void validate() const;
};

// Seed material for one record stream: "<seed>/<scene>/<task>/<counter>".
std::string stream_name(const GenConfig& cfg, std::string_view scene_id, Task task, std::size_t counter);

// "<scene>/<task>/<counter, 4 digits>"
std::string make_qid(std::string_view scene_id, Task task, std::size_t counter);

}  // namespace spatialqa
