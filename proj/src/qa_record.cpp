#include "spatialqa/qa_record.hpp"

#include <charconv>
#include <set>

#include <fmt/format.h>

#include "spatialqa/error.hpp"

namespace spatialqa {

using nlohmann::ordered_json;

std::string_view task_name(Task task) {
  switch (task) {
    case Task::ObjCount: return "obj_count";
    case Task::AbsDist: return "abs_dist";
    case Task::RelDist: return "rel_dist";
    case Task::RelDir: return "rel_dir";
    case Task::ObjSize: return "obj_size";
    case Task::RoomSize: return "room_size";
    case Task::AppearanceOrder: return "appearance_order";
    case Task::RoutePlan: return "route_plan";
    case Task::CamObjAbsDist: return "cam_obj_abs_dist";
    case Task::CamObjRelDist: return "cam_obj_rel_dist";
    case Task::ObjObjRelPos: return "obj_obj_rel_pos";
    case Task::CamDisplacement: return "cam_displacement";
    case Task::CamMoveDir: return "cam_move_dir";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
  for (Task t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view answer_type_name(AnswerType type) { return type == AnswerType::NA ? "NA" : "MCA"; }

std::optional<double> parse_decimal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::size_t i = 0;
  if (text[0] == '-') ++i;
  bool digits = false;
  bool dot = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      digits = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      return std::nullopt;
    }
  }
  if (!digits) return std::nullopt;
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string format_fixed(double value, int decimals) {
  std::string out = fmt::format("{:.{}f}", value, decimals);
  if (out.rfind("-0", 0) == 0 && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

void validate_record(const QaRecord& r) {
  auto fail = [&](std::string_view what) {
    throw Error(ErrorCode::SchemaViolation, fmt::format("record {}: {}", r.qid, what));
  };
  if (r.qid.empty()) fail("empty qid");
  if (r.scene_id.empty()) fail("empty scene_id");
  if (r.question.empty()) fail("empty question");
  if (r.answer_type == AnswerType::MCA) {
    if (r.options.size() < 2 || r.options.size() > 4) fail("MCA record needs 2-4 options");
    const std::set<std::string> distinct(r.options.begin(), r.options.end());
    if (distinct.size() != r.options.size()) fail("options are not pairwise distinct");
    if (distinct.count(r.ground_truth) == 0) fail("ground truth is not among the options");
  } else {
    if (!r.options.empty()) fail("NA record must not carry options");
    if (!parse_decimal(r.ground_truth)) fail("NA ground truth is not a decimal number");
  }
}

std::string to_jsonl_line(const QaRecord& r) {
  ordered_json doc;
  doc["qid"] = r.qid;
  doc["scene_id"] = r.scene_id;
  doc["task"] = task_name(r.task);
  doc["answer_type"] = answer_type_name(r.answer_type);
  doc["question"] = r.question;
  if (r.answer_type == AnswerType::MCA) doc["options"] = r.options;
  doc["ground_truth"] = r.ground_truth;
  doc["frame_refs"] = r.frame_refs;
  doc["meta"] = r.meta;
  return doc.dump();
}

QaRecord record_from_json(const ordered_json& doc) {
  auto fail = [](std::string_view what) { throw Error(ErrorCode::SchemaViolation, std::string(what)); };
  if (!doc.is_object()) fail("record is not a JSON object");
  auto str = [&](const char* key) -> std::string {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) fail(fmt::format("record field '{}' missing or not a string", key));
    return it->get<std::string>();
  };
  QaRecord r;
  r.qid = str("qid");
  r.scene_id = str("scene_id");
  const auto task = parse_task(str("task"));
  if (!task) fail(fmt::format("record {}: unknown task", r.qid));
  r.task = *task;
  const std::string type = str("answer_type");
  if (type == "NA") {
    r.answer_type = AnswerType::NA;
  } else if (type == "MCA") {
    r.answer_type = AnswerType::MCA;
  } else {
    fail(fmt::format("record {}: unknown answer_type '{}'", r.qid, type));
  }
  r.question = str("question");
  r.ground_truth = str("ground_truth");
  if (const auto it = doc.find("options"); it != doc.end()) {
    if (!it->is_array()) fail(fmt::format("record {}: options must be an array", r.qid));
    for (const auto& o : *it) {
      if (!o.is_string()) fail(fmt::format("record {}: options must be strings", r.qid));
      r.options.push_back(o.get<std::string>());
    }
  }
  if (const auto it = doc.find("frame_refs"); it != doc.end()) {
    if (!it->is_array()) fail(fmt::format("record {}: frame_refs must be an array", r.qid));
    for (const auto& f : *it) {
      if (!f.is_number_integer()) fail(fmt::format("record {}: frame_refs must be integers", r.qid));
      r.frame_refs.push_back(f.get<int>());
    }
  }
  if (const auto it = doc.find("meta"); it != doc.end()) r.meta = *it;
  validate_record(r);
  return r;
}

ordered_json GenConfig::to_json() const {
  ordered_json doc;
  doc["seed"] = seed;
  doc["ambiguity_margin_m"] = ambiguity_margin_m;
  doc["min_pair_dist_m"] = min_pair_dist_m;
  doc["rel_dir_side_min_deg"] = rel_dir_side_min_deg;
  doc["rel_dir_back_min_deg"] = rel_dir_back_min_deg;
  doc["rel_dir_min_planar_dist_m"] = rel_dir_min_planar_dist_m;
  doc["appearance_gap_frames"] = appearance_gap_frames;
  doc["appearance_max_questions"] = appearance_max_questions;
  doc["sequence_length"] = sequence_length;
  doc["rel_pos_margin_m"] = rel_pos_margin_m;
  doc["min_displacement_m"] = min_displacement_m;
  doc["dominance_ratio"] = dominance_ratio;
  doc["max_anchor_dist_m"] = max_anchor_dist_m;
  doc["route_alternative_mode"] = route_alternative_mode;
  doc["route_grid_cell_m"] = route_grid_cell_m;
  doc["route_attempts"] = route_attempts;
  return doc;
}

GenConfig GenConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "generator config must be an object");
  GenConfig cfg;
  const ordered_json defaults = cfg.to_json();
  for (const auto& [key, value] : doc.items()) {
    if (!defaults.contains(key)) throw Error(ErrorCode::SchemaViolation, fmt::format("config.{}: unknown key", key));
    const auto& expected = defaults[key];
    const bool ok = (expected.is_string() && value.is_string()) || (expected.is_boolean() && value.is_boolean()) ||
                    (expected.is_number_integer() && value.is_number_integer()) ||
                    (expected.is_number_float() && value.is_number());
    if (!ok) throw Error(ErrorCode::SchemaViolation, fmt::format("config.{}: wrong type", key));
  }
  auto get = [&](const char* key, auto& target) {
    if (doc.contains(key)) target = doc[key].get<std::decay_t<decltype(target)>>();
  };
  get("seed", cfg.seed);
  get("ambiguity_margin_m", cfg.ambiguity_margin_m);
  get("min_pair_dist_m", cfg.min_pair_dist_m);
  get("rel_dir_side_min_deg", cfg.rel_dir_side_min_deg);
  get("rel_dir_back_min_deg", cfg.rel_dir_back_min_deg);
  get("rel_dir_min_planar_dist_m", cfg.rel_dir_min_planar_dist_m);
  get("appearance_gap_frames", cfg.appearance_gap_frames);
  get("appearance_max_questions", cfg.appearance_max_questions);
  get("sequence_length", cfg.sequence_length);
  get("rel_pos_margin_m", cfg.rel_pos_margin_m);
  get("min_displacement_m", cfg.min_displacement_m);
  get("dominance_ratio", cfg.dominance_ratio);
  get("max_anchor_dist_m", cfg.max_anchor_dist_m);
  get("route_alternative_mode", cfg.route_alternative_mode);
  get("route_grid_cell_m", cfg.route_grid_cell_m);
  get("route_attempts", cfg.route_attempts);
  cfg.validate();
  return cfg;
}

void GenConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw Error(ErrorCode::SchemaViolation, fmt::format("config.{}: must be positive", name));
  };
  positive(ambiguity_margin_m, "ambiguity_margin_m");
  positive(min_pair_dist_m, "min_pair_dist_m");
  positive(rel_dir_side_min_deg, "rel_dir_side_min_deg");
  positive(rel_dir_back_min_deg, "rel_dir_back_min_deg");
  positive(rel_dir_min_planar_dist_m, "rel_dir_min_planar_dist_m");
  positive(appearance_gap_frames, "appearance_gap_frames");
  positive(appearance_max_questions, "appearance_max_questions");
  positive(rel_pos_margin_m, "rel_pos_margin_m");
  positive(min_displacement_m, "min_displacement_m");
  positive(dominance_ratio, "dominance_ratio");
  positive(max_anchor_dist_m, "max_anchor_dist_m");
  positive(route_grid_cell_m, "route_grid_cell_m");
  positive(route_attempts, "route_attempts");
  if (sequence_length < 2) throw Error(ErrorCode::SchemaViolation, "config.sequence_length: must be at least 2");
  if (rel_dir_side_min_deg >= rel_dir_back_min_deg || rel_dir_back_min_deg > 180.0) {
    throw Error(ErrorCode::SchemaViolation, "config: need rel_dir_side_min_deg < rel_dir_back_min_deg <= 180");
  }
}

std::string stream_name(const GenConfig& cfg, std::string_view scene_id, Task task, std::size_t counter) {
  return fmt::format("{}/{}/{}/{}", cfg.seed, scene_id, task_name(task), counter);
}

std::string make_qid(std::string_view scene_id, Task task, std::size_t counter) {
  return fmt::format("{}/{}/{:04d}", scene_id, task_name(task), counter);
}

}  // namespace spatialqa
