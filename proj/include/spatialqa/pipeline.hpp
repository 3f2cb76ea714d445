#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "spatialqa/eval_metrics.hpp"
#include "spatialqa/metadata.hpp"
#include "spatialqa/ply.hpp"
#include "spatialqa/qa_record.hpp"
#include "spatialqa/route_plan.hpp"

namespace spatialqa {

// Process exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitEvalError = 3;

// Everything the generators read for one scene. A scene directory holds
// scene_metadata.json and frame_metadata.json, optionally
// trajectories.jsonl and point_cloud.ply.
struct SceneInputs {
  SceneMetadata scene;
  FrameMetadata frames;
  std::optional<std::vector<Trajectory>> trajectories;
  std::optional<LabeledPointCloud> cloud;
};

SceneInputs load_scene_dir(const std::filesystem::path& dir);

// Scene directories below `root` (any subdirectory holding
// scene_metadata.json), sorted by name.
std::vector<std::filesystem::path> find_scene_dirs(const std::filesystem::path& root);

// Records for one scene, tasks in enum order, each task in emission order.
// An empty `tasks` selects every task.
std::vector<QaRecord> generate_scene(const SceneInputs& in, const GenConfig& cfg, const std::vector<Task>& tasks = {});

// Fans scenes out over `workers` threads, then orders the result by
// (scene_id, task, counter). Output never depends on the worker count.
std::vector<QaRecord> generate_corpus(const std::vector<SceneInputs>& scenes, const GenConfig& cfg,
                                      const std::vector<Task>& tasks = {}, int workers = 1);

// First line {"header": {...}} with the resolved config, then one record per line.
std::string render_corpus(const std::vector<QaRecord>& records, const GenConfig& cfg, const std::vector<Task>& tasks);

// QaRecord JSONL; blank lines and the header line are skipped. Every record
// is validated on the way in.
std::vector<QaRecord> read_records(const std::filesystem::path& path);

// JSONL lines {"qid": ..., "prediction": "..."}.
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

// Per-task counts from JSONL or a JSON array; the task is read from "task"
// or, failing that, "question_type".
std::map<std::string, std::size_t> count_tasks(const std::filesystem::path& path);

struct IngestRequest {
  std::filesystem::path ply;
  std::filesystem::path label_map;  // JSON object {"<semantic id>": "<category>"}
  std::string scene_id;
  std::filesystem::path output;
  InstanceBoxOptions boxes;
};

struct GenRequest {
  std::filesystem::path scenes_root;
  std::filesystem::path output;  // empty: write to the output stream
  std::optional<std::filesystem::path> config;
  std::optional<std::string> seed;  // overrides the config file
  std::vector<std::string> tasks;   // names; empty means all
  int workers = 1;
};

struct EvalRequest {
  std::filesystem::path records;
  std::filesystem::path predictions;
  std::optional<std::filesystem::path> report;
  bool question_weighted = false;
};

struct StatsRequest {
  std::filesystem::path input;
  bool json = false;
};

struct FusionCheckRequest {
  std::uint64_t seed = 0;
  bool full_shape = false;
  // When all three are given the fused output of these inputs is written to
  // `output` using seeded random weights.
  std::optional<std::filesystem::path> hv, geometry, view, output;
  std::size_t dk = 64;
  std::size_t projector_width = 0;  // 0: same as the visual width
};

int run_ingest(const IngestRequest& req, std::ostream& out, std::ostream& err);
int run_gen(const GenRequest& req, std::ostream& out, std::ostream& err);
int run_eval(const EvalRequest& req, std::ostream& out, std::ostream& err);
int run_stats(const StatsRequest& req, std::ostream& out, std::ostream& err);
int run_fusion_check(const FusionCheckRequest& req, std::ostream& out, std::ostream& err);

}  // namespace spatialqa
