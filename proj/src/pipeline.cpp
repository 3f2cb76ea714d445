#include "spatialqa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "spatialqa/error.hpp"
#include "spatialqa/eval_metrics.hpp"
#include "spatialqa/fusion.hpp"
#include "spatialqa/qa_spatial.hpp"
#include "spatialqa/qa_temporal.hpp"
#include "spatialqa/scene_graph.hpp"

namespace fs = std::filesystem;

namespace spatialqa {

SceneInputs load_scene_dir(const fs::path& dir) {
  SceneInputs in;
  in.scene = load_scene_metadata(dir / "scene_metadata.json");
  in.frames = load_frame_metadata(dir / "frame_metadata.json");
  if (in.frames.scene_id != in.scene.scene_id) {
    throw Error(ErrorCode::SchemaViolation, fmt::format("{}: frame metadata is for scene '{}', expected '{}'",
                                                        dir.string(), in.frames.scene_id, in.scene.scene_id));
  }
  if (fs::exists(dir / "trajectories.jsonl")) {
    std::vector<Trajectory> mine;
    for (auto& t : load_trajectories(dir / "trajectories.jsonl")) {
      if (t.scene_id == in.scene.scene_id) mine.push_back(std::move(t.trajectory));
    }
    in.trajectories = std::move(mine);
  }
  if (fs::exists(dir / "point_cloud.ply")) in.cloud = parse_ply(dir / "point_cloud.ply");
  return in;
}

std::vector<fs::path> find_scene_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::Io, fmt::format("'{}' is not a directory", root.string()));
  std::vector<fs::path> dirs;
  if (fs::exists(root / "scene_metadata.json")) dirs.push_back(root);
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "scene_metadata.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<QaRecord> generate_scene(const SceneInputs& in, const GenConfig& cfg, const std::vector<Task>& tasks) {
  const SceneGraph g = SceneGraph::build(in.scene, in.frames);
  std::vector<int> seq;
  if (g.frames().frames.size() >= 2) seq = g.sample_frame_sequence(cfg.sequence_length);

  std::vector<QaRecord> out;
  for (Task task : kAllTasks) {
    if (!tasks.empty() && std::find(tasks.begin(), tasks.end(), task) == tasks.end()) continue;
    std::vector<QaRecord> part;
    switch (task) {
      case Task::ObjCount: part = gen_object_count(g, cfg); break;
      case Task::AbsDist: part = gen_absolute_distance(g, cfg); break;
      case Task::RelDist: part = gen_relative_distance(g, cfg); break;
      case Task::RelDir: part = gen_relative_direction(g, cfg); break;
      case Task::ObjSize: part = gen_object_size(g, cfg); break;
      case Task::RoomSize: part = gen_room_size(g, cfg, in.cloud ? &*in.cloud : nullptr); break;
      case Task::AppearanceOrder: part = gen_appearance_order(g, cfg); break;
      case Task::RoutePlan: part = gen_route_plan(g, cfg, in.trajectories ? &*in.trajectories : nullptr); break;
      case Task::CamObjAbsDist: part = gen_cam_obj_abs_dist(g, seq, cfg); break;
      case Task::CamObjRelDist: part = gen_cam_obj_rel_dist(g, seq, cfg); break;
      case Task::ObjObjRelPos: part = gen_obj_obj_rel_pos(g, seq, cfg); break;
      case Task::CamDisplacement: part = gen_cam_displacement(g, seq, cfg); break;
      case Task::CamMoveDir: part = gen_cam_move_dir(g, seq, cfg); break;
    }
    for (auto& r : part) {
      validate_record(r);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<QaRecord> generate_corpus(const std::vector<SceneInputs>& scenes, const GenConfig& cfg,
                                      const std::vector<Task>& tasks, int workers) {
  cfg.validate();
  std::vector<std::vector<QaRecord>> per_scene(scenes.size());
  std::vector<std::exception_ptr> failures(scenes.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < scenes.size(); i = next++) {
      try {
        per_scene[i] = generate_scene(scenes[i], cfg, tasks);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::clamp(workers, 1, 256));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, scenes.size()); ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // first failure in scene order, whichever thread hit it
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::vector<std::size_t> order(scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scenes[a].scene.scene_id < scenes[b].scene.scene_id; });
  std::vector<QaRecord> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && scenes[order[k]].scene.scene_id == scenes[order[k - 1]].scene.scene_id) {
      throw Error(ErrorCode::SchemaViolation, fmt::format("scene '{}' appears twice", scenes[order[k]].scene.scene_id));
    }
    for (auto& r : per_scene[order[k]]) out.push_back(std::move(r));
  }
  return out;
}

std::string render_corpus(const std::vector<QaRecord>& records, const GenConfig& cfg, const std::vector<Task>& tasks) {
  nlohmann::ordered_json header;
  header["format"] = "spatialqa-records/1";
  header["config"] = cfg.to_json();
  auto& names = header["tasks"] = nlohmann::ordered_json::array();
  for (Task t : kAllTasks) {
    if (tasks.empty() || std::find(tasks.begin(), tasks.end(), t) != tasks.end()) names.push_back(task_name(t));
  }
  header["record_count"] = records.size();
  nlohmann::ordered_json line;
  line["header"] = std::move(header);
  std::string out = line.dump() + "\n";
  for (const auto& r : records) out += to_jsonl_line(r) + "\n";
  return out;
}

namespace {

template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::SchemaViolation, fmt::format("{}:{}: invalid JSON", path.string(), line_no));
    }
    if (doc.is_object() && doc.contains("header")) continue;
    try {
      fn(doc);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}:{}: {}", path.string(), line_no, e.detail()));
    }
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<QaRecord> read_records(const fs::path& path) {
  std::vector<QaRecord> out;
  for_each_json_line(path, [&](const nlohmann::ordered_json& doc) { out.push_back(record_from_json(doc)); });
  return out;
}

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::vector<Prediction> out;
  for_each_json_line(path, [&](const nlohmann::ordered_json& doc) {
    if (!doc.is_object() || !doc.contains("qid") || !doc["qid"].is_string() || !doc.contains("prediction")) {
      throw Error(ErrorCode::SchemaViolation, "expected {\"qid\": str, \"prediction\": ...}");
    }
    const auto& p = doc["prediction"];
    // numbers are accepted as given; the scorer extracts from text anyway
    out.push_back({doc["qid"].get<std::string>(), p.is_string() ? p.get<std::string>() : p.dump()});
  });
  return out;
}

std::map<std::string, std::size_t> count_tasks(const fs::path& path) {
  std::map<std::string, std::size_t> counts;
  auto count_one = [&](const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "record is not an object");
    for (const char* key : {"task", "question_type"}) {
      if (doc.contains(key) && doc[key].is_string()) {
        ++counts[doc[key].get<std::string>()];
        return;
      }
    }
    throw Error(ErrorCode::SchemaViolation, "record has neither 'task' nor 'question_type'");
  };
  const std::string text = slurp(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return counts;
  if (text[first] == '[') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::SchemaViolation, fmt::format("{}: {}", path.string(), e.what()));
    }
    for (const auto& r : doc) count_one(r);
    return counts;
  }
  for_each_json_line(path, [&](const nlohmann::ordered_json& doc) { count_one(doc); });
  return counts;
}

namespace {

int report_error(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what() << "\n";
  if (const auto* ours = dynamic_cast<const Error*>(&e); ours && ours->code() == ErrorCode::DuplicateQid) {
    return kExitEvalError;
  }
  return kExitInputError;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return report_error(err, e);
  } catch (const nlohmann::json::exception& e) {
    return report_error(err, Error(ErrorCode::SchemaViolation, e.what()));
  } catch (const fs::filesystem_error& e) {
    return report_error(err, Error(ErrorCode::Io, e.what()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(ErrorCode::Io, fmt::format("write failed for '{}'", path.string()));
}

}  // namespace

int run_ingest(const IngestRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LabeledPointCloud cloud = parse_ply(req.ply);
    const nlohmann::json doc = read_document(req.label_map);
    if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "label map must be an object of id -> category");
    std::map<int, std::string> labels;
    for (const auto& [key, value] : doc.items()) {
      int id = 0;
      const auto res = std::from_chars(key.data(), key.data() + key.size(), id);
      if (res.ec != std::errc() || res.ptr != key.data() + key.size() || !value.is_string()) {
        throw Error(ErrorCode::SchemaViolation, fmt::format("label map entry '{}' must be \"<int>\": \"<category>\"", key));
      }
      labels[id] = value.get<std::string>();
    }
    InstanceBoxResult boxes = derive_instance_boxes(cloud, labels, req.boxes);
    const std::size_t kept = boxes.instances.size();
    const SceneMetadata scene = make_scene_metadata(req.scene_id, cloud, std::move(boxes.instances));
    write_document(req.output, to_json(scene));
    out << fmt::format("scene {}: {} points, {} instances, {} dropped (too few points), {} dropped (unmapped label)\n",
                       req.scene_id, cloud.points.size(), kept, boxes.dropped_small, boxes.dropped_unlabeled);
    return kExitOk;
  });
}

int run_gen(const GenRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    GenConfig cfg;
    if (req.config) cfg = GenConfig::from_json(read_document(*req.config));
    if (req.seed) cfg.seed = *req.seed;
    cfg.validate();
    std::vector<Task> tasks;
    for (const auto& name : req.tasks) {
      const auto t = parse_task(name);
      if (!t) throw Error(ErrorCode::InvalidArgument, fmt::format("unknown task '{}'", name));
      if (std::find(tasks.begin(), tasks.end(), *t) == tasks.end()) tasks.push_back(*t);
    }
    if (req.workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be at least 1");

    const auto dirs = find_scene_dirs(req.scenes_root);
    if (dirs.empty()) {
      throw Error(ErrorCode::Io, fmt::format("no scene_metadata.json below '{}'", req.scenes_root.string()));
    }
    std::vector<SceneInputs> scenes;
    for (const auto& d : dirs) scenes.push_back(load_scene_dir(d));
    const auto records = generate_corpus(scenes, cfg, tasks, req.workers);
    const std::string text = render_corpus(records, cfg, tasks);
    if (req.output.empty()) {
      out << text;
    } else {
      write_text(req.output, text);
      err << fmt::format("{} records from {} scenes -> {}\n", records.size(), scenes.size(), req.output.string());
    }
    return kExitOk;
  });
}

int run_eval(const EvalRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto records = read_records(req.records);
    const auto predictions = read_predictions(req.predictions);
    const EvalReport report = score_run(records, predictions, {req.question_weighted});
    if (req.report) write_text(*req.report, report.to_json().dump(2) + "\n");
    out << report.table();
    if (report.missing_predictions || report.unmatched_predictions) {
      out << fmt::format("missing predictions: {}, predictions without a record: {}\n", report.missing_predictions,
                         report.unmatched_predictions);
    }
    return kExitOk;
  });
}

int run_stats(const StatsRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto counts = count_tasks(req.input);
    std::size_t total = 0;
    for (const auto& [_, n] : counts) total += n;
    if (req.json) {
      nlohmann::ordered_json doc;
      doc["total"] = total;
      doc["per_task"] = nlohmann::ordered_json::object();
      for (const auto& [task, n] : counts) doc["per_task"][task] = n;
      out << doc.dump(2) << "\n";
    } else {
      out << fmt::format("{:<32} {:>10}\n", "task", "count");
      for (const auto& [task, n] : counts) out << fmt::format("{:<32} {:>10}\n", task, n);
      out << fmt::format("{:<32} {:>10}\n", "total", total);
    }
    return kExitOk;
  });
}

int run_fusion_check(const FusionCheckRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (req.hv || req.geometry || req.view || req.output) {
      if (!(req.hv && req.geometry && req.view && req.output)) {
        throw Error(ErrorCode::InvalidArgument, "--hv, --geometry, --view and --output go together");
      }
      const TokenMatrix hv = read_token_matrix(*req.hv);
      const TokenMatrix f = read_token_matrix(*req.geometry);
      const TokenMatrix z = read_token_matrix(*req.view);
      const std::size_t p = req.projector_width ? req.projector_width : hv.cols;
      const auto w = random_weights<double>({hv.cols, f.cols, req.dk, p, p}, fmt::format("fusion/{}", req.seed));
      const TokenMatrix result = fuse_forward(hv, f, z, w);
      write_token_matrix(*req.output, result);
      out << fmt::format("fused {}x{} -> {}x{} written to {}\n", hv.rows, hv.cols, result.rows, result.cols,
                         req.output->string());
      return kExitOk;
    }

    bool ok = true;
    auto line = [&](bool pass, const std::string& what) {
      ok = ok && pass;
      out << (pass ? "ok   " : "FAIL ") << what << "\n";
    };

    const auto fx = grad_check_fixture(req.seed);
    const auto z3d = build_unified_3d(fx.inputs.geometry, fx.inputs.view).cast<double>();
    const auto hv = fx.inputs.hv.cast<double>();
    const auto w = fx.weights.cast<double>();
    const auto attn = attention_weights(hv, z3d, w);
    double worst_row = 0.0;
    for (std::size_t i = 0; i < attn.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < attn.cols; ++j) s += attn(i, j);
      worst_row = std::max(worst_row, std::abs(s - 1.0));
    }
    line(worst_row <= 1e-9, fmt::format("softmax rows sum to 1 (max deviation {:.3e})", worst_row));

    auto identity = w;
    identity.wv = Matrix<double>(w.wv.rows, w.wv.cols);
    make_identity_projector(identity, hv.cols);
    const auto same = fuse_forward(hv, fx.inputs.geometry.cast<double>(), fx.inputs.view.cast<double>(), identity);
    line(same == hv, "zero value projection with identity projector returns the visual tokens");

    const auto lin = grad_check_fixture(req.seed, 8, 8, true);
    const auto lin_res = grad_check(lin.weights, lin.inputs);
    line(lin_res.max_rel_error < 1e-9L,
         fmt::format("gradient check, linear chain: {:.3e} over {} entries", static_cast<double>(lin_res.max_rel_error),
                     lin_res.entries));
    const auto full = grad_check(fx.weights, fx.inputs);
    line(full.max_rel_error < 1e-5L,
         fmt::format("gradient check, full chain: {:.3e} over {} entries (worst {})",
                     static_cast<double>(full.max_rel_error), full.entries, full.worst_param));

    if (req.full_shape) {
      const auto start = std::chrono::steady_clock::now();
      const auto hv_big = random_matrix<float>(729, 1152, "full/hv");
      const auto f_big = random_matrix<float>(729, 768, "full/f");
      const auto z_big = random_matrix<float>(1, 768, "full/z");
      const auto w_big = random_weights<float>({1152, 768, 64, 3584, 3584}, "full/w");
      const auto o = fuse_forward(hv_big, f_big, z_big, w_big);
      const bool finite = std::all_of(o.data.begin(), o.data.end(), [](float x) { return std::isfinite(x); });
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      line(o.rows == 729 && o.cols == 3584 && finite,
           fmt::format("full-size shapes 729x1152 with 730x768 keys -> {}x{} in {:.1f} s", o.rows, o.cols, secs));
    }
    return ok ? kExitOk : kExitEvalError;
  });
}

}  // namespace spatialqa
