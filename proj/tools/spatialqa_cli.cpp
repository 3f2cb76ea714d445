// spatialqa: ingest -> gen -> eval -> stats, plus the fusion kernel self-check.
#include <iostream>

#include <CLI11.hpp>

#include "spatialqa/pipeline.hpp"

using namespace spatialqa;

int main(int argc, char** argv) {
  CLI::App app{"Scene-graph QA generation and scoring"};
  app.require_subcommand(1);

  IngestRequest ingest;
  std::string fit = "aabb";
  auto* c_ingest = app.add_subcommand("ingest", "derive scene_metadata.json from a labeled PLY");
  c_ingest->add_option("--ply", ingest.ply, "labeled point cloud")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--labels", ingest.label_map, "JSON {\"<semantic id>\": \"<category>\"}")->required();
  c_ingest->add_option("--scene-id", ingest.scene_id)->required();
  c_ingest->add_option("-o,--output", ingest.output, "scene_metadata.json to write")->required();
  c_ingest->add_option("--min-points", ingest.boxes.min_points, "drop instances with fewer points")
      ->capture_default_str();
  c_ingest->add_option("--fit", fit, "box fit: aabb or pca-yaw")->check(CLI::IsMember({"aabb", "pca-yaw"}))
      ->capture_default_str();

  GenRequest gen;
  auto* c_gen = app.add_subcommand("gen", "generate QA records for every scene below a root");
  c_gen->add_option("--scenes", gen.scenes_root, "directory of scene folders")->required();
  c_gen->add_option("-o,--output", gen.output, "JSONL output (stdout if omitted)");
  c_gen->add_option("--config", gen.config, "generator config JSON");
  c_gen->add_option("--seed", gen.seed, "seed material, overrides the config");
  c_gen->add_option("--tasks", gen.tasks, "task names, comma separated")->delimiter(',');
  c_gen->add_option("-j,--workers", gen.workers, "scene-parallel workers")->capture_default_str();

  EvalRequest eval;
  auto* c_eval = app.add_subcommand("eval", "score predictions against records");
  c_eval->add_option("--records", eval.records)->required();
  c_eval->add_option("--predictions", eval.predictions, "JSONL {qid, prediction}")->required();
  c_eval->add_option("--report", eval.report, "write the JSON report here");
  c_eval->add_flag("--question-weighted", eval.question_weighted, "overall = mean over questions");

  StatsRequest stats;
  auto* c_stats = app.add_subcommand("stats", "count records per task");
  c_stats->add_option("input", stats.input, "JSONL or JSON array")->required();
  c_stats->add_flag("--json", stats.json);

  FusionCheckRequest fusion;
  auto* c_fusion = app.add_subcommand("fusion-check", "verify the fusion kernel, or run it on TMAT inputs");
  c_fusion->add_option("--seed", fusion.seed)->capture_default_str();
  c_fusion->add_flag("--full-shape", fusion.full_shape, "also run the full-size shape smoke test");
  c_fusion->add_option("--hv", fusion.hv, "visual tokens (TMAT)");
  c_fusion->add_option("--geometry", fusion.geometry, "geometry tokens (TMAT)");
  c_fusion->add_option("--view", fusion.view, "camera view token (TMAT, one row)");
  c_fusion->add_option("--output", fusion.output, "fused tokens (TMAT)");
  c_fusion->add_option("--dk", fusion.dk)->capture_default_str();
  c_fusion->add_option("--projector-width", fusion.projector_width, "0 keeps the visual width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInputError;
  }

  if (*c_ingest) {
    ingest.boxes.fit = fit == "pca-yaw" ? BoxFit::PcaYaw : BoxFit::AxisAligned;
    return run_ingest(ingest, std::cout, std::cerr);
  }
  if (*c_gen) return run_gen(gen, std::cout, std::cerr);
  if (*c_eval) return run_eval(eval, std::cout, std::cerr);
  if (*c_stats) return run_stats(stats, std::cout, std::cerr);
  return run_fusion_check(fusion, std::cout, std::cerr);
}
