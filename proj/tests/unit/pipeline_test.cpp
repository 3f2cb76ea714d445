#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "spatialqa/fusion.hpp"
#include "spatialqa/pipeline.hpp"
#include "synthetic.hpp"

using namespace spatialqa;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

// Runs the real binary; arguments are passed through the shell unquoted.
Run cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(SPATIALQA_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = fx::read_text(out);
  r.err = fx::read_text(err);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path scenes_dir(const std::string& name, std::initializer_list<std::uint64_t> seeds) {
  const auto dir = fx::temp_dir(name);
  for (auto seed : seeds) {
    const auto s = synth::make_scene(seed);
    synth::write_scene(s, dir / "scenes" / s.inputs.scene.scene_id);
  }
  return dir;
}

}  // namespace

TEST(Cli, Ingest) {
  const auto dir = fx::temp_dir("ingest");
  LabeledPointCloud cloud;
  for (int i = 0; i < 60; ++i) {
    const double t = i / 60.0;
    cloud.points.push_back({{t, 1 - t, 0.5 * t}, {}, 5, 1});
    cloud.points.push_back({{3 + t, 2 + t, t}, {}, 6, 2});
  }
  write_ply(dir / "cloud.ply", cloud, PlyEncoding::BinaryLittleEndian);
  fx::write_text(dir / "labels.json", R"({"5": "chair", "6": "table"})");

  const std::string args = "ingest --ply " + (dir / "cloud.ply").string() + " --labels " +
                           (dir / "labels.json").string() + " --scene-id s1 -o ";
  ASSERT_EQ(cli(args + (dir / "a.json").string(), dir).code, 0);
  ASSERT_EQ(cli(args + (dir / "b.json").string(), dir).code, 0);
  EXPECT_EQ(fx::read_text(dir / "a.json"), fx::read_text(dir / "b.json"));
  const auto scene = load_scene_metadata(dir / "a.json");
  ASSERT_EQ(scene.objects.size(), 2u);
  EXPECT_EQ(scene.category_counts, (std::map<std::string, int>{{"chair", 1}, {"table", 1}}));

  fx::write_text(dir / "bad.ply", "ply\nformat ascii 1.0\nelement vertex 3\n");
  const auto bad = cli("ingest --ply " + (dir / "bad.ply").string() + " --labels " + (dir / "labels.json").string() +
                           " --scene-id s1 -o " + (dir / "c.json").string(),
                       dir);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("MalformedHeader"), std::string::npos) << bad.err;
  EXPECT_FALSE(fs::exists(dir / "c.json"));
}

TEST(Cli, GenRecordsRederiveAndFilter) {
  const auto dir = scenes_dir("gen", {3});
  const auto scenes = (dir / "scenes").string();
  ASSERT_EQ(cli("gen --scenes " + scenes + " -o " + (dir / "all.jsonl").string(), dir).code, 0);
  const auto records = read_records(dir / "all.jsonl");
  ASSERT_FALSE(records.empty());

  // every record re-derived independently, and the enumerable tasks complete
  const auto s = synth::make_scene(3);
  const GenConfig cfg;
  for (const auto& r : records) EXPECT_EQ(oracle::check_record(r, s, cfg), "") << r.qid;
  EXPECT_EQ(oracle::check_coverage(records, s, cfg), "");

  ASSERT_EQ(cli("gen --scenes " + scenes + " --tasks obj_count -o " + (dir / "count.jsonl").string(), dir).code, 0);
  const auto counts = read_records(dir / "count.jsonl");
  std::vector<QaRecord> expected;
  for (const auto& r : records)
    if (r.task == Task::ObjCount) expected.push_back(r);
  EXPECT_EQ(counts, expected);

  const auto header = nlohmann::json::parse(lines(fx::read_text(dir / "count.jsonl")).front());
  EXPECT_EQ(header["header"]["tasks"], nlohmann::json::array({"obj_count"}));
  EXPECT_EQ(header["header"]["record_count"], counts.size());
}

TEST(Cli, GenWorkersAndSeed) {
  const auto dir = scenes_dir("workers", {1, 2, 4, 5});
  const auto scenes = (dir / "scenes").string();
  ASSERT_EQ(cli("gen --scenes " + scenes + " -j 1 -o " + (dir / "one.jsonl").string(), dir).code, 0);
  ASSERT_EQ(cli("gen --scenes " + scenes + " -j 4 -o " + (dir / "four.jsonl").string(), dir).code, 0);
  EXPECT_EQ(fx::read_text(dir / "one.jsonl"), fx::read_text(dir / "four.jsonl"));
  ASSERT_EQ(cli("gen --scenes " + scenes + " --seed other -o " + (dir / "other.jsonl").string(), dir).code, 0);
  EXPECT_NE(fx::read_text(dir / "one.jsonl"), fx::read_text(dir / "other.jsonl"));

  EXPECT_EQ(cli("gen --scenes " + scenes + " --tasks nonsense", dir).code, 2);
  EXPECT_EQ(cli("gen --scenes " + (dir / "missing").string(), dir).code, 2);
}

TEST(Cli, GenConfigFile) {
  const auto dir = scenes_dir("config", {6});
  fx::write_text(dir / "cfg.json", R"({"ambiguity_margin_m": 0.3, "route_alternative_mode": false})");
  ASSERT_EQ(cli("gen --scenes " + (dir / "scenes").string() + " --config " + (dir / "cfg.json").string() + " -o " +
                    (dir / "out.jsonl").string(),
                dir)
                .code,
            0);
  const auto header = nlohmann::json::parse(lines(fx::read_text(dir / "out.jsonl")).front());
  EXPECT_EQ(header["header"]["config"]["ambiguity_margin_m"], 0.3);
  for (const auto& r : read_records(dir / "out.jsonl")) {
    // without the alternative mode only turn-back routes use the second template
    if (r.task == Task::RoutePlan && r.meta["template"] == "Template2") EXPECT_EQ(r.meta["classified_kind"], "TurnBack") << r.qid;
  }
  fx::write_text(dir / "bad.json", R"({"ambiguity_margin": 0.3})");
  EXPECT_EQ(cli("gen --scenes " + (dir / "scenes").string() + " --config " + (dir / "bad.json").string(), dir).code, 2);
}

TEST(Cli, Eval) {
  const auto dir = scenes_dir("eval", {2});
  ASSERT_EQ(cli("gen --scenes " + (dir / "scenes").string() + " -o " + (dir / "r.jsonl").string(), dir).code, 0);
  const auto records = read_records(dir / "r.jsonl");
  std::string perfect;
  for (const auto& r : records) perfect += nlohmann::json{{"qid", r.qid}, {"prediction", r.ground_truth}}.dump() + "\n";
  fx::write_text(dir / "p.jsonl", perfect);
  const auto ok = cli("eval --records " + (dir / "r.jsonl").string() + " --predictions " + (dir / "p.jsonl").string() +
                          " --report " + (dir / "rep.json").string(),
                      dir);
  ASSERT_EQ(ok.code, 0) << ok.err;
  const auto report = nlohmann::json::parse(fx::read_text(dir / "rep.json"));
  EXPECT_EQ(report["overall"], 1.0);
  for (const auto& [task, v] : report["per_task"].items()) EXPECT_EQ(v["score"], 1.0) << task;

  fx::write_text(dir / "dup.jsonl", perfect + lines(perfect).front() + "\n");
  EXPECT_EQ(cli("eval --records " + (dir / "r.jsonl").string() + " --predictions " + (dir / "dup.jsonl").string(), dir)
                .code,
            3);
}

TEST(Cli, StatsSmallFixtureAndEmpty) {
  const auto dir = fx::temp_dir("stats");
  std::string text;
  const char* tasks[] = {"rel_dir", "rel_dir", "rel_dir", "rel_dir", "abs_dist", "abs_dist", "abs_dist",
                         "route_plan", "route_plan", "route_plan"};
  for (const char* t : tasks) text += nlohmann::json{{"task", t}}.dump() + "\n";
  fx::write_text(dir / "ten.jsonl", text);
  const auto r = cli("stats --json " + (dir / "ten.jsonl").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["total"], 10);
  EXPECT_EQ(doc["per_task"], (nlohmann::json{{"abs_dist", 3}, {"rel_dir", 4}, {"route_plan", 3}}));

  fx::write_text(dir / "empty.jsonl", "");
  const auto e = cli("stats " + (dir / "empty.jsonl").string(), dir);
  ASSERT_EQ(e.code, 0);
  EXPECT_NE(e.out.find("total"), std::string::npos);
  EXPECT_NE(e.out.find(" 0\n"), std::string::npos) << e.out;
}

// Distribution fixtures shaped like the released files: the counts below are
// the published per-task numbers.
TEST(Stats, PublishedDistributions) {
  const auto dir = fx::temp_dir("stats_tables");
  const std::vector<std::pair<std::string, std::size_t>> train{
      {"object_rel_direction", 86441}, {"object_abs_distance", 50757}, {"object_rel_distance", 42025},
      {"object_size_estimation", 12917}, {"object_counting", 9357},   {"route_planning", 4225},
      {"room_size_estimation", 2057}};
  {
    std::ofstream out(dir / "train.jsonl");
    for (const auto& [task, n] : train)
      for (std::size_t i = 0; i < n; ++i) out << "{\"question_type\":\"" << task << "\"}\n";
  }
  std::ostringstream stats_out, stats_err;
  ASSERT_EQ(run_stats({dir / "train.jsonl", true}, stats_out, stats_err), kExitOk) << stats_err.str();
  const auto doc = nlohmann::json::parse(stats_out.str());
  EXPECT_EQ(doc["total"], 207779);
  EXPECT_EQ(doc["per_task"]["route_planning"], 4225);
  EXPECT_EQ(doc["per_task"]["room_size_estimation"], 2057);

  const std::vector<std::pair<std::string, std::size_t>> test{{"camera_displacement", 839},
                                                              {"camera_movement_direction", 913},
                                                              {"camera_obj_abs_dist", 905},
                                                              {"camera_obj_rel_dist", 1740},
                                                              {"obj_obj_relative_pos", 1645}};
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [task, n] : test)
    for (std::size_t i = 0; i < n; ++i) arr.push_back({{"question_type", task}});
  fx::write_text(dir / "test.json", arr.dump());
  const auto counts = count_tasks(dir / "test.json");
  std::size_t total = 0;
  for (const auto& [_, n] : counts) total += n;
  EXPECT_EQ(total, 6042u);
  EXPECT_EQ(counts.at("camera_displacement"), 839u);
}

TEST(Cli, FusionCheck) {
  const auto dir = fx::temp_dir("fusion");
  const auto r = cli("fusion-check --seed 0", dir);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;

  write_token_matrix(dir / "hv.tmat", random_matrix<double>(9, 8, "cli/hv"));
  write_token_matrix(dir / "f.tmat", random_matrix<double>(9, 8, "cli/f"));
  write_token_matrix(dir / "z.tmat", random_matrix<double>(1, 8, "cli/z"));
  const std::string files = " --hv " + (dir / "hv.tmat").string() + " --geometry " + (dir / "f.tmat").string() +
                            " --view " + (dir / "z.tmat").string() + " --output ";
  ASSERT_EQ(cli("fusion-check --projector-width 6" + files + (dir / "o1.tmat").string(), dir).code, 0);
  ASSERT_EQ(cli("fusion-check --projector-width 6" + files + (dir / "o2.tmat").string(), dir).code, 0);
  const auto out = read_token_matrix(dir / "o1.tmat");
  EXPECT_EQ(out.rows, 9u);
  EXPECT_EQ(out.cols, 6u);
  EXPECT_EQ(out, read_token_matrix(dir / "o2.tmat"));

  write_token_matrix(dir / "z16.tmat", random_matrix<double>(1, 16, "cli/z16"));
  EXPECT_EQ(cli("fusion-check --hv " + (dir / "hv.tmat").string() + " --geometry " + (dir / "f.tmat").string() +
                    " --view " + (dir / "z16.tmat").string() + " --output " + (dir / "o3.tmat").string(),
                dir)
                .code,
            2);
}

TEST(Cli, UsageErrors) {
  const auto dir = fx::temp_dir("usage");
  EXPECT_EQ(cli("", dir).code, 2);
  EXPECT_EQ(cli("frobnicate", dir).code, 2);
  EXPECT_EQ(cli("eval --records", dir).code, 2);
  EXPECT_EQ(cli("--help", dir).code, 0);
}
