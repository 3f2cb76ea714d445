#include <gtest/gtest.h>

#include <random>

#include "spatialqa/error.hpp"
#include "spatialqa/eval_metrics.hpp"

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

QaRecord na(std::string qid, Task task, std::string truth) {
  QaRecord r;
  r.qid = std::move(qid);
  r.scene_id = "s";
  r.task = task;
  r.answer_type = AnswerType::NA;
  r.question = "q";
  r.ground_truth = std::move(truth);
  return r;
}

QaRecord mca(std::string qid, Task task, std::vector<std::string> options, std::string truth) {
  QaRecord r = na(std::move(qid), task, std::move(truth));
  r.answer_type = AnswerType::MCA;
  r.options = std::move(options);
  return r;
}

}  // namespace

TEST(Mra, HandEnumeratedCases) {
  EXPECT_DOUBLE_EQ(mra(2.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(mra(2.2, 2.0), 0.8);
  EXPECT_DOUBLE_EQ(mra(3.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(mra(1.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(mra(1.5, 2.0), 0.5);  // rel 0.25: thresholds 0.50..0.70 pass
  EXPECT_EQ(code_of([] { mra(1.0, 0.0); }), ErrorCode::NonPositiveTruth);
}

TEST(Mra, StepFunctionOverRandomPairs) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> truth(0.1, 50), rel(0, 0.7);
  for (int i = 0; i < 10000; ++i) {
    const double t = truth(gen);
    const double p = t * (1 + (i % 2 ? 1 : -1) * rel(gen));
    const double r = std::abs(p - t) / t;
    int pass = 0;
    for (int k = 0; k < 10; ++k) pass += r < 1.0 - (0.50 + 0.05 * k) ? 1 : 0;
    // 0.05 * k can land a hair off the literal threshold; skip those ties
    bool near_tie = false;
    for (int k = 0; k < 10; ++k) near_tie |= std::abs(r - (0.5 - 0.05 * k)) < 1e-12;
    if (!near_tie) EXPECT_DOUBLE_EQ(mra(p, t), pass / 10.0);
  }
}

TEST(ExtractNumber, Rules) {
  EXPECT_DOUBLE_EQ(extract_number("The distance is about 2.5 meters."), 2.5);
  EXPECT_DOUBLE_EQ(extract_number("roughly 1,200 cm"), 1.0);
  EXPECT_DOUBLE_EQ(extract_number("-3.5"), -3.5);
  EXPECT_DOUBLE_EQ(extract_number("+4 m"), 4.0);
  EXPECT_DOUBLE_EQ(extract_number("answer: 2."), 2.0);
  EXPECT_DOUBLE_EQ(extract_number("frame-7"), -7.0);
  EXPECT_EQ(code_of([] { extract_number("I cannot tell."); }), ErrorCode::NoNumberFound);
  EXPECT_EQ(code_of([] { extract_number("- . +"); }), ErrorCode::NoNumberFound);
}

TEST(MatchOption, Letters) {
  const std::vector<std::string> opts{"turn back", "turn left", "turn right"};
  EXPECT_EQ(match_option("B. turn left", opts), 1u);
  EXPECT_EQ(match_option("(c)", opts), 2u);
  EXPECT_EQ(match_option(" A", opts), 0u);
  EXPECT_EQ(match_option("[B] because", opts), 1u);
  // D is out of range for three options, so fall through to text
  EXPECT_EQ(code_of([&] { match_option("D", opts); }), ErrorCode::NoMatch);
  // a leading article is not an option letter
  EXPECT_EQ(match_option("A turn left is needed", opts), 1u);
}

TEST(MatchOption, WholeWordText) {
  EXPECT_EQ(match_option("the chair", {"table", "chair", "armchair", "sofa"}), 1u);
  EXPECT_EQ(match_option("I think the dining table", {"table", "dining table", "sofa"}), 1u);
  EXPECT_EQ(match_option("You should Turn-Right here", {"turn back", "turn left", "turn right"}), 2u);
  EXPECT_EQ(code_of([] { match_option("left or right?", {"left", "right", "back"}); }), ErrorCode::AmbiguousMatch);
}

TEST(MatchOption, TokenOverlap) {
  const std::vector<std::string> opts{"turn back", "turn left", "turn right"};
  EXPECT_EQ(code_of([&] { match_option("turn", opts); }), ErrorCode::AmbiguousMatch);
  EXPECT_EQ(code_of([&] { match_option("no idea", opts); }), ErrorCode::NoMatch);
  EXPECT_EQ(match_option("sofa, lamp, chair, tv", {"chair, sofa, lamp, tv", "tv, bed, desk, rug"}), 0u);
}

TEST(ScoreRun, PerfectAndEmpty) {
  const std::vector<QaRecord> records{na("a", Task::ObjCount, "4"), na("b", Task::AbsDist, "1.5"),
                                      mca("c", Task::RelDir, {"left", "right", "back"}, "back")};
  const auto perfect = score_run(records, {{"a", "4"}, {"b", "1.5"}, {"c", "back"}});
  for (const auto& [task, ts] : perfect.per_task) EXPECT_DOUBLE_EQ(ts.score, 1.0);
  EXPECT_DOUBLE_EQ(perfect.overall, 1.0);

  const auto empty = score_run(records, {});
  EXPECT_EQ(empty.missing_predictions, 3u);
  for (const auto& [task, ts] : empty.per_task) {
    EXPECT_EQ(ts.count, 1u);
    EXPECT_EQ(ts.score, 0.0);
  }
}

TEST(ScoreRun, HandScoredSixQuestions) {
  const std::vector<QaRecord> records{
      na("q1", Task::ObjCount, "3"),
      na("q2", Task::AbsDist, "2.0"),
      na("q3", Task::AbsDist, "2.0"),
      mca("q4", Task::RelDir, {"left", "right", "back"}, "left"),
      mca("q5", Task::RelDir, {"left", "right", "back"}, "back"),
      mca("q6", Task::RoutePlan, {"turn back", "turn left", "turn right"}, "turn left"),
  };
  const std::vector<Prediction> preds{{"q1", "There are 3 chairs."}, {"q2", "about 2.2 meters"},
                                      {"q3", "I cannot tell"},       {"q4", "B"},
                                      {"q5", "It is to my back."},   {"zz", "stray"}};
  const auto rep = score_run(records, preds);

  const Judgment want_j[] = {Judgment::Scored, Judgment::Scored, Judgment::NoNumber,
                             Judgment::Scored, Judgment::Scored, Judgment::Missing};
  const double want_s[] = {1.0, 0.8, 0.0, 0.0, 1.0, 0.0};
  ASSERT_EQ(rep.questions.size(), 6u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(rep.questions[i].judgment, want_j[i]) << i;
    EXPECT_DOUBLE_EQ(rep.questions[i].score, want_s[i]) << i;
  }
  EXPECT_EQ(rep.questions[3].matched_option, "right");
  EXPECT_DOUBLE_EQ(*rep.questions[1].parsed_value, 2.2);
  EXPECT_DOUBLE_EQ(rep.per_task.at(Task::ObjCount).score, 1.0);
  EXPECT_DOUBLE_EQ(rep.per_task.at(Task::AbsDist).score, 0.4);
  EXPECT_DOUBLE_EQ(rep.per_task.at(Task::RelDir).score, 0.5);
  EXPECT_DOUBLE_EQ(rep.per_task.at(Task::RoutePlan).score, 0.0);
  EXPECT_DOUBLE_EQ(rep.overall, (1.0 + 0.4 + 0.5 + 0.0) / 4);
  EXPECT_EQ(rep.missing_predictions, 1u);
  EXPECT_EQ(rep.unmatched_predictions, 1u);

  const auto weighted = score_run(records, preds, {true});
  EXPECT_DOUBLE_EQ(weighted.overall, 2.8 / 6);

  const auto doc = rep.to_json();
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"overall_convention", "metrics", "overall", "per_task",
                                            "missing_predictions", "unmatched_predictions", "questions"}));
  EXPECT_EQ(doc["questions"][2]["judgment"], "no_number");
  EXPECT_NE(rep.table().find("rel_dir"), std::string::npos);
}

TEST(ScoreRun, DuplicateQid) {
  EXPECT_EQ(code_of([] { score_run({na("a", Task::ObjCount, "1")}, {{"a", "1"}, {"a", "2"}}); }),
            ErrorCode::DuplicateQid);
}
