#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spatialqa/qa_record.hpp"

namespace spatialqa {

struct Prediction {
  std::string qid;
  std::string raw_text;
};

// Mean relative accuracy: share of the thresholds theta in
// {0.50, 0.55, ..., 0.95} for which |pred - truth| / truth < 1 - theta.
// Throws NonPositiveTruth when truth <= 0.
double mra(double pred, double truth);

inline constexpr std::array<double, 10> kMraThresholds{0.50, 0.55, 0.60, 0.65, 0.70,
                                                        0.75, 0.80, 0.85, 0.90, 0.95};

// First decimal numeral in `text` (optional sign and decimal point, no
// digit grouping, no unit conversion). Throws NoNumberFound.
double extract_number(std::string_view text);

// Index of the option a free-text answer selects. In priority order:
//  1. an option letter (A-D, any case) standing alone or leading the text
//     followed by punctuation, e.g. "B", "(b)", "C. turn left";
//  2. the one option whose normalized text appears as a whole-word run in the
//     normalized answer (options contained in a longer matching option
//     yield to it);
//  3. the one option with the largest token overlap, ahead of the
//     runner-up by at least one token.
// Throws NoMatch or AmbiguousMatch.
std::size_t match_option(std::string_view text, const std::vector<std::string>& options);

enum class Judgment { Scored, Missing, NoNumber, NoMatch, Ambiguous };

std::string_view judgment_name(Judgment j);

struct QuestionResult {
  std::string qid;
  Task task = Task::ObjCount;
  AnswerType answer_type = AnswerType::NA;
  Judgment judgment = Judgment::Missing;
  std::optional<double> parsed_value;        // NA
  std::optional<std::string> matched_option;  // MCA
  double score = 0.0;
};

struct TaskScore {
  std::size_t count = 0;
  double score = 0.0;  // mean over the task's questions
};

struct EvalReport {
  std::map<Task, TaskScore> per_task;
  double overall = 0.0;
  bool question_weighted = false;
  std::size_t missing_predictions = 0;
  std::size_t unmatched_predictions = 0;  // predictions whose qid has no record
  std::vector<QuestionResult> questions;  // in record order

  nlohmann::ordered_json to_json() const;
  std::string table() const;
};

struct ScoreOptions {
  // Overall score is the unweighted mean of per-task scores unless set.
  bool question_weighted = false;
};

// Throws DuplicateQid when two predictions share a qid.
EvalReport score_run(const std::vector<QaRecord>& records, const std::vector<Prediction>& predictions,
                     const ScoreOptions& options = {});

}  // namespace spatialqa
