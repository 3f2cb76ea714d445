#include "spatialqa/eval_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "spatialqa/error.hpp"

namespace spatialqa {

double mra(double pred, double truth) {
  if (!(truth > 0.0)) throw Error(ErrorCode::NonPositiveTruth, fmt::format("truth {} must be positive", truth));
  const double rel = std::abs(pred - truth) / truth;
  int passed = 0;
  for (double theta : kMraThresholds) {
    if (rel < 1.0 - theta) ++passed;
  }
  return passed / 10.0;
}

double extract_number(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    std::size_t start = i;
    if ((text[i] == '-' || text[i] == '+') && i + 1 < text.size()) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    const bool int_digits = j > i;
    std::size_t end = j;
    if (j < text.size() && text[j] == '.') {
      std::size_t k = j + 1;
      while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
      if (k > j + 1) end = k;  // "2." keeps just "2"
      else if (!int_digits) end = j;
    }
    if (end == i || (!int_digits && end == j)) {
      i = start;
      continue;
    }
    if (text[start] == '+') ++start;
    double value = 0.0;
    const auto res = std::from_chars(text.data() + start, text.data() + end, value);
    if (res.ec == std::errc()) return value;
    i = start;
  }
  throw Error(ErrorCode::NoNumberFound, fmt::format("no number in '{}'", text));
}

namespace {

std::string normalize(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::set<std::string> tokens(const std::string& normalized) {
  std::set<std::string> out;
  std::size_t i = 0;
  while (i < normalized.size()) {
    const std::size_t j = std::min(normalized.find(' ', i), normalized.size());
    out.insert(normalized.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

std::optional<std::size_t> letter_choice(std::string_view text, std::size_t option_count) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  bool bracketed = false;
  if (i < text.size() && (text[i] == '(' || text[i] == '[')) {
    bracketed = true;
    ++i;
  }
  if (i >= text.size()) return std::nullopt;
  const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
  if (letter < 'A' || letter > 'D') return std::nullopt;
  const auto index = static_cast<std::size_t>(letter - 'A');
  if (index >= option_count) return std::nullopt;
  ++i;
  std::size_t k = i;
  while (k < text.size() && text[k] == ' ') ++k;
  if (k >= text.size()) return index;  // the whole answer is the letter
  const char next = text[k];
  if (next == ')' || next == ']' || next == '.' || next == ':' || (!bracketed && next == ',')) return index;
  return std::nullopt;
}

}  // namespace

std::size_t match_option(std::string_view text, const std::vector<std::string>& options) {
  if (const auto letter = letter_choice(text, options.size())) return *letter;

  const std::string answer = normalize(text);
  const std::string padded = " " + answer + " ";
  std::vector<std::size_t> contained;
  for (std::size_t i = 0; i < options.size(); ++i) {
    const std::string opt = normalize(options[i]);
    if (!opt.empty() && padded.find(" " + opt + " ") != std::string::npos) contained.push_back(i);
  }
  if (!contained.empty()) {
    std::vector<std::size_t> maximal;
    for (std::size_t i : contained) {
      const std::string opt = " " + normalize(options[i]) + " ";
      const bool dominated = std::any_of(contained.begin(), contained.end(), [&](std::size_t j) {
        const std::string other = " " + normalize(options[j]) + " ";
        return j != i && other.size() > opt.size() && other.find(opt) != std::string::npos;
      });
      if (!dominated) maximal.push_back(i);
    }
    if (maximal.size() == 1) return maximal.front();
    throw Error(ErrorCode::AmbiguousMatch, fmt::format("'{}' contains {} options", text, maximal.size()));
  }

  const auto answer_tokens = tokens(answer);
  std::vector<std::size_t> overlap(options.size(), 0);
  for (std::size_t i = 0; i < options.size(); ++i) {
    for (const auto& t : tokens(normalize(options[i]))) overlap[i] += answer_tokens.count(t);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < options.size(); ++i) {
    if (overlap[i] > overlap[best]) best = i;
  }
  if (options.empty() || overlap[best] == 0) throw Error(ErrorCode::NoMatch, fmt::format("'{}' matches no option", text));
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i != best && overlap[i] + 1 > overlap[best]) {
      throw Error(ErrorCode::AmbiguousMatch, fmt::format("'{}' overlaps several options equally", text));
    }
  }
  return best;
}

std::string_view judgment_name(Judgment j) {
  switch (j) {
    case Judgment::Scored: return "scored";
    case Judgment::Missing: return "missing";
    case Judgment::NoNumber: return "no_number";
    case Judgment::NoMatch: return "no_match";
    case Judgment::Ambiguous: return "ambiguous";
  }
  return "";
}

EvalReport score_run(const std::vector<QaRecord>& records, const std::vector<Prediction>& predictions,
                     const ScoreOptions& options) {
  std::unordered_map<std::string, const Prediction*> by_qid;
  for (const auto& p : predictions) {
    if (!by_qid.emplace(p.qid, &p).second) throw Error(ErrorCode::DuplicateQid, fmt::format("qid '{}'", p.qid));
  }

  EvalReport report;
  report.question_weighted = options.question_weighted;
  std::set<std::string> record_qids;
  std::map<Task, double> sums;
  double question_sum = 0.0;
  for (const QaRecord& r : records) {
    record_qids.insert(r.qid);
    QuestionResult q;
    q.qid = r.qid;
    q.task = r.task;
    q.answer_type = r.answer_type;
    const auto it = by_qid.find(r.qid);
    if (it == by_qid.end()) {
      q.judgment = Judgment::Missing;
      ++report.missing_predictions;
    } else if (r.answer_type == AnswerType::NA) {
      try {
        q.parsed_value = extract_number(it->second->raw_text);
        q.score = mra(*q.parsed_value, *parse_decimal(r.ground_truth));
        q.judgment = Judgment::Scored;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoNumberFound) throw;
        q.judgment = Judgment::NoNumber;
      }
    } else {
      try {
        const std::size_t idx = match_option(it->second->raw_text, r.options);
        q.matched_option = r.options[idx];
        q.score = *q.matched_option == r.ground_truth ? 1.0 : 0.0;
        q.judgment = Judgment::Scored;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoMatch) {
          q.judgment = Judgment::NoMatch;
        } else if (e.code() == ErrorCode::AmbiguousMatch) {
          q.judgment = Judgment::Ambiguous;
        } else {
          throw;
        }
      }
    }
    TaskScore& ts = report.per_task[r.task];
    ++ts.count;
    sums[r.task] += q.score;
    question_sum += q.score;
    report.questions.push_back(std::move(q));
  }
  for (const auto& p : predictions) {
    if (record_qids.count(p.qid) == 0) ++report.unmatched_predictions;
  }

  double task_mean_sum = 0.0;
  for (auto& [task, ts] : report.per_task) {
    ts.score = sums[task] / static_cast<double>(ts.count);
    task_mean_sum += ts.score;
  }
  if (options.question_weighted) {
    report.overall = records.empty() ? 0.0 : question_sum / static_cast<double>(records.size());
  } else {
    report.overall = report.per_task.empty() ? 0.0 : task_mean_sum / static_cast<double>(report.per_task.size());
  }
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["overall_convention"] = question_weighted ? "mean over questions" : "unweighted mean of per-task scores";
  doc["metrics"] = "MCA: accuracy after option matching; NA: mean relative accuracy over thresholds 0.50..0.95";
  doc["overall"] = overall;
  doc["per_task"] = nlohmann::ordered_json::object();
  for (const auto& [task, ts] : per_task) {
    doc["per_task"][std::string(task_name(task))] = {{"count", ts.count}, {"score", ts.score}};
  }
  doc["missing_predictions"] = missing_predictions;
  doc["unmatched_predictions"] = unmatched_predictions;
  doc["questions"] = nlohmann::ordered_json::array();
  for (const auto& q : questions) {
    nlohmann::ordered_json j;
    j["qid"] = q.qid;
    j["task"] = task_name(q.task);
    j["judgment"] = judgment_name(q.judgment);
    if (q.parsed_value) j["parsed_value"] = *q.parsed_value;
    if (q.matched_option) j["matched_option"] = *q.matched_option;
    j["score"] = q.score;
    doc["questions"].push_back(std::move(j));
  }
  return doc;
}

std::string EvalReport::table() const {
  std::string out = fmt::format("{:<20} {:>8} {:>8}\n", "task", "count", "score");
  for (const auto& [task, ts] : per_task) {
    out += fmt::format("{:<20} {:>8} {:>8.4f}\n", task_name(task), ts.count, ts.score);
  }
  out += fmt::format("{:<20} {:>8} {:>8.4f}\n", question_weighted ? "overall (per-q)" : "overall", questions.size(),
                     overall);
  return out;
}

}  // namespace spatialqa
