#pragma once

#include <string>
#include <vector>

#include "spatialqa/geometry.hpp"
#include "spatialqa/qa_record.hpp"
#include "spatialqa/scene_graph.hpp"

namespace spatialqa::detail {

// Accumulates one task's records and numbers them in emission order.
class RecordSink {
 public:
  RecordSink(const SceneGraph& g, Task task) : scene_id_(g.scene_id()), task_(task) {}

  QaRecord& add(AnswerType type, std::string question, std::string ground_truth) {
    QaRecord r;
    r.qid = make_qid(scene_id_, task_, records_.size());
    r.scene_id = scene_id_;
    r.task = task_;
    r.answer_type = type;
    r.question = std::move(question);
    r.ground_truth = std::move(ground_truth);
    r.meta["conventions"] = {{"world", kWorldConvention}, {"camera", kCameraConvention}};
    records_.push_back(std::move(r));
    return records_.back();
  }

  std::vector<QaRecord> take() { return std::move(records_); }

 private:
  std::string scene_id_;
  Task task_;
  std::vector<QaRecord> records_;
};

inline std::string join_names(const std::vector<std::string>& names, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += sep;
    out += names[i];
  }
  return out;
}

}  // namespace spatialqa::detail
