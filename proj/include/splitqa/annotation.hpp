#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "splitqa/analysis.hpp"

namespace splitqa {

enum class RatingMetric { fluency, relative_simplicity, content_preservation };

inline constexpr RatingMetric kRatingMetrics[] = {
    RatingMetric::fluency, RatingMetric::relative_simplicity, RatingMetric::content_preservation};

std::string_view to_string(RatingMetric metric);
RatingMetric parse_rating_metric(std::string_view text);

struct RatingRecord {
  std::string rater_id;
  std::string pair_id;
  RatingMetric metric = RatingMetric::fluency;
  int score = 0;          // 1..5
  std::string timestamp;  // UTC, ISO 8601
};

enum class TaskKind { quality_rating, edit_classification };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

struct AnnotationTask {
  std::string task_id;
  TaskKind kind = TaskKind::quality_rating;
  std::vector<SampledPair> pairs;

  nlohmann::json to_json() const;
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NextItem {
  bool done = false;
  std::size_t index = 0;
  SampledPair pair;
  std::size_t remaining = 0;
};

// Tasks and their append-only judgment logs under one data directory:
//   <dir>/tasks/<task_id>/task.json
//   <dir>/tasks/<task_id>/log.jsonl
// Every submission is appended and synced before it is acknowledged;
// reads take the latest record per (rater, pair, metric).
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path data_dir);

  // Idempotent: the task id is a hash of (kind, pairs).
  AnnotationTask create_task(const std::vector<SampledPair>& pairs, TaskKind kind);
  AnnotationTask task(const std::string& task_id) const;
  std::vector<std::string> task_ids() const;

  NextItem next_item(const std::string& task_id, const std::string& rater_id) const;

  void submit_rating(const std::string& task_id, RatingRecord record);
  // All-or-nothing: every record is validated before any is written.
  void submit_ratings(const std::string& task_id, std::vector<RatingRecord> records);
  void submit_edit_label(const std::string& task_id, const EditLabel& label);

  // Latest record per logical key, in first-submission order.
  std::vector<RatingRecord> ratings(const std::string& task_id) const;
  std::vector<EditLabel> edit_labels(const std::string& task_id) const;

  nlohmann::json agreement_report(const std::string& task_id) const;

 private:
  struct TaskState {
    AnnotationTask task;
    std::map<std::string, std::size_t> pair_index;
    std::vector<nlohmann::json> log;
  };

  const TaskState& state(const std::string& task_id) const;
  void append(TaskState& st, const std::vector<nlohmann::json>& entries);
  void validate(const TaskState& st, const RatingRecord& r) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, TaskState> tasks_;
};

// HTTP front end for an AnnotationStore.
class AnnotationServer {
 public:
  // `ui_dir`, when non-empty, is served as static files at "/".
  AnnotationServer(AnnotationStore& store, std::string ui_dir = {});
  ~AnnotationServer();

  // Blocks until stop(). Returns false if the address cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it, for use with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace splitqa
