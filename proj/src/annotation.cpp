#include "splitqa/annotation.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "splitqa/error.hpp"
#include "splitqa/jsonl.hpp"
#include "splitqa/metrics.hpp"

namespace splitqa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(RatingMetric m) {
  switch (m) {
    case RatingMetric::fluency: return "fluency";
    case RatingMetric::relative_simplicity: return "relative_simplicity";
    case RatingMetric::content_preservation: return "content_preservation";
  }
  return "fluency";
}

RatingMetric parse_rating_metric(std::string_view text) {
  for (auto m : kRatingMetrics)
    if (to_string(m) == text) return m;
  throw ValidationError("unknown rating metric '" + std::string(text) + "'");
}

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::quality_rating ? "quality_rating" : "edit_classification";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "quality_rating") return TaskKind::quality_rating;
  if (text == "edit_classification") return TaskKind::edit_classification;
  throw ValidationError("unknown task kind '" + std::string(text) + "'");
}

json AnnotationTask::to_json() const {
  json pairs_json = json::array();
  for (const auto& p : pairs)
    pairs_json.push_back({{"pair_id", p.pair_id}, {"original", p.original}, {"candidate", p.candidate}});
  return json{{"task_id", task_id}, {"kind", to_string(kind)}, {"pairs", std::move(pairs_json)}};
}

namespace {

std::string content_hash(TaskKind kind, const std::vector<SampledPair>& pairs) {
  json body = {{"kind", to_string(kind)}, {"pairs", json::array()}};
  for (const auto& p : pairs)
    body["pairs"].push_back({{"pair_id", p.pair_id}, {"original", p.original}, {"candidate", p.candidate}});
  const std::string bytes = body.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

AnnotationTask task_from_json(const json& j) {
  AnnotationTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.kind = parse_task_kind(j.at("kind").get<std::string>());
  for (const auto& p : j.at("pairs"))
    t.pairs.push_back({p.at("pair_id").get<std::string>(), p.at("original").get<std::string>(),
                       p.at("candidate").get<std::string>()});
  return t;
}

// Drops a torn final line left by a crash mid-append, so new appends start
// on a fresh line.
void repair_log(const fs::path& log) {
  if (!fs::exists(log)) return;
  std::ifstream in(log, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto last_nl = bytes.rfind('\n');
  const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (keep != bytes.size()) fs::resize_file(log, keep);
}

std::string rating_key(const json& e) {
  return e.at("rater_id").get<std::string>() + '\x1f' + e.at("pair_id").get<std::string>() +
         '\x1f' + e.value("metric", "");
}

}  // namespace

AnnotationStore::AnnotationStore(fs::path data_dir) : dir_(std::move(data_dir)) {
  fs::create_directories(dir_ / "tasks");
  for (const auto& entry : fs::directory_iterator(dir_ / "tasks")) {
    if (!entry.is_directory()) continue;
    const fs::path task_file = entry.path() / "task.json";
    if (!fs::exists(task_file)) continue;
    std::ifstream in(task_file);
    TaskState st;
    st.task = task_from_json(json::parse(in));
    for (std::size_t i = 0; i < st.task.pairs.size(); ++i) st.pair_index[st.task.pairs[i].pair_id] = i;
    const fs::path log = entry.path() / "log.jsonl";
    repair_log(log);
    if (fs::exists(log)) st.log = jsonl::read_file(log.string());
    tasks_.emplace(st.task.task_id, std::move(st));
  }
}

AnnotationTask AnnotationStore::create_task(const std::vector<SampledPair>& pairs, TaskKind kind) {
  if (pairs.empty()) throw ValidationError("a task needs at least one pair");
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    if (p.pair_id.empty()) throw ValidationError("pair_id must not be empty");
    if (!ids.insert(p.pair_id).second) throw ValidationError("duplicate pair_id " + p.pair_id);
  }
  AnnotationTask task{content_hash(kind, pairs), kind, pairs};

  std::lock_guard lock(mu_);
  if (auto it = tasks_.find(task.task_id); it != tasks_.end()) return it->second.task;
  const fs::path tdir = dir_ / "tasks" / task.task_id;
  fs::create_directories(tdir);
  const fs::path tmp = tdir / "task.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << task.to_json().dump() << '\n';
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, tdir / "task.json");
  TaskState st;
  st.task = task;
  for (std::size_t i = 0; i < pairs.size(); ++i) st.pair_index[pairs[i].pair_id] = i;
  tasks_.emplace(task.task_id, std::move(st));
  return task;
}

const AnnotationStore::TaskState& AnnotationStore::state(const std::string& task_id) const {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw NotFound("unknown task " + task_id);
  return it->second;
}

AnnotationTask AnnotationStore::task(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  return state(task_id).task;
}

std::vector<std::string> AnnotationStore::task_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, st] : tasks_) ids.push_back(id);
  return ids;
}

void AnnotationStore::append(TaskState& st, const std::vector<json>& entries) {
  std::string bytes;
  for (const auto& e : entries) bytes += e.dump() + "\n";
  const fs::path log = dir_ / "tasks" / st.task.task_id / "log.jsonl";
  const int fd = ::open(log.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open " + log.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string err = std::strerror(errno);
      ::close(fd);
      throw Error("append to " + log.string() + " failed: " + err);
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  st.log.insert(st.log.end(), entries.begin(), entries.end());
}

void AnnotationStore::validate(const TaskState& st, const RatingRecord& r) const {
  if (st.task.kind != TaskKind::quality_rating)
    throw ValidationError("task " + st.task.task_id + " does not take ratings");
  if (r.rater_id.empty()) throw ValidationError("rater_id must not be empty");
  if (!st.pair_index.count(r.pair_id)) throw NotFound("unknown pair " + r.pair_id);
  if (r.score < 1 || r.score > 5)
    throw ValidationError("score must be between 1 and 5, got " + std::to_string(r.score));
}

void AnnotationStore::submit_rating(const std::string& task_id, RatingRecord record) {
  submit_ratings(task_id, {std::move(record)});
}

void AnnotationStore::submit_ratings(const std::string& task_id, std::vector<RatingRecord> records) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw NotFound("unknown task " + task_id);
  std::vector<json> entries;
  for (auto& r : records) {
    validate(it->second, r);
    if (r.timestamp.empty()) r.timestamp = utc_now();
    entries.push_back({{"type", "rating"},
                       {"rater_id", r.rater_id},
                       {"pair_id", r.pair_id},
                       {"metric", to_string(r.metric)},
                       {"score", r.score},
                       {"timestamp", r.timestamp}});
  }
  append(it->second, entries);
}

void AnnotationStore::submit_edit_label(const std::string& task_id, const EditLabel& label) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw NotFound("unknown task " + task_id);
  const TaskState& st = it->second;
  if (st.task.kind != TaskKind::edit_classification)
    throw ValidationError("task " + task_id + " does not take edit labels");
  if (label.rater_id.empty()) throw ValidationError("rater_id must not be empty");
  if (!st.pair_index.count(label.pair_id)) throw NotFound("unknown pair " + label.pair_id);
  append(it->second, {{{"type", "edit_label"},
                       {"rater_id", label.rater_id},
                       {"pair_id", label.pair_id},
                       {"category", to_string(label.category)},
                       {"timestamp", utc_now()}}});
}

namespace {

template <class F>
void for_latest(const std::vector<json>& log, const char* type, F&& f) {
  std::map<std::string, std::size_t> slot;
  std::vector<const json*> latest;
  for (const auto& e : log) {
    if (e.value("type", "") != type) continue;
    const std::string key = rating_key(e);
    if (auto it = slot.find(key); it != slot.end()) {
      latest[it->second] = &e;
    } else {
      slot.emplace(key, latest.size());
      latest.push_back(&e);
    }
  }
  for (const json* e : latest) f(*e);
}

}  // namespace

std::vector<RatingRecord> AnnotationStore::ratings(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  std::vector<RatingRecord> out;
  for_latest(state(task_id).log, "rating", [&](const json& e) {
    out.push_back({e.at("rater_id").get<std::string>(), e.at("pair_id").get<std::string>(),
                   parse_rating_metric(e.at("metric").get<std::string>()), e.at("score").get<int>(),
                   e.value("timestamp", "")});
  });
  return out;
}

std::vector<EditLabel> AnnotationStore::edit_labels(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  std::vector<EditLabel> out;
  for_latest(state(task_id).log, "edit_label", [&](const json& e) {
    out.push_back({e.at("pair_id").get<std::string>(), e.at("rater_id").get<std::string>(),
                   parse_edit_category(e.at("category").get<std::string>())});
  });
  return out;
}

NextItem AnnotationStore::next_item(const std::string& task_id, const std::string& rater_id) const {
  std::vector<std::size_t> responses;
  AnnotationTask task;
  {
    std::lock_guard lock(mu_);
    const TaskState& st = state(task_id);
    task = st.task;
    responses.assign(task.pairs.size(), 0);
    const char* type = task.kind == TaskKind::quality_rating ? "rating" : "edit_label";
    for_latest(st.log, type, [&](const json& e) {
      if (e.at("rater_id").get<std::string>() != rater_id) return;
      ++responses[st.pair_index.at(e.at("pair_id").get<std::string>())];
    });
  }
  const std::size_t required = task.kind == TaskKind::quality_rating ? std::size(kRatingMetrics) : 1;
  NextItem next;
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (responses[i] >= required) continue;
    ++next.remaining;
    if (!first) first = i;
  }
  if (!first) {
    next.done = true;
    return next;
  }
  next.index = *first;
  next.pair = task.pairs[*first];
  return next;
}

json AnnotationStore::agreement_report(const std::string& task_id) const {
  const AnnotationTask t = task(task_id);
  json report = {{"task_id", t.task_id}, {"kind", to_string(t.kind)}};

  if (t.kind == TaskKind::edit_classification) {
    const auto labels = edit_labels(task_id);
    std::map<std::string, std::size_t> per_pair;
    for (const auto& l : labels) ++per_pair[l.pair_id];
    json pairs = json::array();
    for (const auto& p : t.pairs) pairs.push_back({{"pair_id", p.pair_id}, {"labels", per_pair[p.pair_id]}});
    report["distribution"] = edit_distribution(labels).to_json();
    report["pairs"] = std::move(pairs);
    return report;
  }

  const auto records = ratings(task_id);
  std::set<std::string> rater_set;
  for (const auto& r : records) rater_set.insert(r.rater_id);
  const std::vector<std::string> raters(rater_set.begin(), rater_set.end());
  std::map<std::string, std::size_t> rater_col;
  for (std::size_t i = 0; i < raters.size(); ++i) rater_col[raters[i]] = i;
  std::map<std::string, std::size_t> pair_row;
  for (std::size_t i = 0; i < t.pairs.size(); ++i) pair_row[t.pairs[i].pair_id] = i;

  json metrics_json = json::object();
  std::vector<double> alphas;
  for (RatingMetric m : kRatingMetrics) {
    metrics::RatingMatrix matrix(t.pairs.size(), std::vector<std::optional<double>>(raters.size()));
    std::vector<double> scores;
    for (const auto& r : records) {
      if (r.metric != m) continue;
      matrix[pair_row.at(r.pair_id)][rater_col.at(r.rater_id)] = r.score;
      scores.push_back(r.score);
    }
    json entry = {{"n", scores.size()}};
    if (!scores.empty()) {
      const metrics::Summary s = metrics::describe(scores);
      entry["mean"] = s.mean;
      entry["std"] = s.std;
    }
    if (metrics::pairable_items(matrix) >= 2) {
      const double alpha = metrics::krippendorff_alpha(matrix);
      entry["alpha"] = alpha;
      alphas.push_back(alpha);
    } else {
      entry["alpha"] = nullptr;
    }
    metrics_json[std::string(to_string(m))] = std::move(entry);
  }
  report["metrics"] = std::move(metrics_json);
  if (alphas.size() == std::size(kRatingMetrics)) {
    double sum = 0.0;
    for (double a : alphas) sum += a;
    report["averaged_alpha"] = sum / static_cast<double>(alphas.size());
  } else {
    report["averaged_alpha"] = nullptr;
  }
  report["raters"] = raters;

  json pairs = json::array();
  for (const auto& p : t.pairs) {
    json counts = json::object();
    for (RatingMetric m : kRatingMetrics) counts[std::string(to_string(m))] = 0;
    for (const auto& r : records)
      if (r.pair_id == p.pair_id) counts[std::string(to_string(r.metric))] = counts[std::string(to_string(r.metric))].get<int>() + 1;
    pairs.push_back({{"pair_id", p.pair_id}, {"ratings", std::move(counts)}});
  }
  report["pairs"] = std::move(pairs);
  return report;
}

}  // namespace splitqa
