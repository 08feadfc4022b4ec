#include "splitqa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "splitqa/error.hpp"
#include "splitqa/jsonl.hpp"

namespace splitqa {

using nlohmann::json;

std::size_t BucketSpec::bucket_of(std::size_t wc) const {
  if (wc < cuts[0]) return 0;
  if (wc < cuts[1]) return 1;
  if (wc < cuts[2]) return 2;
  return 3;
}

std::string BucketSpec::range_label(std::size_t bucket) const {
  switch (bucket) {
    case 0: return "[" + std::to_string(min) + "," + std::to_string(cuts[0]) + ")";
    case 1: return "[" + std::to_string(cuts[0]) + "," + std::to_string(cuts[1]) + ")";
    case 2: return "[" + std::to_string(cuts[1]) + "," + std::to_string(cuts[2]) + ")";
    default: return "[" + std::to_string(cuts[2]) + "," + std::to_string(max) + "]";
  }
}

BucketAssignment bucketize_by_length(const std::vector<std::size_t>& word_counts) {
  if (word_counts.size() < 4) throw ValidationError("bucketing needs at least four records");
  std::vector<std::size_t> sorted = word_counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  auto nearest_rank = [&](std::size_t pct) {
    const std::size_t rank = (pct * n + 99) / 100;  // ceil(pct/100 * n)
    return sorted[std::max<std::size_t>(rank, 1) - 1];
  };
  BucketAssignment out;
  out.spec.cuts = {nearest_rank(25), nearest_rank(50), nearest_rank(75)};
  out.spec.min = sorted.front();
  out.spec.max = sorted.back();
  out.bucket.reserve(n);
  for (std::size_t wc : word_counts) {
    const std::size_t b = out.spec.bucket_of(wc);
    out.bucket.push_back(b);
    ++out.sizes[b];
  }
  return out;
}

std::vector<BucketStats> bucket_metric_stats(const BucketAssignment& assignment,
                                             const std::vector<metrics::TransferScores>& scores) {
  if (scores.size() != assignment.bucket.size())
    throw ValidationError("every bucketed record needs metric values");
  std::array<std::vector<metrics::TransferScores>, 4> grouped;
  for (std::size_t i = 0; i < scores.size(); ++i) grouped[assignment.bucket[i]].push_back(scores[i]);
  std::vector<BucketStats> out;
  for (std::size_t b = 0; b < 4; ++b) {
    const metrics::MetricReport r = metrics::summarize(grouped[b]);
    out.push_back({assignment.spec.range_label(b), r.n, r.bleu, r.sari, r.fkgl_original,
                   r.fkgl_transferred});
  }
  return out;
}

TransferAnalysis analyze_transfer(const std::vector<std::size_t>& word_counts,
                                  const std::vector<metrics::TransferScores>& scores) {
  TransferAnalysis a;
  a.assignment = bucketize_by_length(word_counts);
  a.buckets = bucket_metric_stats(a.assignment, scores);
  a.summary = metrics::summarize(scores);
  return a;
}

json TransferAnalysis::to_json() const {
  json buckets_json = json::array();
  for (const auto& b : buckets) {
    buckets_json.push_back({{"range", b.range},
                            {"n", b.n},
                            {"bleu", metrics::summary_json(b.bleu)},
                            {"sari", metrics::summary_json(b.sari)},
                            {"fkgl_original", metrics::summary_json(b.fkgl_original)},
                            {"fkgl_transferred", metrics::summary_json(b.fkgl_transferred)}});
  }
  const auto& spec = assignment.spec;
  return json{{"buckets", std::move(buckets_json)},
              {"cut_points", {spec.cuts[0], spec.cuts[1], spec.cuts[2]}},
              {"min_words", spec.min},
              {"max_words", spec.max},
              {"summary", summary.to_json()}};
}

namespace {

std::string cell(const std::optional<metrics::Summary>& s) {
  if (!s) return "-";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f +/- %.2f", s->mean, s->std);
  return buf;
}

}  // namespace

std::string TransferAnalysis::to_table() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %6s  %-18s %-18s %-18s %-18s\n", "words", "n", "BLEU",
                "SARI", "FKGL(orig)", "FKGL(trans)");
  os << line;
  for (const auto& b : buckets) {
    std::snprintf(line, sizeof line, "%-12s %6zu  %-18s %-18s %-18s %-18s\n", b.range.c_str(), b.n,
                  cell(b.bleu).c_str(), cell(b.sari).c_str(), cell(b.fkgl_original).c_str(),
                  cell(b.fkgl_transferred).c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "%-12s %6zu  %-18s %-18s %-18s %-18s\n", "all", summary.n,
                cell(summary.bleu).c_str(), cell(summary.sari).c_str(),
                cell(summary.fkgl_original).c_str(), cell(summary.fkgl_transferred).c_str());
  os << line;
  return os.str();
}

namespace {

// Unbiased draw in [0, bound) from the standard-defined mt19937_64 sequence,
// so samples match across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % bound;
  }
}

}  // namespace

std::vector<SampledPair> sample_pairs(const std::vector<TransferRecord>& records, std::size_t n,
                                      std::uint64_t seed) {
  if (n > records.size())
    throw ValidationError("cannot sample " + std::to_string(n) + " pairs from " +
                          std::to_string(records.size()) + " records");
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<SampledPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[idx[i]];
    out.push_back({r.key(), r.original, r.joined_candidate()});
  }
  return out;
}

std::string_view to_string(EditCategory c) {
  switch (c) {
    case EditCategory::inter_event: return "inter_event";
    case EditCategory::intra_event_success: return "intra_event_success";
    case EditCategory::intra_event_failure: return "intra_event_failure";
  }
  return "inter_event";
}

EditCategory parse_edit_category(std::string_view text) {
  for (auto c : {EditCategory::inter_event, EditCategory::intra_event_success,
                 EditCategory::intra_event_failure})
    if (to_string(c) == text) return c;
  throw ValidationError("unknown edit category '" + std::string(text) + "'");
}

EditDistribution edit_distribution(const std::vector<EditLabel>& labels) {
  std::map<std::string, std::map<std::string, EditCategory>> by_pair;
  for (const auto& l : labels) by_pair[l.pair_id][l.rater_id] = l.category;

  EditDistribution d;
  for (auto c : {EditCategory::inter_event, EditCategory::intra_event_success,
                 EditCategory::intra_event_failure})
    d.counts[c] = 0;
  for (const auto& [pair, votes] : by_pair) {
    std::map<EditCategory, std::size_t> tally;
    for (const auto& [rater, c] : votes) ++tally[c];
    std::size_t best = 0;
    std::size_t at_best = 0;
    EditCategory winner{};
    for (const auto& [c, k] : tally) {
      if (k > best) {
        best = k;
        at_best = 1;
        winner = c;
      } else if (k == best) {
        ++at_best;
      }
    }
    if (at_best == 1) {
      ++d.counts[winner];
      ++d.resolved;
    } else {
      ++d.unresolved;
    }
  }
  for (const auto& [c, k] : d.counts)
    d.proportions[c] = d.resolved == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(d.resolved);
  return d;
}

json EditDistribution::to_json() const {
  json cats = json::object();
  for (const auto& [c, k] : counts)
    cats[std::string(to_string(c))] = {{"count", k}, {"proportion", jsonl::round6(proportions.at(c))}};
  return json{{"categories", std::move(cats)}, {"resolved", resolved}, {"unresolved", unresolved}};
}

}  // namespace splitqa
