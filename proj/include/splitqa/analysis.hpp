#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "splitqa/metrics.hpp"
#include "splitqa/simplifier.hpp"

namespace splitqa {

// Four buckets on original word count: [min,c0) [c0,c1) [c1,c2) [c2,max].
struct BucketSpec {
  std::array<std::size_t, 3> cuts{};
  std::size_t min = 0;
  std::size_t max = 0;

  // Values equal to a cut point fall in the higher bucket.
  std::size_t bucket_of(std::size_t word_count) const;
  std::string range_label(std::size_t bucket) const;
};

struct BucketAssignment {
  BucketSpec spec;
  std::vector<std::size_t> bucket;  // per record
  std::array<std::size_t, 4> sizes{};
};

// Cut points are the nearest-rank 25th/50th/75th percentiles. Throws
// ValidationError for fewer than four records.
BucketAssignment bucketize_by_length(const std::vector<std::size_t>& word_counts);

struct BucketStats {
  std::string range;
  std::size_t n = 0;
  std::optional<metrics::Summary> bleu, sari, fkgl_original, fkgl_transferred;
};

std::vector<BucketStats> bucket_metric_stats(const BucketAssignment& assignment,
                                             const std::vector<metrics::TransferScores>& scores);

struct TransferAnalysis {
  BucketAssignment assignment;
  std::vector<BucketStats> buckets;
  metrics::MetricReport summary;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

TransferAnalysis analyze_transfer(const std::vector<std::size_t>& word_counts,
                                  const std::vector<metrics::TransferScores>& scores);

struct SampledPair {
  std::string pair_id;
  std::string original;
  std::string candidate;

  bool operator==(const SampledPair&) const = default;
};

// Uniform sample without replacement, reproducible for a given seed. Throws
// ValidationError when n exceeds the number of records.
std::vector<SampledPair> sample_pairs(const std::vector<TransferRecord>& records, std::size_t n,
                                      std::uint64_t seed);

enum class EditCategory { inter_event, intra_event_success, intra_event_failure };

std::string_view to_string(EditCategory category);
EditCategory parse_edit_category(std::string_view text);

struct EditLabel {
  std::string pair_id;
  std::string rater_id;
  EditCategory category = EditCategory::inter_event;
};

struct EditDistribution {
  std::map<EditCategory, std::size_t> counts;
  std::map<EditCategory, double> proportions;  // over resolved pairs
  std::size_t resolved = 0;
  std::size_t unresolved = 0;

  nlohmann::json to_json() const;
};

// Majority category per pair; a tie for the top leaves the pair unresolved.
// A rater labelling the same pair twice counts once, with the later label.
EditDistribution edit_distribution(const std::vector<EditLabel>& labels);

}  // namespace splitqa
