#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "splitqa/corpus.hpp"
#include "splitqa/segmentation.hpp"
#include "splitqa/simplifier.hpp"

namespace splitqa {

struct SentenceProvenance {
  std::size_t index = 0;
  bool replaced = false;
  // Sentence count of the candidate when replaced.
  std::size_t candidate_sentences = 0;

  bool operator==(const SentenceProvenance&) const = default;
};

struct RebuiltContext {
  std::string context_id;
  std::string text;
  std::vector<SentenceProvenance> provenance;
};

// Removes split sentinels and squeezes the spaces they leave behind.
std::string strip_sentinels(std::string_view text);

// Original sentences joined by single spaces, each replaced by its accepted
// candidate when one exists. Throws ValidationError for an accepted record
// whose sentence index is not among `spans`.
RebuiltContext rebuild_context(std::string_view context_id, const std::vector<SentenceSpan>& spans,
                               const std::vector<TransferRecord>& accepted);

enum class MatchKind { exact, case_insensitive, unmatched };

std::string_view to_string(MatchKind kind);

struct OffsetResult {
  std::optional<std::size_t> offset;
  MatchKind kind = MatchKind::unmatched;
};

// Leftmost exact occurrence anywhere, else leftmost case-folded occurrence.
// Offsets count code points.
OffsetResult find_offset(std::string_view context, std::string_view answer);

struct DroppedQuestion {
  std::string id;
  std::string reason;  // "unmatched_answer" or "invalid_source_offset"
};

struct FinalizedDatasets {
  Corpus simple;
  Corpus original;
  std::vector<DroppedQuestion> drops;
  std::size_t questions_in = 0;
  std::size_t questions_retained = 0;
  std::size_t case_insensitive_matches = 0;
};

// Builds the simplified corpus and the paired original corpus. Only the first
// answer of each question is carried over; a question whose answer cannot be
// located in either context is dropped from both outputs. Throws
// ValidationError when a source context has no rebuilt counterpart.
FinalizedDatasets finalize_datasets(const Corpus& source,
                                    const std::map<std::string, RebuiltContext>& rebuilt);

nlohmann::json to_json(const DroppedQuestion& drop);

}  // namespace splitqa
