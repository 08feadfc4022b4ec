#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "splitqa/channel.hpp"
#include "splitqa/segmentation.hpp"

namespace splitqa {

enum class RecordStatus { pending, scored, accepted, rejected };

enum class RejectReason {
  none,
  perplexity_out_of_range,
  original_too_short,
  redundant,
  backend_failure,
  numeric_loss,
};

std::string_view to_string(RecordStatus status);
std::string_view to_string(RejectReason reason);
RecordStatus parse_status(std::string_view text);
RejectReason parse_reason(std::string_view text);

// One sentence on its way through transfer and thresholding.
struct TransferRecord {
  std::string context_id;
  std::size_t sentence_index = 0;
  std::string original;
  std::size_t original_word_count = 0;
  std::optional<std::vector<std::string>> candidate;
  std::optional<double> perplexity;
  RecordStatus status = RecordStatus::pending;
  RejectReason reason = RejectReason::none;
  // Backend or scorer error text for backend_failure rejections.
  std::string error;

  // Request id on the wire: "<context_id>#<sentence_index>".
  std::string key() const;
  std::string joined_candidate() const;
  void reject(RejectReason why, std::string detail = {});

  bool operator==(const TransferRecord&) const = default;
};

nlohmann::json to_json(const TransferRecord& record);
TransferRecord record_from_json(const nlohmann::json& j);

std::vector<TransferRecord> make_records(const std::vector<SentenceSpan>& spans);

// Accepts either a list of sentences or the single-string form with the
// `<::::>` sentinel; sentinels inside list items are split as well. Items are
// trimmed and empty pieces dropped.
std::vector<std::string> normalize_candidate(const nlohmann::json& simplified);

inline constexpr std::string_view kSplitSentinel = "<::::>";

struct SimplifyResult {
  std::vector<TransferRecord> records;
  bool transport_failed = false;
  std::string transport_error;
};

// Sends every pending record to `backend`, at most `in_flight_limit` at a
// time. Output order equals input order. An error response rejects only its
// record; a lost transport rejects every record still unanswered, which a
// later call can retry. `on_answered` sees each record as its response lands.
SimplifyResult simplify_batch(std::vector<TransferRecord> records, Channel& backend,
                              std::size_t in_flight_limit,
                              const std::function<void(const TransferRecord&)>& on_answered = {});

// Deterministic split at the first ", and " when both sides keep at least
// three word tokens.
std::vector<std::string> rule_split(std::string_view sentence);

struct NumericCheck {
  bool pass = true;
  std::vector<std::string> missing;
};

// Every numeric token of `original` must survive, with multiplicity.
NumericCheck check_numeric_preservation(std::string_view original,
                                        const std::vector<std::string>& candidate);

// Builtin backends speaking the wire protocol in-process.
std::unique_ptr<Channel> make_identity_backend();
std::unique_ptr<Channel> make_rule_split_backend();

// Builtin name ("builtin:identity", "builtin:rule_split") or a transport spec.
std::unique_ptr<Channel> open_backend(const std::string& spec, std::size_t in_flight_limit);

}  // namespace splitqa
