#include "splitqa/simplifier.hpp"

#include <algorithm>
#include <unordered_map>

#include "splitqa/error.hpp"
#include "splitqa/utf8.hpp"

namespace splitqa {

using nlohmann::json;

std::string_view to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::pending: return "pending";
    case RecordStatus::scored: return "scored";
    case RecordStatus::accepted: return "accepted";
    case RecordStatus::rejected: return "rejected";
  }
  return "pending";
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::none: return "none";
    case RejectReason::perplexity_out_of_range: return "perplexity_out_of_range";
    case RejectReason::original_too_short: return "original_too_short";
    case RejectReason::redundant: return "redundant";
    case RejectReason::backend_failure: return "backend_failure";
    case RejectReason::numeric_loss: return "numeric_loss";
  }
  return "none";
}

RecordStatus parse_status(std::string_view text) {
  for (auto s : {RecordStatus::pending, RecordStatus::scored, RecordStatus::accepted,
                 RecordStatus::rejected})
    if (to_string(s) == text) return s;
  throw ParseError("/status", "unknown status '" + std::string(text) + "'");
}

RejectReason parse_reason(std::string_view text) {
  for (auto r : {RejectReason::none, RejectReason::perplexity_out_of_range,
                 RejectReason::original_too_short, RejectReason::redundant,
                 RejectReason::backend_failure, RejectReason::numeric_loss})
    if (to_string(r) == text) return r;
  throw ParseError("/reason", "unknown reason '" + std::string(text) + "'");
}

std::string TransferRecord::key() const {
  return context_id + "#" + std::to_string(sentence_index);
}

std::string TransferRecord::joined_candidate() const {
  std::string out;
  if (!candidate) return out;
  for (const auto& s : *candidate) {
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

void TransferRecord::reject(RejectReason why, std::string detail) {
  status = RecordStatus::rejected;
  reason = why;
  if (!detail.empty()) error = std::move(detail);
}

json to_json(const TransferRecord& r) {
  json j = {{"context_id", r.context_id},
            {"sentence_index", r.sentence_index},
            {"original", r.original},
            {"original_word_count", r.original_word_count},
            {"status", to_string(r.status)}};
  j["candidate"] = r.candidate ? json(*r.candidate) : json(nullptr);
  j["perplexity"] = r.perplexity ? json(*r.perplexity) : json(nullptr);
  if (r.status == RecordStatus::rejected) j["reason"] = to_string(r.reason);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

TransferRecord record_from_json(const json& j) {
  try {
    TransferRecord r;
    r.context_id = j.at("context_id").get<std::string>();
    r.sentence_index = j.at("sentence_index").get<std::size_t>();
    r.original = j.at("original").get<std::string>();
    r.original_word_count = j.at("original_word_count").get<std::size_t>();
    r.status = parse_status(j.at("status").get<std::string>());
    if (auto it = j.find("candidate"); it != j.end() && !it->is_null())
      r.candidate = it->get<std::vector<std::string>>();
    if (auto it = j.find("perplexity"); it != j.end() && !it->is_null())
      r.perplexity = it->get<double>();
    if (auto it = j.find("reason"); it != j.end()) r.reason = parse_reason(it->get<std::string>());
    if (auto it = j.find("error"); it != j.end()) r.error = it->get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError("transfer record", e.what());
  }
}

std::vector<TransferRecord> make_records(const std::vector<SentenceSpan>& spans) {
  std::vector<TransferRecord> out;
  out.reserve(spans.size());
  for (const auto& s : spans) {
    TransferRecord r;
    r.context_id = s.context_id;
    r.sentence_index = s.index;
    r.original = s.text;
    r.original_word_count = word_count(s.text);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

void split_on_sentinel(const std::string& text, std::vector<std::string>& out) {
  std::size_t pos = 0;
  for (;;) {
    const std::size_t hit = text.find(kSplitSentinel, pos);
    std::string piece = utf8::trim(std::string_view(text).substr(
        pos, hit == std::string::npos ? std::string::npos : hit - pos));
    if (!piece.empty()) out.push_back(std::move(piece));
    if (hit == std::string::npos) break;
    pos = hit + kSplitSentinel.size();
  }
}

}  // namespace

std::vector<std::string> normalize_candidate(const json& simplified) {
  std::vector<std::string> out;
  if (simplified.is_string()) {
    split_on_sentinel(simplified.get<std::string>(), out);
  } else if (simplified.is_array()) {
    for (const auto& item : simplified) {
      if (!item.is_string()) throw ParseError("/simplified", "expected list of strings");
      split_on_sentinel(item.get<std::string>(), out);
    }
  } else {
    throw ParseError("/simplified", "expected string or list of strings");
  }
  return out;
}

SimplifyResult simplify_batch(std::vector<TransferRecord> records, Channel& backend,
                              std::size_t in_flight_limit,
                              const std::function<void(const TransferRecord&)>& on_answered) {
  if (in_flight_limit == 0) throw Error("in-flight limit must be at least 1");
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<json> requests;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].status != RecordStatus::pending) continue;
    const std::string id = records[i].key();
    if (!slot.emplace(id, i).second) throw ValidationError("duplicate record key " + id);
    requests.push_back({{"id", id}, {"text", records[i].original}});
  }

  std::vector<bool> answered(records.size(), false);
  const DispatchOutcome outcome =
      dispatch_windowed(backend, requests, in_flight_limit, [&](const json& resp) {
        const std::size_t i = slot.at(resp.at("id").get<std::string>());
        TransferRecord& rec = records[i];
        answered[i] = true;
        if (auto err = resp.find("error"); err != resp.end()) {
          rec.reject(RejectReason::backend_failure,
                     err->is_string() ? err->get<std::string>() : err->dump());
        } else {
          try {
            auto cand = normalize_candidate(resp.at("simplified"));
            if (cand.empty())
              rec.reject(RejectReason::backend_failure, "empty candidate");
            else
              rec.candidate = std::move(cand);
          } catch (const std::exception& e) {
            rec.reject(RejectReason::backend_failure, std::string("bad response: ") + e.what());
          }
        }
        if (on_answered) on_answered(rec);
      });

  SimplifyResult result;
  result.transport_failed = outcome.transport_failed;
  result.transport_error = outcome.transport_error;
  if (outcome.transport_failed) {
    for (const auto& [id, i] : slot)
      if (!answered[i]) records[i].reject(RejectReason::backend_failure, outcome.transport_error);
  }
  result.records = std::move(records);
  return result;
}

std::vector<std::string> rule_split(std::string_view sentence) {
  static constexpr std::string_view kConnective = ", and ";
  const std::size_t hit = sentence.find(kConnective);
  if (hit == std::string_view::npos) return {std::string(sentence)};
  const std::string left = utf8::trim(sentence.substr(0, hit));
  std::string right = utf8::trim(sentence.substr(hit + kConnective.size()));
  if (word_count(left) < 3 || word_count(right) < 3) return {std::string(sentence)};

  std::u32string rcps = utf8::decode(right);
  if (!rcps.empty() && rcps[0] < 0x80 && rcps[0] >= 'a' && rcps[0] <= 'z') rcps[0] -= 32;
  right = utf8::encode(rcps);
  return {left + ".", right};
}

NumericCheck check_numeric_preservation(std::string_view original,
                                        const std::vector<std::string>& candidate) {
  std::string joined;
  for (const auto& s : candidate) {
    if (!joined.empty()) joined.push_back(' ');
    joined += s;
  }
  const auto want = numeric_tokens(original);
  const auto have = numeric_tokens(joined);
  NumericCheck check;
  std::set_difference(want.begin(), want.end(), have.begin(), have.end(),
                      std::back_inserter(check.missing));
  check.pass = check.missing.empty();
  return check;
}

std::unique_ptr<Channel> make_identity_backend() {
  return std::make_unique<LocalChannel>([](const json& req) {
    return json{{"id", req.at("id")}, {"simplified", json::array({req.at("text")})}};
  });
}

std::unique_ptr<Channel> make_rule_split_backend() {
  return std::make_unique<LocalChannel>([](const json& req) {
    return json{{"id", req.at("id")},
                {"simplified", rule_split(req.at("text").get<std::string>())}};
  });
}

std::unique_ptr<Channel> open_backend(const std::string& spec, std::size_t in_flight_limit) {
  if (spec == "builtin:identity") return make_identity_backend();
  if (spec == "builtin:rule_split") return make_rule_split_backend();
  if (spec.rfind("builtin:", 0) == 0) throw Error("unknown builtin backend '" + spec + "'");
  return open_transport(spec, "/simplify", in_flight_limit);
}

}  // namespace splitqa
