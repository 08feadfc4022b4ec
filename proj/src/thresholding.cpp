#include "splitqa/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_map>

#include "splitqa/error.hpp"
#include "splitqa/jsonl.hpp"
#include "splitqa/utf8.hpp"

namespace splitqa {

using nlohmann::json;

void GateConfig::validate() const {
  if (!(perplexity_low < perplexity_high))
    throw ValidationError("perplexity_low must be below perplexity_high");
  if (min_original_words < 1) throw ValidationError("min_original_words must be at least 1");
}

std::string_view to_string(Gate gate) {
  switch (gate) {
    case Gate::perplexity: return "perplexity";
    case Gate::length: return "length";
    case Gate::redundancy: return "redundancy";
    case Gate::numeric: return "numeric";
  }
  return "perplexity";
}

std::size_t StageStats::after(Gate gate) const {
  // Gates that did not run inherit the count of the last gate before them in
  // the default order.
  std::size_t count = input_count;
  for (Gate g : kDefaultGateOrder) {
    for (std::size_t i = 0; i < order.size(); ++i)
      if (order[i] == g) count = survivors[i];
    if (g == gate) return count;
  }
  return count;
}

double StageStats::percent_after(Gate gate) const {
  if (input_count == 0) return 0.0;
  return 100.0 * static_cast<double>(after(gate)) / static_cast<double>(input_count);
}

json StageStats::to_json() const {
  json j = {{"input_count", input_count}};
  json stages = json::array();
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double pct = input_count == 0 ? 0.0 : 100.0 * survivors[i] / input_count;
    stages.push_back({{"gate", to_string(order[i])},
                      {"remaining", survivors[i]},
                      {"percent", jsonl::round6(pct)}});
  }
  j["stages"] = std::move(stages);
  for (Gate g : kDefaultGateOrder) {
    j[std::string("after_") + std::string(to_string(g))] = after(g);
    j[std::string("after_") + std::string(to_string(g)) + "_percent"] =
        jsonl::round6(percent_after(g));
  }
  return j;
}

bool perplexity_in_range(double p, const GateConfig& config) {
  return config.perplexity_low <= p && p <= config.perplexity_high;
}

bool passes_original_length(const TransferRecord& record, const GateConfig& config) {
  return record.original_word_count >= config.min_original_words;
}

bool is_redundant(const std::vector<std::string>& candidate) {
  std::vector<std::string> trimmed;
  trimmed.reserve(candidate.size());
  for (const auto& s : candidate) trimmed.push_back(utf8::trim(s));
  std::sort(trimmed.begin(), trimmed.end());
  return std::adjacent_find(trimmed.begin(), trimmed.end()) != trimmed.end();
}

bool passes_gate(Gate gate, const TransferRecord& record, const GateConfig& config) {
  if (!record.candidate) return false;
  switch (gate) {
    case Gate::perplexity:
      return record.perplexity && perplexity_in_range(*record.perplexity, config);
    case Gate::length:
      return passes_original_length(record, config);
    case Gate::redundancy:
      return !is_redundant(*record.candidate);
    case Gate::numeric:
      return !config.enforce_numeric ||
             check_numeric_preservation(record.original, *record.candidate).pass;
  }
  return false;
}

namespace {

RejectReason reason_for(Gate gate, const TransferRecord& record) {
  if (!record.candidate) return RejectReason::backend_failure;
  switch (gate) {
    case Gate::perplexity:
      return record.perplexity ? RejectReason::perplexity_out_of_range
                               : RejectReason::backend_failure;
    case Gate::length: return RejectReason::original_too_short;
    case Gate::redundancy: return RejectReason::redundant;
    case Gate::numeric: return RejectReason::numeric_loss;
  }
  return RejectReason::backend_failure;
}

void apply_score(TransferRecord& rec, const json& resp) {
  if (auto err = resp.find("error"); err != resp.end()) {
    rec.reject(RejectReason::backend_failure,
               "scorer: " + (err->is_string() ? err->get<std::string>() : err->dump()));
    return;
  }
  auto p = resp.find("perplexity");
  if (p == resp.end() || !p->is_number() || !(p->get<double>() > 0.0) ||
      !std::isfinite(p->get<double>())) {
    rec.reject(RejectReason::backend_failure, "scorer: missing or non-positive perplexity");
    return;
  }
  rec.perplexity = jsonl::round6(p->get<double>());
  rec.status = RecordStatus::scored;
}

}  // namespace

ScoreOutcome score_records(std::vector<TransferRecord>& records, Channel& scorer,
                           std::size_t in_flight_limit) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<json> requests;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.candidate || r.status == RecordStatus::rejected) continue;
    slot.emplace(r.key(), i);
    requests.push_back({{"id", r.key()}, {"text", r.joined_candidate()}});
  }
  std::vector<bool> answered(records.size(), false);
  const DispatchOutcome outcome =
      dispatch_windowed(scorer, requests, in_flight_limit, [&](const json& resp) {
        const std::size_t i = slot.at(resp.at("id").get<std::string>());
        answered[i] = true;
        apply_score(records[i], resp);
      });
  if (outcome.transport_failed) {
    for (const auto& [id, i] : slot)
      if (!answered[i])
        records[i].reject(RejectReason::backend_failure, "scorer: " + outcome.transport_error);
  }
  return {outcome.transport_failed, outcome.transport_error};
}

TransferRecord gate_perplexity(TransferRecord record, Channel& scorer, const GateConfig& config) {
  if (!record.candidate) throw ValidationError("record " + record.key() + " has no candidate");
  std::vector<TransferRecord> one{std::move(record)};
  score_records(one, scorer, 1);
  TransferRecord& r = one.front();
  if (r.status == RecordStatus::scored && !perplexity_in_range(*r.perplexity, config))
    r.reject(RejectReason::perplexity_out_of_range);
  return std::move(r);
}

ThresholdResult apply_gates(std::vector<TransferRecord> records, const GateConfig& config,
                            const std::vector<Gate>& order) {
  config.validate();
  std::vector<Gate> gates;
  for (Gate g : order)
    if (g != Gate::numeric || config.enforce_numeric) gates.push_back(g);

  ThresholdResult result;
  result.stats.input_count = records.size();
  result.stats.order = gates;
  result.stats.survivors.assign(gates.size(), 0);

  for (auto& rec : records) {
    bool alive = true;
    for (std::size_t gi = 0; gi < gates.size(); ++gi) {
      if (!passes_gate(gates[gi], rec, config)) {
        // Keep a backend error text that is already attached.
        rec.reject(reason_for(gates[gi], rec));
        alive = false;
        break;
      }
      ++result.stats.survivors[gi];
    }
    if (gates.empty() && !rec.candidate) {
      rec.reject(RejectReason::backend_failure);
      alive = false;
    }
    if (alive) {
      rec.status = RecordStatus::accepted;
      rec.reason = RejectReason::none;
      result.accepted.push_back(std::move(rec));
    } else {
      result.rejected.push_back(std::move(rec));
    }
  }
  return result;
}

ThresholdResult run_threshold_pipeline(std::vector<TransferRecord> records, Channel& scorer,
                                       const GateConfig& config, std::size_t in_flight_limit) {
  config.validate();
  score_records(records, scorer, in_flight_limit);
  return apply_gates(std::move(records), config);
}

namespace {

std::vector<std::string> lm_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_words(text)) out.push_back(utf8::fold(t.text));
  return out;
}

}  // namespace

UnigramScorer UnigramScorer::fit(std::istream& in) {
  UnigramScorer model;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : lm_tokens(line)) {
      ++model.counts_[tok];
      ++model.total_;
    }
  }
  return model;
}

UnigramScorer UnigramScorer::fit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open language-model corpus: " + path);
  return fit(in);
}

double UnigramScorer::perplexity(std::string_view text) const {
  const auto tokens = lm_tokens(text);
  if (tokens.empty()) throw ValidationError("cannot score text without tokens");
  const double denom = static_cast<double>(total_ + counts_.size() + 1);
  double bits = 0.0;
  for (const auto& tok : tokens) {
    auto it = counts_.find(tok);
    const double count = (it == counts_.end() ? 0.0 : static_cast<double>(it->second)) + 1.0;
    bits -= std::log2(count / denom);
  }
  return std::exp2(bits / static_cast<double>(tokens.size()));
}

std::unique_ptr<Channel> make_stub_scorer(std::shared_ptr<const UnigramScorer> model) {
  return std::make_unique<LocalChannel>([model](const json& req) {
    const std::string text = req.at("text").get<std::string>();
    try {
      return json{{"id", req.at("id")}, {"perplexity", model->perplexity(text)}};
    } catch (const Error& e) {
      return json{{"id", req.at("id")}, {"error", e.what()}};
    }
  });
}

std::unique_ptr<Channel> open_scorer(const std::string& spec, const std::string& stub_corpus_path,
                                     std::size_t in_flight_limit) {
  if (spec == "builtin:stub")
    return make_stub_scorer(
        std::make_shared<const UnigramScorer>(UnigramScorer::fit_file(stub_corpus_path)));
  if (spec.rfind("builtin:", 0) == 0) throw Error("unknown builtin scorer '" + spec + "'");
  return open_transport(spec, "/perplexity", in_flight_limit);
}

}  // namespace splitqa
