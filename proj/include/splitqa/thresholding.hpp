#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "splitqa/channel.hpp"
#include "splitqa/simplifier.hpp"

namespace splitqa {

struct GateConfig {
  double perplexity_low = 50.0;
  double perplexity_high = 600.0;
  std::size_t min_original_words = 5;
  bool enforce_numeric = true;

  // Throws ValidationError unless low < high and min_original_words >= 1.
  void validate() const;
};

enum class Gate { perplexity, length, redundancy, numeric };

std::string_view to_string(Gate gate);

inline constexpr std::array<Gate, 4> kDefaultGateOrder = {Gate::perplexity, Gate::length,
                                                          Gate::redundancy, Gate::numeric};

// Survivor counts after each gate, in the order the gates ran.
struct StageStats {
  std::size_t input_count = 0;
  std::vector<Gate> order;
  std::vector<std::size_t> survivors;

  // Survivors after `gate`; a gate that did not run passes everything.
  std::size_t after(Gate gate) const;
  double percent_after(Gate gate) const;
  nlohmann::json to_json() const;
};

// Pure predicates, each evaluated on its own.
bool perplexity_in_range(double perplexity, const GateConfig& config);
bool passes_original_length(const TransferRecord& record, const GateConfig& config);
// True when two candidate sentences are equal after whitespace trimming.
bool is_redundant(const std::vector<std::string>& candidate);
bool passes_gate(Gate gate, const TransferRecord& record, const GateConfig& config);

// Scores every record that has a candidate (the sentences joined by single
// spaces). Perplexities are kept to 6 significant digits. A failed or
// malformed score rejects the record with backend_failure.
struct ScoreOutcome {
  bool transport_failed = false;
  std::string transport_error;
};
ScoreOutcome score_records(std::vector<TransferRecord>& records, Channel& scorer,
                           std::size_t in_flight_limit);

// Scores one record and applies the perplexity gate to it.
TransferRecord gate_perplexity(TransferRecord record, Channel& scorer, const GateConfig& config);

struct ThresholdResult {
  std::vector<TransferRecord> accepted;
  std::vector<TransferRecord> rejected;
  StageStats stats;
};

// Applies the gates in `order` to already-scored records. Records without a
// candidate are rejected at the first gate. The numeric gate is skipped
// unless config.enforce_numeric.
ThresholdResult apply_gates(std::vector<TransferRecord> records, const GateConfig& config,
                            const std::vector<Gate>& order = {kDefaultGateOrder.begin(),
                                                              kDefaultGateOrder.end()});

// score_records followed by apply_gates in the default order.
ThresholdResult run_threshold_pipeline(std::vector<TransferRecord> records, Channel& scorer,
                                       const GateConfig& config, std::size_t in_flight_limit = 1);

// Unigram language model with add-one smoothing over lower-cased tokens;
// perplexity = 2^H with H the mean per-token cross-entropy in bits. Unseen
// tokens share one extra vocabulary slot.
class UnigramScorer {
 public:
  // One sentence per line.
  static UnigramScorer fit(std::istream& in);
  static UnigramScorer fit_file(const std::string& path);

  double perplexity(std::string_view text) const;
  std::size_t vocabulary_size() const { return counts_.size(); }
  std::size_t token_total() const { return total_; }

 private:
  std::unordered_map<std::string, std::size_t> counts_;
  std::size_t total_ = 0;
};

std::unique_ptr<Channel> make_stub_scorer(std::shared_ptr<const UnigramScorer> model);

// "builtin:stub" (fitted on `stub_corpus_path`) or a transport spec.
std::unique_ptr<Channel> open_scorer(const std::string& spec, const std::string& stub_corpus_path,
                                     std::size_t in_flight_limit);

}  // namespace splitqa
