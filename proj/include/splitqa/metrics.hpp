#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace splitqa::metrics {

using Tokens = std::vector<std::string>;

// Word tokens as used by every metric here (punctuation tokens included).
Tokens tokens_of(std::string_view text);

// Sentence-level BLEU in [0, 100] with the brevity penalty and add-one
// smoothing on the 2..max_n precisions. Zero unigram overlap scores 0.
double sentence_bleu(const Tokens& candidate, const Tokens& reference, int max_n = 4);

struct SariBreakdown {
  double add_f1 = 0.0;
  double keep_f1 = 0.0;
  double delete_precision = 0.0;
  double score = 0.0;  // 100 * mean of the three
};

// SARI over n-gram multisets, n = 1..max_n. References are merged by
// multiset union (max count). A ratio whose numerator and denominator are
// both empty counts as 1.
SariBreakdown sari_breakdown(const Tokens& input, const Tokens& output,
                             const std::vector<Tokens>& references, int max_n = 4);
double sari(const Tokens& input, const Tokens& output, const std::vector<Tokens>& references,
            int max_n = 4);

// Vowel groups (a e i o u y), minus a silent final "e" that is not a "le"
// after a consonant; at least 1. Throws ValidationError without letters.
int count_syllables(std::string_view word);

// Flesch-Kincaid grade level. Word tokens without letters count one syllable.
double fkgl(std::string_view text);

// SQuAD answer normalization.
std::string squad_normalize(std::string_view text);
int squad_em(std::string_view prediction, const std::vector<std::string>& golds);
double squad_f1(std::string_view prediction, const std::vector<std::string>& golds);

// items x raters, empty cells allowed.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

// Number of items carrying at least two ratings.
std::size_t pairable_items(const RatingMatrix& matrix);

// Krippendorff's alpha for interval data via the coincidence matrix. Items
// with fewer than two ratings are ignored. Throws ValidationError when fewer
// than two items are pairable. Zero expected disagreement gives 1.
double krippendorff_alpha(const RatingMatrix& matrix);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for n == 1
  std::size_t n = 0;
};

Summary describe(const std::vector<double>& values);

// Sentence-level scores of one transfer, with the original as reference.
struct TransferScores {
  double bleu = 0.0;
  double sari = 0.0;
  double fkgl_original = 0.0;
  double fkgl_transferred = 0.0;
};

TransferScores score_transfer(std::string_view original, std::string_view transferred);
// SARI against explicit references; an empty list means {original}.
TransferScores score_transfer(std::string_view original, std::string_view transferred,
                              const std::vector<std::string>& references);

struct MetricReport {
  std::size_t n = 0;
  std::optional<Summary> bleu, sari, fkgl_original, fkgl_transferred;

  nlohmann::json to_json() const;
};

MetricReport summarize(const std::vector<TransferScores>& scores);

nlohmann::json summary_json(const std::optional<Summary>& summary);

}  // namespace splitqa::metrics
