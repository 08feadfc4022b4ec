#include "splitqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "splitqa/error.hpp"
#include "splitqa/jsonl.hpp"
#include "splitqa/segmentation.hpp"
#include "splitqa/utf8.hpp"

namespace splitqa::metrics {

using nlohmann::json;

Tokens tokens_of(std::string_view text) {
  Tokens out;
  for (auto& t : tokenize_words(text)) out.push_back(std::move(t.text));
  return out;
}

namespace {

using NgramCounts = std::map<std::string, long>;

NgramCounts ngram_counts(const Tokens& tokens, int n) {
  NgramCounts counts;
  const auto len = static_cast<long>(tokens.size());
  for (long i = 0; i + n <= len; ++i) {
    std::string key;
    for (long k = i; k < i + n; ++k) {
      if (k > i) key.push_back('\x1f');
      key += tokens[static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

long total(const NgramCounts& c) {
  long t = 0;
  for (const auto& [k, v] : c) t += v;
  return t;
}

// Sum over keys of min(a[k], b[k]).
long overlap(const NgramCounts& a, const NgramCounts& b) {
  long t = 0;
  for (const auto& [k, v] : a)
    if (auto it = b.find(k); it != b.end()) t += std::min(v, it->second);
  return t;
}

NgramCounts difference(const NgramCounts& a, const NgramCounts& b) {
  NgramCounts out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    const long d = v - (it == b.end() ? 0 : it->second);
    if (d > 0) out[k] = d;
  }
  return out;
}

NgramCounts intersection(const NgramCounts& a, const NgramCounts& b) {
  NgramCounts out;
  for (const auto& [k, v] : a)
    if (auto it = b.find(k); it != b.end()) out[k] = std::min(v, it->second);
  return out;
}

double ratio(long num, long den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

double sentence_bleu(const Tokens& candidate, const Tokens& reference, int max_n) {
  if (reference.empty()) throw ValidationError("BLEU reference is empty");
  if (max_n < 1) throw ValidationError("BLEU max_n must be positive");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts cand = ngram_counts(candidate, n);
    const long matched = overlap(cand, ngram_counts(reference, n));
    const long possible = total(cand);
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(possible);
    } else {
      p = static_cast<double>(matched + 1) / static_cast<double>(possible + 1);
    }
    log_sum += std::log(p) / max_n;
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(100.0 * bp * std::exp(log_sum), 0.0, 100.0);
}

SariBreakdown sari_breakdown(const Tokens& input, const Tokens& output,
                             const std::vector<Tokens>& references, int max_n) {
  if (input.empty()) throw ValidationError("SARI input is empty");
  if (references.empty()) throw ValidationError("SARI needs at least one reference");
  if (max_n < 1) throw ValidationError("SARI max_n must be positive");
  SariBreakdown out;
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts in = ngram_counts(input, n);
    const NgramCounts sys = ngram_counts(output, n);
    NgramCounts ref;
    for (const auto& r : references)
      for (const auto& [k, v] : ngram_counts(r, n)) ref[k] = std::max(ref[k], v);

    const NgramCounts add_sys = difference(sys, in);
    const NgramCounts add_ref = difference(ref, in);
    const long add_good = overlap(add_sys, add_ref);
    out.add_f1 += f1(ratio(add_good, total(add_sys)), ratio(add_good, total(add_ref)));

    const NgramCounts keep_sys = intersection(in, sys);
    const NgramCounts keep_ref = intersection(in, ref);
    const long keep_good = overlap(keep_sys, keep_ref);
    out.keep_f1 += f1(ratio(keep_good, total(keep_sys)), ratio(keep_good, total(keep_ref)));

    const NgramCounts del_sys = difference(in, sys);
    const NgramCounts del_ref = difference(in, ref);
    out.delete_precision += ratio(overlap(del_sys, del_ref), total(del_sys));
  }
  out.add_f1 /= max_n;
  out.keep_f1 /= max_n;
  out.delete_precision /= max_n;
  out.score = 100.0 * (out.add_f1 + out.keep_f1 + out.delete_precision) / 3.0;
  return out;
}

double sari(const Tokens& input, const Tokens& output, const std::vector<Tokens>& references,
            int max_n) {
  return sari_breakdown(input, output, references, max_n).score;
}

int count_syllables(std::string_view word) {
  std::string letters;
  for (char32_t c : utf8::decode(word)) {
    if (!utf8::is_letter(c)) continue;
    const char32_t f = utf8::fold(c);
    letters.push_back(f < 0x80 ? static_cast<char>(f) : '#');
  }
  if (letters.empty()) throw ValidationError("no letters in '" + std::string(word) + "'");
  auto vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  int groups = 0;
  bool in_group = false;
  for (char c : letters) {
    if (vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  const std::size_t n = letters.size();
  if (n >= 2 && letters[n - 1] == 'e' && !vowel(letters[n - 2])) {
    const bool consonant_le = n >= 3 && letters[n - 2] == 'l' && !vowel(letters[n - 3]);
    if (!consonant_le) --groups;
  }
  return std::max(groups, 1);
}

namespace {

struct ReadabilityCounts {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t syllables = 0;

  void add(std::string_view text) {
    const auto spans = segment_sentences("", text);
    sentences += std::max<std::size_t>(spans.size(), 1);
    for (const auto& t : tokenize_words(text)) {
      if (!t.is_word) continue;
      ++words;
      const auto cps = utf8::decode(t.text);
      const bool has_letter = std::any_of(cps.begin(), cps.end(), utf8::is_letter);
      syllables += has_letter ? static_cast<std::size_t>(count_syllables(t.text)) : 1;
    }
  }

  double grade() const {
    if (words == 0) throw ValidationError("FKGL needs at least one word");
    return 0.39 * (static_cast<double>(words) / static_cast<double>(sentences)) +
           11.8 * (static_cast<double>(syllables) / static_cast<double>(words)) - 15.59;
  }
};

}  // namespace

double fkgl(std::string_view text) {
  ReadabilityCounts counts;
  counts.add(text);
  return counts.grade();
}

std::string squad_normalize(std::string_view text) {
  std::u32string cps = utf8::fold(utf8::decode(text));
  std::u32string no_punct;
  for (char32_t c : cps)
    if (!(c < 0x80 && utf8::is_punct(c))) no_punct.push_back(c);

  auto word_char = [](char32_t c) { return utf8::is_letter(c) || utf8::is_digit(c) || c == '_'; };
  std::u32string no_articles;
  for (std::size_t i = 0; i < no_punct.size();) {
    if (!word_char(no_punct[i])) {
      no_articles.push_back(no_punct[i++]);
      continue;
    }
    std::size_t e = i;
    while (e < no_punct.size() && word_char(no_punct[e])) ++e;
    const std::u32string_view w = std::u32string_view(no_punct).substr(i, e - i);
    if (w == U"a" || w == U"an" || w == U"the")
      no_articles.push_back(' ');
    else
      no_articles.append(w);
    i = e;
  }

  std::string out;
  std::u32string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += utf8::encode(word);
    word.clear();
  };
  for (char32_t c : no_articles) {
    if (utf8::is_space(c))
      flush();
    else
      word.push_back(c);
  }
  flush();
  return out;
}

namespace {

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t e = s.find(' ', i);
    if (e == std::string::npos) e = s.size();
    if (e > i) out.push_back(s.substr(i, e - i));
    i = e + 1;
  }
  return out;
}

double token_f1(const std::string& pred, const std::string& gold) {
  const auto p = split_spaces(pred);
  const auto g = split_spaces(gold);
  if (p.empty() || g.empty()) return p == g ? 1.0 : 0.0;
  std::map<std::string, long> gold_counts;
  for (const auto& t : g) ++gold_counts[t];
  long same = 0;
  for (const auto& t : p) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return 0.0;
  const double precision = static_cast<double>(same) / static_cast<double>(p.size());
  const double recall = static_cast<double>(same) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

int squad_em(std::string_view prediction, const std::vector<std::string>& golds) {
  const std::string p = squad_normalize(prediction);
  for (const auto& g : golds)
    if (squad_normalize(g) == p) return 1;
  return 0;
}

double squad_f1(std::string_view prediction, const std::vector<std::string>& golds) {
  const std::string p = squad_normalize(prediction);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, token_f1(p, squad_normalize(g)));
  return best;
}

std::size_t pairable_items(const RatingMatrix& matrix) {
  std::size_t n = 0;
  for (const auto& row : matrix) {
    const auto m = std::count_if(row.begin(), row.end(), [](const auto& v) { return v.has_value(); });
    if (m >= 2) ++n;
  }
  return n;
}

double krippendorff_alpha(const RatingMatrix& matrix) {
  if (pairable_items(matrix) < 2)
    throw ValidationError("alpha needs at least two items with two or more ratings");
  // coincidences[c][k]: pairs of values (c, k) within items.
  std::map<double, std::map<double, double>> coincidences;
  for (const auto& row : matrix) {
    std::vector<double> values;
    for (const auto& v : row)
      if (v) values.push_back(*v);
    if (values.size() < 2) continue;
    const double weight = 1.0 / static_cast<double>(values.size() - 1);
    for (std::size_t i = 0; i < values.size(); ++i)
      for (std::size_t j = 0; j < values.size(); ++j)
        if (i != j) coincidences[values[i]][values[j]] += weight;
  }
  std::map<double, double> marginals;
  double n = 0.0;
  for (const auto& [c, row] : coincidences)
    for (const auto& [k, o] : row) {
      marginals[c] += o;
      n += o;
    }
  double observed = 0.0;
  for (const auto& [c, row] : coincidences)
    for (const auto& [k, o] : row) observed += o * (c - k) * (c - k);
  observed /= n;
  double expected = 0.0;
  for (const auto& [c, nc] : marginals)
    for (const auto& [k, nk] : marginals) expected += nc * nk * (c - k) * (c - k);
  expected /= n * (n - 1.0);
  if (expected == 0.0) return 1.0;
  return 1.0 - observed / expected;
}

Summary describe(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("describe needs at least one value");
  Summary s;
  s.n = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

TransferScores score_transfer(std::string_view original, std::string_view transferred) {
  return score_transfer(original, transferred, {});
}

TransferScores score_transfer(std::string_view original, std::string_view transferred,
                              const std::vector<std::string>& references) {
  const Tokens orig = tokens_of(original);
  const Tokens trans = tokens_of(transferred);
  std::vector<Tokens> refs;
  for (const auto& r : references) refs.push_back(tokens_of(r));
  if (refs.empty()) refs.push_back(orig);
  TransferScores s;
  s.bleu = sentence_bleu(trans, orig);
  s.sari = sari(orig, trans, refs);
  s.fkgl_original = fkgl(original);
  s.fkgl_transferred = fkgl(transferred);
  return s;
}

nlohmann::json summary_json(const std::optional<Summary>& summary) {
  if (!summary) return json{{"n", 0}};
  return json{{"mean", jsonl::round6(summary->mean)},
              {"std", jsonl::round6(summary->std)},
              {"n", summary->n}};
}

json MetricReport::to_json() const {
  return json{{"n", n},
              {"bleu", summary_json(bleu)},
              {"sari", summary_json(sari)},
              {"fkgl_original", summary_json(fkgl_original)},
              {"fkgl_transferred", summary_json(fkgl_transferred)}};
}

MetricReport summarize(const std::vector<TransferScores>& scores) {
  MetricReport r;
  r.n = scores.size();
  if (scores.empty()) return r;
  std::vector<double> b, s, fo, ft;
  for (const auto& x : scores) {
    b.push_back(x.bleu);
    s.push_back(x.sari);
    fo.push_back(x.fkgl_original);
    ft.push_back(x.fkgl_transferred);
  }
  r.bleu = describe(b);
  r.sari = describe(s);
  r.fkgl_original = describe(fo);
  r.fkgl_transferred = describe(ft);
  return r;
}

}  // namespace splitqa::metrics
