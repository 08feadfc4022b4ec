#include "splitqa/segmentation.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "splitqa/error.hpp"
#include "splitqa/utf8.hpp"

namespace splitqa {

namespace detail {
// Generated from data/abbreviations.txt at configure time.
extern const char* const kBuiltinAbbreviations;
}  // namespace detail

namespace {

bool is_terminator(char32_t c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char32_t c) {
  switch (c) {
    case '"': case '\'': case ')': case ']': case '}':
    case 0x201D: case 0x2019: case 0x00BB: case 0x203A:
      return true;
    default:
      return false;
  }
}

bool is_initial(std::u32string_view word) {
  return word.size() == 2 && word[1] == '.' && word[0] < 0x80 && word[0] >= 'A' &&
         word[0] <= 'Z';
}

// The whitespace-delimited word ending at `dot` (inclusive), minus any
// leading punctuation such as an opening bracket or quote.
std::u32string_view word_ending_at(std::u32string_view cps, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !utf8::is_space(cps[b - 1])) --b;
  while (b < dot && utf8::is_punct(cps[b]) && cps[b] != '.') ++b;
  return cps.substr(b, dot + 1 - b);
}

bool suppresses_boundary(std::u32string_view cps, std::size_t i,
                         const AbbreviationList& abbreviations) {
  if (cps[i] != '.') return false;
  if (i > 0 && i + 1 < cps.size() && utf8::is_digit(cps[i - 1]) && utf8::is_digit(cps[i + 1]))
    return true;
  const std::u32string_view word = word_ending_at(cps, i);
  if (word.size() <= 1) return false;
  return is_initial(word) || abbreviations.contains(utf8::encode(word));
}

}  // namespace

const AbbreviationList& AbbreviationList::builtin() {
  static const AbbreviationList list = [] {
    std::istringstream in(detail::kBuiltinAbbreviations);
    return parse(in);
  }();
  return list;
}

AbbreviationList AbbreviationList::parse(std::istream& in) {
  std::set<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string entry = utf8::trim(line);
    if (!entry.empty()) entries.insert(std::move(entry));
  }
  return AbbreviationList(std::move(entries));
}

AbbreviationList AbbreviationList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open abbreviation list: " + path);
  return parse(in);
}

bool AbbreviationList::contains(std::string_view word) const {
  return entries_.find(std::string(word)) != entries_.end();
}

std::vector<SentenceSpan> segment_sentences(std::string_view context_id, std::string_view text,
                                            const AbbreviationList& abbreviations) {
  const std::u32string cps = utf8::decode(text);
  const std::size_t n = cps.size();
  std::vector<SentenceSpan> spans;

  auto emit = [&](std::size_t start, std::size_t end) {
    while (end > start && utf8::is_space(cps[end - 1])) --end;
    if (end == start) return;
    SentenceSpan span;
    span.context_id = std::string(context_id);
    span.index = spans.size();
    span.start = start;
    span.end = end;
    span.text = utf8::encode(std::u32string_view(cps).substr(start, end - start));
    spans.push_back(std::move(span));
  };

  std::size_t i = 0;
  while (i < n && utf8::is_space(cps[i])) ++i;
  std::size_t start = i;
  while (i < n) {
    if (!is_terminator(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && (is_terminator(cps[j]) || is_closer(cps[j]))) ++j;
    if (j == n) break;
    if (!utf8::is_space(cps[j]) || suppresses_boundary(cps, i, abbreviations)) {
      i = j;
      continue;
    }
    emit(start, j);
    i = j;
    while (i < n && utf8::is_space(cps[i])) ++i;
    start = i;
  }
  if (start < n) emit(start, n);
  return spans;
}

std::vector<SentenceSpan> segment_sentences(const Context& context,
                                            const AbbreviationList& abbreviations) {
  return segment_sentences(context.id, context.text, abbreviations);
}

std::vector<Token> tokenize_words(std::string_view text, const AbbreviationList& abbreviations) {
  const std::u32string cps = utf8::decode(text);
  std::vector<Token> tokens;

  auto push = [&](std::u32string_view piece) {
    Token t;
    t.text = utf8::encode(piece);
    t.is_word = std::any_of(piece.begin(), piece.end(),
                            [](char32_t c) { return utf8::is_letter(c) || utf8::is_digit(c); });
    t.is_numeric = t.is_word && is_numeric_token(t.text);
    tokens.push_back(std::move(t));
  };

  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    while (i < n && utf8::is_space(cps[i])) ++i;
    std::size_t e = i;
    while (e < n && !utf8::is_space(cps[e])) ++e;
    if (e == i) break;
    const std::u32string_view chunk = std::u32string_view(cps).substr(i, e - i);
    i = e;

    std::size_t lead = 0;
    while (lead < chunk.size() && utf8::is_punct(chunk[lead])) ++lead;
    if (lead == chunk.size()) {
      for (std::size_t k = 0; k < chunk.size(); ++k) push(chunk.substr(k, 1));
      continue;
    }
    std::size_t trail_begin = chunk.size();
    while (trail_begin > lead && utf8::is_punct(chunk[trail_begin - 1])) --trail_begin;
    // Keep the period of an abbreviation or initial attached to its word.
    if (trail_begin < chunk.size() && chunk[trail_begin] == '.') {
      const std::u32string_view with_dot = chunk.substr(lead, trail_begin + 1 - lead);
      if (is_initial(with_dot) || abbreviations.contains(utf8::encode(with_dot))) ++trail_begin;
    }
    for (std::size_t k = 0; k < lead; ++k) push(chunk.substr(k, 1));
    push(chunk.substr(lead, trail_begin - lead));
    for (std::size_t k = trail_begin; k < chunk.size(); ++k) push(chunk.substr(k, 1));
  }
  return tokens;
}

std::size_t word_count(std::string_view text) {
  const auto tokens = tokenize_words(text);
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.is_word; }));
}

bool is_numeric_token(std::string_view token) {
  const std::u32string cps = utf8::decode(token);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && utf8::is_punct(cps[b])) ++b;
  while (e > b && utf8::is_punct(cps[e - 1])) --e;
  if (b == e) return false;
  bool expect_digit = true;
  for (std::size_t k = b; k < e; ++k) {
    const char32_t c = cps[k];
    if (utf8::is_digit(c)) {
      expect_digit = false;
    } else if (c == '.' || c == ',' || c == '/' || c == '-' || c == ':') {
      if (expect_digit) return false;
      expect_digit = true;
    } else {
      return false;
    }
  }
  return !expect_digit;
}

std::vector<std::string> numeric_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_words(text))
    if (t.is_numeric) out.push_back(std::move(t.text));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace splitqa
