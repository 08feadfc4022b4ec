#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "splitqa/corpus.hpp"

namespace splitqa {

// A sentence and its code-point range [start, end) inside a context.
struct SentenceSpan {
  std::string context_id;
  std::size_t index = 0;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const SentenceSpan&) const = default;
};

struct Token {
  std::string text;
  bool is_numeric = false;
  // True when the token contains at least one letter or digit.
  bool is_word = false;

  bool operator==(const Token&) const = default;
};

class AbbreviationList {
 public:
  // The list bundled with the library (identical to data/abbreviations.txt).
  static const AbbreviationList& builtin();
  // One entry per line, `#` starts a comment, blank lines ignored.
  static AbbreviationList parse(std::istream& in);
  static AbbreviationList load(const std::string& path);

  AbbreviationList() = default;
  explicit AbbreviationList(std::set<std::string> entries) : entries_(std::move(entries)) {}

  // `word` includes its trailing period, e.g. "Dr.".
  bool contains(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::set<std::string>& entries() const { return entries_; }

 private:
  std::set<std::string> entries_;
};

// Splits after `.`, `!` or `?` (plus any closing quotes or brackets) when
// followed by whitespace, unless the period ends a known abbreviation, an
// initial, or sits inside a decimal number. Text without a terminator yields
// a single span. Leading and trailing whitespace belongs to no span.
std::vector<SentenceSpan> segment_sentences(
    std::string_view context_id, std::string_view text,
    const AbbreviationList& abbreviations = AbbreviationList::builtin());
std::vector<SentenceSpan> segment_sentences(
    const Context& context, const AbbreviationList& abbreviations = AbbreviationList::builtin());

// Whitespace split with leading/trailing punctuation detached one character
// per token. Known abbreviations keep their trailing period.
std::vector<Token> tokenize_words(
    std::string_view text, const AbbreviationList& abbreviations = AbbreviationList::builtin());

// Tokens that carry a letter or digit.
std::size_t word_count(std::string_view text);

// Digits with optional `. , / - :` separators between digit runs, after
// stripping surrounding punctuation.
bool is_numeric_token(std::string_view token);

// Sorted multiset of numeric token texts.
std::vector<std::string> numeric_tokens(std::string_view text);

}  // namespace splitqa
