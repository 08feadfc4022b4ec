#include <doctest.h>

#include <random>
#include <sstream>

#include "splitqa/segmentation.hpp"
#include "splitqa/utf8.hpp"

using namespace splitqa;

namespace {

std::vector<std::pair<std::size_t, std::size_t>> bounds(const std::vector<SentenceSpan>& spans) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& s : spans) out.emplace_back(s.start, s.end);
  return out;
}

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "the", "harbour", "Zürich", "Ελλάδα", "U.S.", "Dr.", "e.g.", "3.50", "1,200", "J.",
      "R.", "(1931)", "\"quoted.\"", "end.", "why?", "wow!", "and", "a.m.", "Mr.", "—",
      "x", "...", "Inc.", "it's", "12:30", "St.", "no.", "Hi!)", "'tis", "ok"};
  static const std::vector<std::string> gaps = {" ", " ", " ", "  ", "\n", "\t", " \n "};
  std::uniform_int_distribution<std::size_t> len(0, 40);
  std::string out;
  const std::size_t n = len(rng);
  if (rng() % 4 == 0) out += gaps[rng() % gaps.size()];
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += gaps[rng() % gaps.size()];
    out += pieces[rng() % pieces.size()];
  }
  if (rng() % 4 == 0) out += gaps[rng() % gaps.size()];
  return out;
}

}  // namespace

TEST_SUITE("segmentation") {

TEST_CASE("two simple sentences") {
  const auto spans = segment_sentences("c", "Paris is nice. It is big.");
  REQUIRE(spans.size() == 2);
  CHECK(bounds(spans) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 14}, {15, 25}});
  CHECK(spans[0].text == "Paris is nice.");
  CHECK(spans[1].text == "It is big.");
  CHECK(spans[1].index == 1);
  CHECK(spans[1].context_id == "c");
}

TEST_CASE("no terminator gives one span") {
  const auto spans = segment_sentences("c", "He was born in 1903");
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].text == "He was born in 1903");
}

TEST_CASE("decimal and abbreviation guards") {
  const auto spans = segment_sentences("c", "It cost $3.50 at the U.S. store. Cheap!");
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].text == "It cost $3.50 at the U.S. store.");
  CHECK(spans[1].text == "Cheap!");
}

TEST_CASE("initials and titles do not end a sentence") {
  const auto spans = segment_sentences("c", "Dr. Smith met J. R. Tolkien. They talked.");
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].text == "Dr. Smith met J. R. Tolkien.");
}

TEST_CASE("closing quotes stay with their sentence") {
  const auto spans = segment_sentences("c", "They called it \"the crown.\" The name stuck.");
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].text == "They called it \"the crown.\"");
}

TEST_CASE("question and exclamation marks split") {
  CHECK(segment_sentences("c", "Why? Because! Fine.").size() == 3);
}

TEST_CASE("empty and blank text") {
  CHECK(segment_sentences("c", "").empty());
  CHECK(segment_sentences("c", "   ").empty());
}

TEST_CASE("offsets count code points") {
  const auto spans = segment_sentences("c", "Ünïcode here. Ελλάδα next.");
  REQUIRE(spans.size() == 2);
  CHECK(spans[1].start == 14);
  CHECK(spans[1].end == 26);
}

TEST_CASE("custom abbreviation list") {
  std::istringstream in("# comment\nSt.\n\nApprox.  \n");
  const AbbreviationList list = AbbreviationList::parse(in);
  CHECK(list.size() == 2);
  CHECK(list.contains("Approx."));
  CHECK(segment_sentences("c", "Approx. ten. Done.", list).size() == 2);
  CHECK(segment_sentences("c", "Approx. ten. Done.", AbbreviationList{}).size() == 3);
  CHECK(AbbreviationList::builtin().size() >= 50);
  CHECK(AbbreviationList::builtin().contains("e.g."));
}

TEST_CASE("tokenize_words") {
  const auto toks = tokenize_words("Clark also claimed.");
  CHECK(texts(toks) == std::vector<std::string>{"Clark", "also", "claimed", "."});
  CHECK(word_count("Clark also claimed.") == 3);
  CHECK(tokenize_words("").empty());

  const auto born = tokenize_words("born in 1903.");
  REQUIRE(born.size() == 4);
  CHECK(born[2].text == "1903");
  CHECK(born[2].is_numeric);
  CHECK_FALSE(born[0].is_numeric);
  CHECK_FALSE(born[3].is_word);

  CHECK(texts(tokenize_words("(\"Hi,\" she said.)")) ==
        std::vector<std::string>{"(", "\"", "Hi", ",", "\"", "she", "said", ".", ")"});
  CHECK(texts(tokenize_words("the U.S. army")) ==
        std::vector<std::string>{"the", "U.S.", "army"});
}

TEST_CASE("numeric pattern") {
  for (const char* yes : {"1903", "3.50", "1,200", "1914-1918", "12:30", "3/4", "(1931)", "2."})
    CHECK_MESSAGE(is_numeric_token(yes), yes);
  for (const char* no : {"", "abc", "1903s", "a1", "$", "1..2", "1a2", "--"})
    CHECK_FALSE_MESSAGE(is_numeric_token(no), no);
}

TEST_CASE("numeric_tokens is a multiset") {
  CHECK(numeric_tokens("In his Prices and Production (1931)") == std::vector<std::string>{"1931"});
  CHECK(numeric_tokens("no digits here").empty());
  CHECK(numeric_tokens("from 1914 to 1918, 1914 again") ==
        std::vector<std::string>{"1914", "1914", "1918"});
}

TEST_CASE("property: coverage, monotonicity, idempotence") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string text = random_text(rng);
    const std::u32string cps = utf8::decode(text);
    const auto spans = segment_sentences("c", text);

    std::size_t cursor = 0;
    for (std::size_t k = 0; k < spans.size(); ++k) {
      const auto& s = spans[k];
      CHECK(s.index == k);
      REQUIRE(s.start >= cursor);
      REQUIRE(s.end > s.start);
      for (std::size_t p = cursor; p < s.start; ++p) CHECK(utf8::is_space(cps[p]));
      CHECK(utf8::encode(cps.substr(s.start, s.end - s.start)) == s.text);
      if (k > 0) CHECK(s.start > spans[k - 1].start);
      cursor = s.end;

      const auto again = segment_sentences("c", s.text);
      REQUIRE(again.size() == 1);
      CHECK(again[0].text == s.text);
    }
    for (std::size_t p = cursor; p < cps.size(); ++p) CHECK(utf8::is_space(cps[p]));
  }
}

}
