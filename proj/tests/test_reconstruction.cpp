#include <doctest.h>

#include <random>
#include <set>

#include "splitqa/error.hpp"
#include "splitqa/reconstruction.hpp"

using namespace splitqa;

namespace {

TransferRecord accepted(std::size_t idx, std::vector<std::string> candidate) {
  TransferRecord r;
  r.context_id = "0_0";
  r.sentence_index = idx;
  r.candidate = std::move(candidate);
  r.status = RecordStatus::accepted;
  return r;
}

Corpus one_context(const std::string& text, std::vector<QaPair> qas) {
  Corpus c;
  c.version = "1.1";
  c.articles.push_back({"t", {{"0_0", text, std::move(qas)}}});
  return c;
}

std::set<std::string> question_ids(const Corpus& c) {
  std::set<std::string> out;
  for (const auto& a : c.articles)
    for (const auto& ctx : a.contexts)
      for (const auto& qa : ctx.qa_pairs) out.insert(qa.id);
  return out;
}

}  // namespace

TEST_SUITE("reconstruction") {

TEST_CASE("rebuild with no accepted records joins the originals") {
  const auto spans = segment_sentences("0_0", "Paris is nice.   It is big.\nVery big.");
  const auto rebuilt = rebuild_context("0_0", spans, {});
  CHECK(rebuilt.text == "Paris is nice. It is big. Very big.");
  REQUIRE(rebuilt.provenance.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rebuilt.provenance[i].index == i);
    CHECK_FALSE(rebuilt.provenance[i].replaced);
  }
}

TEST_CASE("rebuild replaces one sentence with a two-sentence candidate") {
  const auto spans = segment_sentences("0_0", "He ran fast, and she walked home. It rained.");
  const auto rebuilt = rebuild_context("0_0", spans, {accepted(0, {"He ran fast.", "She walked home."})});
  CHECK(rebuilt.text == "He ran fast. She walked home. It rained.");
  CHECK(rebuilt.provenance ==
        std::vector<SentenceProvenance>{{0, true, 2}, {1, false, 0}});
  CHECK(segment_sentences("x", rebuilt.text).size() == 3);
}

TEST_CASE("sentinels are stripped") {
  const auto spans = segment_sentences("0_0", "A long sentence here. Another.");
  const auto rebuilt = rebuild_context("0_0", spans, {accepted(0, {"A long. <::::> Sentence here."})});
  CHECK(rebuilt.text == "A long. Sentence here. Another.");
  CHECK(rebuilt.text.find("<::::>") == std::string::npos);
  CHECK(strip_sentinels("a <::::>b<::::> c") == "a b c");
  CHECK(strip_sentinels("untouched  text") == "untouched  text");
}

TEST_CASE("out-of-range accepted index names the index") {
  const auto spans = segment_sentences("0_0", "One. Two.");
  try {
    rebuild_context("0_0", spans, {accepted(7, {"x"})});
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find('7') != std::string::npos);
  }
}

TEST_CASE("find_offset") {
  auto r = find_offset("Paris is nice.", "Paris");
  CHECK(r.offset == 0u);
  CHECK(r.kind == MatchKind::exact);
  r = find_offset("The EIFFEL tower stands.", "Eiffel");
  CHECK(r.offset == 4u);
  CHECK(r.kind == MatchKind::case_insensitive);
  r = find_offset("Paris is nice.", "London");
  CHECK_FALSE(r.offset);
  CHECK(r.kind == MatchKind::unmatched);
  // Exact anywhere beats an earlier case-insensitive hit; leftmost wins.
  r = find_offset("PARIS and Paris and Paris", "Paris");
  CHECK(r.offset == 10u);
  CHECK(r.kind == MatchKind::exact);
  r = find_offset("Ωmega über ÜBER", "über");
  CHECK(r.offset == 6u);
  CHECK(find_offset("x", "").kind == MatchKind::unmatched);
}

TEST_CASE("finalize with identity rebuild keeps every question") {
  const Corpus src = one_context("Paris is nice.  It is big.",
                                 {{"q1", "?", {{"Paris", 0, false}}}, {"q2", "?", {{"big", 22, false}}}});
  const auto spans = segment_sentences(src.articles[0].contexts[0]);
  const auto out = finalize_datasets(src, {{"0_0", rebuild_context("0_0", spans, {})}});
  CHECK(out.drops.empty());
  CHECK(out.questions_retained == 2);
  CHECK(validate_offsets(out.simple).ok());
  CHECK(validate_offsets(out.original).ok());
  CHECK(out.simple.articles[0].contexts[0].qa_pairs[1].answers[0].char_offset == 21u);
  CHECK(out.original.articles[0].contexts[0].qa_pairs[1].answers[0].char_offset == 22u);
  CHECK(question_ids(out.simple) == question_ids(out.original));
}

TEST_CASE("destroyed answer is dropped from both outputs") {
  const Corpus src = one_context("They sold wool, and cheese from the valley. It rained.",
                                 {{"q1", "?", {{"wool, and cheese", 10, false}}},
                                  {"q2", "?", {{"rained", 47, false}}}});
  const auto spans = segment_sentences(src.articles[0].contexts[0]);
  const auto rebuilt = rebuild_context("0_0", spans, {accepted(0, {"They sold wool.", "Cheese from the valley."})});
  const auto out = finalize_datasets(src, {{"0_0", rebuilt}});
  REQUIRE(out.drops.size() == 1);
  CHECK(out.drops[0].id == "q1");
  CHECK(out.drops[0].reason == "unmatched_answer");
  CHECK(question_ids(out.simple) == std::set<std::string>{"q2"});
  CHECK(question_ids(out.original) == std::set<std::string>{"q2"});
  CHECK(to_json(out.drops[0]) == nlohmann::json{{"id", "q1"}, {"reason", "unmatched_answer"}});
}

TEST_CASE("case-insensitive recovery is flagged and validates") {
  const Corpus src = one_context("He left, and the river rose quickly that year.",
                                 {{"q1", "?", {{"the river", 13, false}}}});
  const auto spans = segment_sentences(src.articles[0].contexts[0]);
  const auto rebuilt = rebuild_context("0_0", spans, {accepted(0, {"He left.", "The river rose quickly that year."})});
  const auto out = finalize_datasets(src, {{"0_0", rebuilt}});
  CHECK(out.drops.empty());
  CHECK(out.case_insensitive_matches == 1);
  const auto& a = out.simple.articles[0].contexts[0].qa_pairs[0].answers[0];
  CHECK(a.char_offset == 9u);
  CHECK(a.case_insensitive);
  CHECK(validate_offsets(out.simple).ok());
}

TEST_CASE("only the first answer is carried over") {
  const Corpus src = one_context("Paris is nice.", {{"q1", "?", {{"Paris", 0, false}, {"nice", 9, false}}}});
  const auto out = finalize_datasets(src, {{"0_0", rebuild_context("0_0", segment_sentences("0_0", "Paris is nice."), {})}});
  CHECK(out.simple.articles[0].contexts[0].qa_pairs[0].answers.size() == 1);
  CHECK(out.original.articles[0].contexts[0].qa_pairs[0].answers.size() == 1);
}

TEST_CASE("a bad source offset falls back to search, else drops") {
  const Corpus src = one_context("Paris is nice.", {{"q1", "?", {{"nice", 0, false}}},
                                                    {"q2", "?", {{"London", 0, false}}}});
  const auto out = finalize_datasets(src, {{"0_0", rebuild_context("0_0", segment_sentences("0_0", "Paris is nice."), {})}});
  CHECK(out.original.articles[0].contexts[0].qa_pairs.at(0).answers[0].char_offset == 9u);
  REQUIRE(out.drops.size() == 1);
  CHECK(out.drops[0].reason == "invalid_source_offset");
}

TEST_CASE("missing rebuilt context is an error") {
  const Corpus src = one_context("Paris is nice.", {});
  CHECK_THROWS_AS(finalize_datasets(src, {}), ValidationError);
}

TEST_CASE("property: fewer replacements never lose more questions") {
  const std::string text =
      "The mill sold wool, and cheese from the valley. The river rose, and the bridge fell into it. "
      "Nobody saw the flood, and the mayor resigned that winter.";
  const Corpus src = one_context(text, {{"q1", "?", {{"wool, and cheese", text.find("wool"), false}}},
                                        {"q2", "?", {{"the bridge", text.find("the bridge"), false}}},
                                        {"q3", "?", {{"the mayor", text.find("the mayor"), false}}},
                                        {"q4", "?", {{"flood", text.find("flood"), false}}}});
  REQUIRE(validate_offsets(src).ok());
  const auto spans = segment_sentences(src.articles[0].contexts[0]);
  std::vector<TransferRecord> all;
  for (const auto& s : spans) all.push_back(accepted(s.index, rule_split(s.text)));
  for (unsigned mask = 0; mask < 8; ++mask) {
    std::vector<TransferRecord> subset, superset;
    for (std::size_t i = 0; i < all.size(); ++i)
      if (mask & (1u << i)) subset.push_back(all[i]);
    const auto more = finalize_datasets(src, {{"0_0", rebuild_context("0_0", spans, all)}});
    const auto fewer = finalize_datasets(src, {{"0_0", rebuild_context("0_0", spans, subset)}});
    CHECK(fewer.questions_retained >= more.questions_retained);
    CHECK(validate_offsets(fewer.simple).ok());
    CHECK(question_ids(fewer.simple) == question_ids(fewer.original));
  }
}

}
