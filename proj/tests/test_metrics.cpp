#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splitqa/error.hpp"
#include "splitqa/metrics.hpp"

using namespace splitqa;
using namespace splitqa::metrics;

namespace {

Tokens random_tokens(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  static const char* vocab[] = {"a", "b", "c", "d", "e", "f"};
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  Tokens out(len(rng));
  for (auto& t : out) t = vocab[rng() % 6];
  return out;
}

RatingMatrix random_matrix(std::mt19937_64& rng, std::size_t items, std::size_t raters) {
  RatingMatrix m(items, std::vector<std::optional<double>>(raters));
  for (auto& row : m)
    for (auto& cell : row)
      if (rng() % 5 != 0) cell = static_cast<double>(1 + rng() % 5);
  return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("BLEU") {
  const Tokens ref = {"the", "cat", "sat", "down"};
  CHECK(sentence_bleu(ref, ref) == doctest::Approx(100.0));
  CHECK(sentence_bleu({"x", "y"}, ref) == 0.0);
  CHECK(sentence_bleu({}, ref) == 0.0);
  CHECK_THROWS_AS(sentence_bleu(ref, {}), ValidationError);
  const double expected = 100.0 * std::exp(1.0 - 4.0 / 3.0);
  CHECK(sentence_bleu({"the", "cat", "sat"}, ref) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(71.65).epsilon(1e-4));
  // One-token identity: p1 = 1, smoothed p2..p4 = 1/1.
  CHECK(sentence_bleu({"x"}, {"x"}) == doctest::Approx(100.0));
}

TEST_CASE("BLEU range property") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const Tokens c = random_tokens(rng, 0, 8), r = random_tokens(rng, 1, 8);
    const double b = sentence_bleu(c, r);
    CHECK(b >= 0.0);
    CHECK(b <= 100.0);
    CHECK(sentence_bleu(r, r) == doctest::Approx(100.0));
  }
}

TEST_CASE("SARI") {
  const Tokens in = {"the", "old", "cat", "sat", "down"};
  CHECK(sari(in, in, {in}) == doctest::Approx(100.0));
  const Tokens out = {"the", "cat", "sat", "down"};
  const auto b = sari_breakdown(in, out, {in});
  CHECK(b.delete_precision < 1.0);
  CHECK(b.score < 100.0);
  CHECK(b.score == doctest::Approx(oracle::sari(in, out, {in})).epsilon(1e-12));
  CHECK_THROWS_AS(sari({}, out, {in}), ValidationError);
  CHECK_THROWS_AS(sari(in, out, {}), ValidationError);
  CHECK(sari(in, {}, {in}) < 100.0);
}

TEST_CASE("SARI matches the brute-force oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Tokens in = random_tokens(rng, 1, 7), out = random_tokens(rng, 0, 7);
    std::vector<Tokens> refs;
    for (std::size_t k = 0, n = 1 + rng() % 3; k < n; ++k) refs.push_back(random_tokens(rng, 0, 7));
    const double got = sari(in, out, refs);
    CHECK(std::abs(got - oracle::sari(in, out, refs)) <= 1e-9);
    CHECK(got >= 0.0);
    CHECK(got <= 100.0);
  }
}

TEST_CASE("syllables") {
  CHECK(count_syllables("cat") == 1);
  CHECK(count_syllables("simple") == 2);
  CHECK(count_syllables("make") == 1);
  CHECK(count_syllables("the") == 1);
  CHECK(count_syllables("Beautiful") == 3);
  CHECK(count_syllables("rhythm") == 1);
  CHECK_THROWS_AS(count_syllables("1903"), ValidationError);
}

TEST_CASE("FKGL") {
  CHECK(fkgl("The cat sat on the mat.") == doctest::Approx(-1.45).epsilon(1e-9));
  CHECK(std::abs(fkgl("The cat sat on the mat.") - (-1.45)) < 1e-6);
  CHECK_THROWS_AS(fkgl(""), ValidationError);
  CHECK_THROWS_AS(fkgl("..."), ValidationError);
  // Splitting one sentence into two with the same words lowers the grade.
  const double joined = fkgl("The ferry sailed at dawn, and the harbour master waved from the pier.");
  const double split = fkgl("The ferry sailed at dawn. And the harbour master waved from the pier.");
  CHECK(split < joined);
  CHECK(joined - split == doctest::Approx(0.39 * (13.0 - 6.5)).epsilon(1e-9));
}

TEST_CASE("SQuAD normalization, EM and F1") {
  CHECK(squad_normalize("the Eiffel Tower.") == "eiffel tower");
  CHECK(squad_normalize("") == "");
  CHECK(squad_normalize("A  dog") == "dog");
  CHECK(squad_normalize("Theatre") == "theatre");
  CHECK(squad_em("the Denver Broncos", {"Denver Broncos"}) == 1);
  CHECK(squad_f1("the Denver Broncos", {"Denver Broncos"}) == 1.0);
  CHECK(squad_em("broncos", {"denver broncos"}) == 0);
  CHECK(squad_f1("broncos", {"denver broncos"}) == doctest::Approx(2.0 / 3.0));
  CHECK(squad_f1("x", {"y", "x z"}) == doctest::Approx(2.0 / 3.0));
  CHECK(squad_em("", {""}) == 1);
  CHECK(squad_f1("the", {"a"}) == 1.0);
  CHECK(squad_f1("the", {"cat"}) == 0.0);
}

TEST_CASE("Krippendorff's alpha") {
  RatingMatrix agree(5, std::vector<std::optional<double>>(2));
  for (std::size_t i = 0; i < 5; ++i) agree[i][0] = agree[i][1] = static_cast<double>(1 + i % 5);
  CHECK(krippendorff_alpha(agree) == doctest::Approx(1.0));

  const RatingMatrix opposed = {{1.0, 5.0}, {5.0, 1.0}};
  CHECK(krippendorff_alpha(opposed) < 0.0);
  // Coincidences: (1,5) and (5,1) twice each, n = 4; D_o = 16, D_e = 2*2*2*16/(4*3).
  CHECK(krippendorff_alpha(opposed) == doctest::Approx(1.0 - 16.0 / (128.0 / 12.0)));

  const RatingMatrix constant = {{3.0, 3.0}, {3.0, 3.0}};
  CHECK(krippendorff_alpha(constant) == 1.0);

  const RatingMatrix thin = {{3.0, std::nullopt}, {4.0, 4.0}};
  CHECK(pairable_items(thin) == 1);
  CHECK_THROWS_AS(krippendorff_alpha(thin), ValidationError);
}

TEST_CASE("alpha matches the brute-force oracle") {
  std::mt19937_64 rng(5);
  int compared = 0;
  for (int i = 0; i < 100; ++i) {
    const RatingMatrix m = random_matrix(rng, 10, 5);
    const auto expected = oracle::alpha(m);
    if (!expected) {
      CHECK_THROWS(krippendorff_alpha(m));
      continue;
    }
    CHECK(std::abs(krippendorff_alpha(m) - *expected) <= 1e-9);
    ++compared;
  }
  CHECK(compared == 100);
}

TEST_CASE("describe") {
  auto s = describe({5, 5, 5});
  CHECK(s.mean == 5);
  CHECK(s.std == 0);
  CHECK(s.n == 3);
  s = describe({1, 2, 3});
  CHECK(s.mean == 2);
  CHECK(s.std == doctest::Approx(1.0));
  s = describe({7});
  CHECK(s.mean == 7);
  CHECK(s.std == 0);
  CHECK_THROWS_AS(describe({}), ValidationError);
}

TEST_CASE("transfer scores and report") {
  const auto same = score_transfer("The harbour opened in 1903.", "The harbour opened in 1903.");
  CHECK(same.bleu == doctest::Approx(100.0));
  CHECK(same.sari == doctest::Approx(100.0));
  CHECK(same.fkgl_original == same.fkgl_transferred);

  const auto refs = score_transfer("a b c d", "a b c", {"a b c", "a b"});
  CHECK(refs.sari == doctest::Approx(oracle::sari({"a", "b", "c", "d"}, {"a", "b", "c"},
                                                  {{"a", "b", "c"}, {"a", "b"}})));

  const MetricReport report = summarize({same, same});
  CHECK(report.n == 2);
  CHECK(report.bleu->mean == doctest::Approx(100.0));
  const auto empty = summarize({}).to_json();
  CHECK(empty["n"] == 0);
  CHECK(empty["bleu"] == nlohmann::json{{"n", 0}});
}

}
