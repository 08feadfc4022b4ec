#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace splitqa {

struct Answer {
  std::string text;
  // Counted in Unicode scalar values from the start of the context.
  std::optional<std::size_t> char_offset;
  // The offset was recovered by case-folded matching, so the context substring
  // equals `text` only under case folding.
  bool case_insensitive = false;

  bool operator==(const Answer&) const = default;
};

struct QaPair {
  std::string id;
  std::string question;
  std::vector<Answer> answers;

  bool operator==(const QaPair&) const = default;
};

struct Context {
  std::string id;
  std::string text;
  std::vector<QaPair> qa_pairs;

  bool operator==(const Context&) const = default;
};

struct Article {
  std::string title;
  std::vector<Context> contexts;

  bool operator==(const Article&) const = default;
};

struct Corpus {
  std::string version;
  std::vector<Article> articles;

  bool operator==(const Corpus&) const = default;

  std::size_t context_count() const;
  std::size_t question_count() const;
};

struct OffsetFailure {
  std::string qa_id;
  std::size_t answer_index = 0;
  std::string expected;
  std::string found;
  std::string reason;
};

struct ValidationReport {
  std::size_t checked = 0;
  std::vector<OffsetFailure> failures;

  bool ok() const { return failures.empty(); }
};

// Parses the QA dataset JSON schema. Contexts have no id in that schema, so
// they are numbered "<article>_<paragraph>" in document order.
Corpus load_corpus(std::istream& in);
Corpus load_corpus_file(const std::string& path);

// Checks every answer whose offset is set against its context text.
ValidationReport validate_offsets(const Corpus& corpus);

// Serializes to the QA dataset JSON schema. Throws ValidationError naming the
// first question whose offsets do not validate.
void emit_corpus(const Corpus& corpus, std::ostream& out);
std::string emit_corpus(const Corpus& corpus);
void emit_corpus_file(const Corpus& corpus, const std::string& path);

}  // namespace splitqa
