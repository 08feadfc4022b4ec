#include "splitqa/reconstruction.hpp"

#include "splitqa/error.hpp"
#include "splitqa/utf8.hpp"

namespace splitqa {

std::string strip_sentinels(std::string_view text) {
  if (text.find(kSplitSentinel) == std::string_view::npos) return std::string(text);
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t hit = text.find(kSplitSentinel, pos);
    out.append(text.substr(pos, hit == std::string_view::npos ? std::string_view::npos : hit - pos));
    if (hit == std::string_view::npos) break;
    out.push_back(' ');
    pos = hit + kSplitSentinel.size();
  }
  std::string squeezed;
  for (char c : out) {
    if (c == ' ' && (squeezed.empty() || squeezed.back() == ' ')) continue;
    squeezed.push_back(c);
  }
  while (!squeezed.empty() && squeezed.back() == ' ') squeezed.pop_back();
  return squeezed;
}

RebuiltContext rebuild_context(std::string_view context_id, const std::vector<SentenceSpan>& spans,
                               const std::vector<TransferRecord>& accepted) {
  std::map<std::size_t, const TransferRecord*> by_index;
  for (const auto& rec : accepted) {
    if (rec.sentence_index >= spans.size())
      throw ValidationError("accepted record for context " + std::string(context_id) +
                            " has out-of-range sentence index " +
                            std::to_string(rec.sentence_index));
    by_index[rec.sentence_index] = &rec;
  }

  RebuiltContext out;
  out.context_id = std::string(context_id);
  for (const auto& span : spans) {
    SentenceProvenance prov{span.index, false, 0};
    std::string piece;
    if (auto it = by_index.find(span.index); it != by_index.end() && it->second->candidate) {
      for (const auto& sentence : *it->second->candidate) {
        std::string cleaned = strip_sentinels(utf8::trim(sentence));
        if (cleaned.empty()) continue;
        if (!piece.empty()) piece.push_back(' ');
        piece += cleaned;
        ++prov.candidate_sentences;
      }
      prov.replaced = prov.candidate_sentences > 0;
    }
    if (!prov.replaced) piece = span.text;
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += piece;
    out.provenance.push_back(prov);
  }
  return out;
}

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::exact: return "exact";
    case MatchKind::case_insensitive: return "case_insensitive";
    case MatchKind::unmatched: return "unmatched";
  }
  return "unmatched";
}

OffsetResult find_offset(std::string_view context, std::string_view answer) {
  const std::u32string hay = utf8::decode(context);
  const std::u32string needle = utf8::decode(answer);
  if (needle.empty()) return {};
  if (auto pos = hay.find(needle); pos != std::u32string::npos) return {pos, MatchKind::exact};
  if (auto pos = utf8::fold(hay).find(utf8::fold(needle)); pos != std::u32string::npos)
    return {pos, MatchKind::case_insensitive};
  return {};
}

namespace {

// The source offset when it still validates, otherwise a fresh search.
OffsetResult locate_in_original(const std::u32string& text, const Answer& answer) {
  const std::u32string want = utf8::decode(answer.text);
  if (answer.char_offset && *answer.char_offset + want.size() <= text.size() && !want.empty()) {
    const auto found = std::u32string_view(text).substr(*answer.char_offset, want.size());
    if (found == want) return {answer.char_offset, MatchKind::exact};
    if (utf8::fold(found) == utf8::fold(want))
      return {answer.char_offset, MatchKind::case_insensitive};
  }
  return find_offset(utf8::encode(text), answer.text);
}

}  // namespace

FinalizedDatasets finalize_datasets(const Corpus& source,
                                    const std::map<std::string, RebuiltContext>& rebuilt) {
  FinalizedDatasets out;
  out.simple.version = source.version;
  out.original.version = source.version;
  for (const auto& article : source.articles) {
    Article simple_article{article.title, {}};
    Article original_article{article.title, {}};
    for (const auto& ctx : article.contexts) {
      auto it = rebuilt.find(ctx.id);
      if (it == rebuilt.end())
        throw ValidationError("no rebuilt context for source context " + ctx.id);
      const std::string& new_text = it->second.text;
      const std::u32string orig_cps = utf8::decode(ctx.text);

      Context simple_ctx{ctx.id, new_text, {}};
      Context original_ctx{ctx.id, ctx.text, {}};
      for (const auto& qa : ctx.qa_pairs) {
        ++out.questions_in;
        const Answer& first = qa.answers.front();
        const OffsetResult in_original = locate_in_original(orig_cps, first);
        if (in_original.kind == MatchKind::unmatched) {
          out.drops.push_back({qa.id, "invalid_source_offset"});
          continue;
        }
        const OffsetResult in_simple = find_offset(new_text, first.text);
        if (in_simple.kind == MatchKind::unmatched) {
          out.drops.push_back({qa.id, "unmatched_answer"});
          continue;
        }
        if (in_simple.kind == MatchKind::case_insensitive) ++out.case_insensitive_matches;
        simple_ctx.qa_pairs.push_back(
            {qa.id, qa.question,
             {Answer{first.text, in_simple.offset, in_simple.kind == MatchKind::case_insensitive}}});
        original_ctx.qa_pairs.push_back(
            {qa.id, qa.question,
             {Answer{first.text, in_original.offset,
                     in_original.kind == MatchKind::case_insensitive}}});
        ++out.questions_retained;
      }
      simple_article.contexts.push_back(std::move(simple_ctx));
      original_article.contexts.push_back(std::move(original_ctx));
    }
    out.simple.articles.push_back(std::move(simple_article));
    out.original.articles.push_back(std::move(original_article));
  }
  return out;
}

nlohmann::json to_json(const DroppedQuestion& drop) {
  return {{"id", drop.id}, {"reason", drop.reason}};
}

}  // namespace splitqa
