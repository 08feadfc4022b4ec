#include "splitqa/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "splitqa/error.hpp"
#include "splitqa/utf8.hpp"

namespace splitqa {

using nlohmann::json;

std::size_t Corpus::context_count() const {
  std::size_t n = 0;
  for (const auto& a : articles) n += a.contexts.size();
  return n;
}

std::size_t Corpus::question_count() const {
  std::size_t n = 0;
  for (const auto& a : articles)
    for (const auto& c : a.contexts) n += c.qa_pairs.size();
  return n;
}

namespace {

const json& member(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_at(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) throw ParseError(path + "/" + key, "expected string");
  return v.get<std::string>();
}

const json& array_at(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_array()) throw ParseError(path + "/" + key, "expected array");
  return v;
}

void expect_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw ParseError(path, "expected object");
}

Answer parse_answer(const json& j, const std::string& path) {
  expect_object(j, path);
  Answer a;
  a.text = string_at(j, "text", path);
  if (auto it = j.find("answer_start"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 0)
      throw ParseError(path + "/answer_start", "expected non-negative integer");
    a.char_offset = it->get<std::size_t>();
  }
  if (auto it = j.find("case_insensitive"); it != j.end()) {
    if (!it->is_boolean()) throw ParseError(path + "/case_insensitive", "expected boolean");
    a.case_insensitive = it->get<bool>();
  }
  return a;
}

json answer_json(const Answer& a) {
  json j = {{"text", a.text}};
  if (a.char_offset) j["answer_start"] = *a.char_offset;
  if (a.case_insensitive) j["case_insensitive"] = true;
  return j;
}

}  // namespace

Corpus load_corpus(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
  expect_object(doc, "");
  Corpus corpus;
  if (auto it = doc.find("version"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("/version", "expected string");
    corpus.version = it->get<std::string>();
  }
  std::unordered_set<std::string> seen;
  const json& data = array_at(doc, "data", "");
  for (std::size_t ai = 0; ai < data.size(); ++ai) {
    const std::string apath = "/data/" + std::to_string(ai);
    expect_object(data[ai], apath);
    Article article;
    article.title = string_at(data[ai], "title", apath);
    const json& paragraphs = array_at(data[ai], "paragraphs", apath);
    if (paragraphs.empty()) throw ParseError(apath + "/paragraphs", "article has no paragraphs");
    for (std::size_t pi = 0; pi < paragraphs.size(); ++pi) {
      const std::string ppath = apath + "/paragraphs/" + std::to_string(pi);
      expect_object(paragraphs[pi], ppath);
      Context ctx;
      ctx.id = std::to_string(ai) + "_" + std::to_string(pi);
      ctx.text = string_at(paragraphs[pi], "context", ppath);
      if (ctx.text.empty()) throw ParseError(ppath + "/context", "empty context");
      const json& qas = array_at(paragraphs[pi], "qas", ppath);
      for (std::size_t qi = 0; qi < qas.size(); ++qi) {
        const std::string qpath = ppath + "/qas/" + std::to_string(qi);
        expect_object(qas[qi], qpath);
        QaPair qa;
        qa.id = string_at(qas[qi], "id", qpath);
        qa.question = string_at(qas[qi], "question", qpath);
        const json& answers = array_at(qas[qi], "answers", qpath);
        if (answers.empty()) throw ParseError(qpath + "/answers", "question has no answers");
        for (std::size_t k = 0; k < answers.size(); ++k)
          qa.answers.push_back(parse_answer(answers[k], qpath + "/answers/" + std::to_string(k)));
        if (!seen.insert(qa.id).second)
          throw ValidationError("duplicate question id: " + qa.id);
        ctx.qa_pairs.push_back(std::move(qa));
      }
      article.contexts.push_back(std::move(ctx));
    }
    corpus.articles.push_back(std::move(article));
  }
  return corpus;
}

Corpus load_corpus_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file: " + path);
  return load_corpus(in);
}

ValidationReport validate_offsets(const Corpus& corpus) {
  ValidationReport report;
  for (const auto& article : corpus.articles) {
    for (const auto& ctx : article.contexts) {
      const std::u32string text = utf8::decode(ctx.text);
      for (const auto& qa : ctx.qa_pairs) {
        for (std::size_t k = 0; k < qa.answers.size(); ++k) {
          const Answer& a = qa.answers[k];
          if (!a.char_offset) continue;
          ++report.checked;
          const std::u32string want = utf8::decode(a.text);
          const std::size_t off = *a.char_offset;
          if (off + want.size() > text.size()) {
            report.failures.push_back({qa.id, k, a.text,
                                       utf8::encode(off < text.size()
                                                        ? std::u32string_view(text).substr(off)
                                                        : std::u32string_view()),
                                       "offset out of range"});
            continue;
          }
          const std::u32string_view found = std::u32string_view(text).substr(off, want.size());
          bool match = found == want;
          if (!match && a.case_insensitive) match = utf8::fold(found) == utf8::fold(want);
          if (!match)
            report.failures.push_back({qa.id, k, a.text, utf8::encode(found), "substring mismatch"});
        }
      }
    }
  }
  return report;
}

void emit_corpus(const Corpus& corpus, std::ostream& out) {
  const ValidationReport report = validate_offsets(corpus);
  if (!report.ok()) {
    const auto& f = report.failures.front();
    throw ValidationError("answer offset invalid for question " + f.qa_id + ": expected \"" +
                          f.expected + "\", found \"" + f.found + "\"");
  }
  json data = json::array();
  for (const auto& article : corpus.articles) {
    json paragraphs = json::array();
    for (const auto& ctx : article.contexts) {
      json qas = json::array();
      for (const auto& qa : ctx.qa_pairs) {
        json answers = json::array();
        for (const auto& a : qa.answers) answers.push_back(answer_json(a));
        qas.push_back({{"id", qa.id}, {"question", qa.question}, {"answers", std::move(answers)}});
      }
      paragraphs.push_back({{"context", ctx.text}, {"qas", std::move(qas)}});
    }
    data.push_back({{"title", article.title}, {"paragraphs", std::move(paragraphs)}});
  }
  json doc = {{"version", corpus.version}, {"data", std::move(data)}};
  out << doc.dump() << '\n';
}

std::string emit_corpus(const Corpus& corpus) {
  std::ostringstream os;
  emit_corpus(corpus, os);
  return os.str();
}

void emit_corpus_file(const Corpus& corpus, const std::string& path) {
  const std::string body = emit_corpus(corpus);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write corpus file: " + path);
  out << body;
}

}  // namespace splitqa
