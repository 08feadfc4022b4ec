#include "splitqa/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_map>

#include "splitqa/analysis.hpp"
#include "splitqa/corpus.hpp"
#include "splitqa/jsonl.hpp"
#include "splitqa/metrics.hpp"
#include "splitqa/reconstruction.hpp"
#include "splitqa/segmentation.hpp"
#include "splitqa/simplifier.hpp"
#include "splitqa/utf8.hpp"

#ifndef SPLITQA_DATA_DIR
#define SPLITQA_DATA_DIR "data"
#endif

namespace splitqa {

namespace fs = std::filesystem;
using nlohmann::json;

void PipelineConfig::validate() const {
  gates.validate();
  if (in_flight == 0) throw ValidationError("in-flight limit must be at least 1");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::segment: return "segment";
    case Stage::simplify: return "simplify";
    case Stage::threshold: return "threshold";
    case Stage::evaluate: return "evaluate";
    case Stage::reconstruct: return "reconstruct";
    case Stage::analyze: return "analyze";
  }
  return "segment";
}

namespace {

std::string path_in(const PipelineConfig& cfg, const char* name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void write_json(const std::string& path, const json& value) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << value.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return json::parse(in);
}

std::vector<json> read_artifact(const PipelineConfig& cfg, const char* name, Stage needed_by) {
  const std::string path = path_in(cfg, name);
  if (!fs::exists(path))
    throw StageFailed(needed_by, "missing " + path + "; run the earlier stages first");
  return jsonl::read_file(path);
}

void set_status(const std::string& out_dir, Stage stage, std::string_view status) {
  json manifest = read_manifest(out_dir);
  manifest["stages"][std::string(to_string(stage))] = status;
  write_json((fs::path(out_dir) / artifact::kManifest).string(), manifest);
}

Corpus load_input(const PipelineConfig& cfg) {
  if (cfg.input.empty()) throw ValidationError("no input corpus given (--input)");
  if (!fs::exists(cfg.input)) throw Error("input corpus not found: " + cfg.input);
  return load_corpus_file(cfg.input);
}

AbbreviationList load_abbreviations(const PipelineConfig& cfg) {
  if (cfg.abbreviations.empty()) return AbbreviationList::builtin();
  if (!fs::exists(cfg.abbreviations))
    throw Error("abbreviation list not found: " + cfg.abbreviations);
  return AbbreviationList::load(cfg.abbreviations);
}

json span_to_json(const SentenceSpan& s) {
  return {{"context_id", s.context_id}, {"index", s.index}, {"text", s.text},
          {"start", s.start},           {"end", s.end}};
}

SentenceSpan span_from_json(const json& j) {
  return {j.at("context_id").get<std::string>(), j.at("index").get<std::size_t>(),
          j.at("text").get<std::string>(), j.at("start").get<std::size_t>(),
          j.at("end").get<std::size_t>()};
}

std::vector<TransferRecord> records_from(const std::vector<json>& lines) {
  std::vector<TransferRecord> out;
  out.reserve(lines.size());
  for (const auto& j : lines) out.push_back(record_from_json(j));
  return out;
}

std::vector<json> records_to_json(const std::vector<TransferRecord>& records) {
  std::vector<json> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(to_json(r));
  return out;
}

void stage_segment(const PipelineConfig& cfg) {
  const Corpus corpus = load_input(cfg);
  const AbbreviationList abbr = load_abbreviations(cfg);
  std::vector<json> lines;
  for (const auto& article : corpus.articles)
    for (const auto& ctx : article.contexts)
      for (const auto& span : segment_sentences(ctx, abbr)) lines.push_back(span_to_json(span));
  jsonl::write_file(path_in(cfg, artifact::kSegments), lines);
  std::cerr << "segment: " << corpus.context_count() << " contexts, " << lines.size()
            << " sentences\n";
}

void stage_simplify(const PipelineConfig& cfg) {
  std::vector<SentenceSpan> spans;
  for (const auto& j : read_artifact(cfg, artifact::kSegments, Stage::simplify))
    spans.push_back(span_from_json(j));
  std::vector<TransferRecord> records = make_records(spans);

  // Answers recorded by an interrupted run are reused, not requested again.
  const std::string journal_path = path_in(cfg, artifact::kJournal);
  std::vector<json> journal;
  if (fs::exists(journal_path)) {
    journal = jsonl::read_file(journal_path);
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < records.size(); ++i) slot.emplace(records[i].key(), i);
    std::size_t reused = 0;
    for (const auto& j : journal) {
      TransferRecord done = record_from_json(j);
      auto it = slot.find(done.key());
      if (it == slot.end() || records[it->second].original != done.original)
        throw StageFailed(Stage::simplify,
                          "journal " + journal_path + " does not match " + artifact::kSegments);
      records[it->second] = std::move(done);
      ++reused;
    }
    std::cerr << "simplify: resuming, " << reused << " answers from journal\n";
  }
  jsonl::write_file(journal_path, journal);

  std::ofstream journal_out(journal_path, std::ios::binary | std::ios::app);
  if (!journal_out) throw Error("cannot write " + journal_path);

  auto backend = open_backend(cfg.backend, cfg.in_flight);
  SimplifyResult result =
      simplify_batch(std::move(records), *backend, cfg.in_flight, [&](const TransferRecord& rec) {
        jsonl::write(journal_out, to_json(rec));
        journal_out.flush();
      });
  backend.reset();
  journal_out.close();
  if (result.transport_failed)
    throw StageFailed(Stage::simplify,
                      "backend '" + cfg.backend + "' failed: " + result.transport_error);

  std::size_t failures = 0;
  for (const auto& r : result.records)
    if (r.status == RecordStatus::rejected) ++failures;
  jsonl::write_file(path_in(cfg, artifact::kTransfer), records_to_json(result.records));
  fs::remove(journal_path);
  std::cerr << "simplify: " << result.records.size() << " records, " << failures
            << " backend failures\n";
}

void stage_threshold(const PipelineConfig& cfg) {
  std::vector<TransferRecord> records =
      records_from(read_artifact(cfg, artifact::kTransfer, Stage::threshold));
  std::string stub = cfg.stub_corpus.empty() ? std::string(SPLITQA_DATA_DIR) + "/stub_lm_corpus.txt"
                                             : cfg.stub_corpus;
  auto scorer = open_scorer(cfg.scorer, stub, cfg.in_flight);
  const ScoreOutcome scored = score_records(records, *scorer, cfg.in_flight);
  scorer.reset();
  if (scored.transport_failed)
    throw StageFailed(Stage::threshold,
                      "scorer '" + cfg.scorer + "' failed: " + scored.transport_error);

  std::vector<std::string> order;
  for (const auto& r : records) order.push_back(r.key());
  ThresholdResult result = apply_gates(std::move(records), cfg.gates);

  std::unordered_map<std::string, TransferRecord*> by_key;
  for (auto& r : result.accepted) by_key[r.key()] = &r;
  for (auto& r : result.rejected) by_key[r.key()] = &r;
  std::vector<json> lines;
  for (const auto& key : order) lines.push_back(to_json(*by_key.at(key)));
  jsonl::write_file(path_in(cfg, artifact::kThresholded), lines);
  write_json(path_in(cfg, artifact::kStageStats), result.stats.to_json());
  std::cerr << "threshold: " << result.accepted.size() << " of " << result.stats.input_count
            << " accepted\n";
}

std::vector<TransferRecord> accepted_records(const PipelineConfig& cfg, Stage needed_by) {
  std::vector<TransferRecord> out;
  for (auto& r : records_from(read_artifact(cfg, artifact::kThresholded, needed_by)))
    if (r.status == RecordStatus::accepted) out.push_back(std::move(r));
  return out;
}

void stage_evaluate(const PipelineConfig& cfg) {
  std::vector<json> lines;
  std::vector<metrics::TransferScores> scores;
  for (const auto& r : accepted_records(cfg, Stage::evaluate)) {
    const metrics::TransferScores s = metrics::score_transfer(r.original, r.joined_candidate());
    scores.push_back(s);
    lines.push_back({{"key", r.key()},
                     {"original_word_count", r.original_word_count},
                     {"bleu", jsonl::round6(s.bleu)},
                     {"sari", jsonl::round6(s.sari)},
                     {"fkgl_original", jsonl::round6(s.fkgl_original)},
                     {"fkgl_transferred", jsonl::round6(s.fkgl_transferred)}});
  }
  jsonl::write_file(path_in(cfg, artifact::kScores), lines);
  write_json(path_in(cfg, artifact::kMetricReport), metrics::summarize(scores).to_json());
  std::cerr << "evaluate: " << scores.size() << " accepted transfers scored\n";
}

void stage_reconstruct(const PipelineConfig& cfg) {
  const Corpus corpus = load_input(cfg);
  std::map<std::string, std::vector<SentenceSpan>> spans;
  for (const auto& j : read_artifact(cfg, artifact::kSegments, Stage::reconstruct)) {
    SentenceSpan s = span_from_json(j);
    spans[s.context_id].push_back(std::move(s));
  }
  std::map<std::string, std::vector<TransferRecord>> accepted;
  for (auto& r : accepted_records(cfg, Stage::reconstruct))
    accepted[r.context_id].push_back(std::move(r));
  for (const auto& [ctx_id, recs] : accepted)
    if (!spans.count(ctx_id))
      throw StageFailed(Stage::reconstruct, "accepted record for unknown context " + ctx_id);

  std::map<std::string, RebuiltContext> rebuilt;
  for (const auto& article : corpus.articles)
    for (const auto& ctx : article.contexts)
      rebuilt.emplace(ctx.id, rebuild_context(ctx.id, spans[ctx.id], accepted[ctx.id]));

  const FinalizedDatasets out = finalize_datasets(corpus, rebuilt);
  emit_corpus_file(out.simple, path_in(cfg, artifact::kSimple));
  emit_corpus_file(out.original, path_in(cfg, artifact::kOriginal));
  std::vector<json> drops;
  for (const auto& d : out.drops) drops.push_back(to_json(d));
  jsonl::write_file(path_in(cfg, artifact::kDrops), drops);

  std::size_t replaced = 0;
  for (const auto& [id, ctx] : rebuilt)
    for (const auto& p : ctx.provenance)
      if (p.replaced) ++replaced;
  write_json(path_in(cfg, artifact::kOffsets),
             {{"questions_in", out.questions_in},
              {"questions_retained", out.questions_retained},
              {"questions_dropped", out.drops.size()},
              {"case_insensitive_matches", out.case_insensitive_matches},
              {"sentences_replaced", replaced},
              {"simple_offsets_valid", validate_offsets(out.simple).ok()},
              {"original_offsets_valid", validate_offsets(out.original).ok()}});
  std::cerr << "reconstruct: " << out.questions_retained << " of " << out.questions_in
            << " questions retained\n";
}

void stage_analyze(const PipelineConfig& cfg) {
  std::vector<std::size_t> word_counts;
  std::vector<metrics::TransferScores> scores;
  for (const auto& j : read_artifact(cfg, artifact::kScores, Stage::analyze)) {
    word_counts.push_back(j.at("original_word_count").get<std::size_t>());
    scores.push_back({j.at("bleu").get<double>(), j.at("sari").get<double>(),
                      j.at("fkgl_original").get<double>(), j.at("fkgl_transferred").get<double>()});
  }
  if (word_counts.size() >= 4) {
    const TransferAnalysis analysis = analyze_transfer(word_counts, scores);
    write_json(path_in(cfg, artifact::kAnalysis), analysis.to_json());
    std::ofstream table(path_in(cfg, artifact::kAnalysisTable), std::ios::binary | std::ios::trunc);
    table << analysis.to_table();
  } else {
    // Too few transfers for quartile buckets; report the overall summary only.
    write_json(path_in(cfg, artifact::kAnalysis),
               {{"buckets", json::array()}, {"summary", metrics::summarize(scores).to_json()}});
    std::ofstream table(path_in(cfg, artifact::kAnalysisTable), std::ios::binary | std::ios::trunc);
    table << "fewer than 4 accepted transfers; no length buckets\n";
  }

  const std::vector<TransferRecord> accepted = accepted_records(cfg, Stage::analyze);
  const std::size_t n = std::min(cfg.sample_size, accepted.size());
  std::vector<json> lines;
  for (const auto& p : sample_pairs(accepted, n, cfg.seed))
    lines.push_back({{"pair_id", p.pair_id}, {"original", p.original}, {"candidate", p.candidate}});
  jsonl::write_file(path_in(cfg, artifact::kSample), lines);
  std::cerr << "analyze: " << scores.size() << " transfers, sampled " << n << " pairs\n";
}

}  // namespace

json read_manifest(const std::string& out_dir) {
  const fs::path path = fs::path(out_dir) / artifact::kManifest;
  if (fs::exists(path)) return read_json(path.string());
  json manifest = {{"stages", json::object()}};
  for (Stage s : kStages) manifest["stages"][std::string(to_string(s))] = "pending";
  return manifest;
}

void run_stage(Stage stage, const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  set_status(config.out_dir, stage, "incomplete");
  try {
    switch (stage) {
      case Stage::segment: stage_segment(config); break;
      case Stage::simplify: stage_simplify(config); break;
      case Stage::threshold: stage_threshold(config); break;
      case Stage::evaluate: stage_evaluate(config); break;
      case Stage::reconstruct: stage_reconstruct(config); break;
      case Stage::analyze: stage_analyze(config); break;
    }
  } catch (const StageFailed&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailed(stage, e.what());
  }
  set_status(config.out_dir, stage, "complete");
}

std::size_t score_tsv(std::istream& in, std::ostream& out) {
  std::string line;
  std::size_t lineno = 0, scored = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() < 2 || fields.size() > 3)
      throw ParseError("line " + std::to_string(lineno), "expected 2 or 3 tab-separated fields");
    std::vector<std::string> refs;
    if (fields.size() == 3 && !fields[2].empty()) {
      std::size_t p = 0;
      for (;;) {
        const std::size_t sep = fields[2].find("|||", p);
        refs.push_back(utf8::trim(fields[2].substr(p, sep == std::string::npos ? std::string::npos : sep - p)));
        if (sep == std::string::npos) break;
        p = sep + 3;
      }
    }
    metrics::TransferScores s;
    try {
      s = metrics::score_transfer(fields[0], fields[1], refs);
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(lineno), e.what());
    }
    jsonl::write(out, {{"bleu", jsonl::round6(s.bleu)},
                       {"sari", jsonl::round6(s.sari)},
                       {"fkgl_original", jsonl::round6(s.fkgl_original)},
                       {"fkgl_transferred", jsonl::round6(s.fkgl_transferred)}});
    ++scored;
  }
  return scored;
}

void run_pipeline(const PipelineConfig& config) {
  for (Stage s : kStages) run_stage(s, config);
}

}  // namespace splitqa
