#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "splitqa/annotation.hpp"
#include "splitqa/jsonl.hpp"
#include "splitqa/pipeline.hpp"

using namespace splitqa;

namespace {

AnnotationServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(const std::string& listen, const std::string& data_dir, const std::string& ui_dir) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ValidationError("--listen expects host:port, got " + listen);
  const std::string host = listen.substr(0, colon);
  const int port = std::stoi(listen.substr(colon + 1));
  AnnotationStore store(data_dir);
  AnnotationServer server(store, ui_dir);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "annotation service on http://" << host << ':' << port << " (data in " << data_dir
            << ")\n";
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok) {
    std::cerr << "splitqa: cannot listen on " << listen << '\n';
    return 1;
  }
  return 0;
}

int create_task(const std::string& sample_path, const std::string& data_dir,
                const std::string& kind) {
  std::vector<SampledPair> pairs;
  for (const auto& j : jsonl::read_file(sample_path))
    pairs.push_back({j.at("pair_id").get<std::string>(), j.at("original").get<std::string>(),
                     j.at("candidate").get<std::string>()});
  AnnotationStore store(data_dir);
  const AnnotationTask task = store.create_task(pairs, parse_task_kind(kind));
  std::cout << task.task_id << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split-and-rephrase transfer pipeline for extractive QA corpora"};
  app.set_config("--config", "", "Key=value configuration file; flags override it");
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string listen = "127.0.0.1:8080";
  std::string data_dir = "annotations";
  std::string ui_dir;
  bool no_numeric_gate = false;

  app.add_option("--input", cfg.input, "SQuAD-format input corpus");
  app.add_option("--out-dir", cfg.out_dir, "Directory for artifacts and the manifest")
      ->capture_default_str();
  app.add_option("--abbreviations", cfg.abbreviations,
                 "Abbreviation list for segmentation (default: bundled list)");
  app.add_option("--backend", cfg.backend,
                 "Simplifier: builtin:identity, builtin:rule_split, exec:<command> or http://host:port")
      ->capture_default_str();
  app.add_option("--scorer", cfg.scorer, "Perplexity scorer: builtin:stub, exec:<command> or http://host:port")
      ->capture_default_str();
  app.add_option("--stub-corpus", cfg.stub_corpus,
                 "Training text for builtin:stub, one sentence per line (default: bundled)");
  app.add_option("--ppl-low", cfg.gates.perplexity_low, "Lowest accepted perplexity")
      ->capture_default_str();
  app.add_option("--ppl-high", cfg.gates.perplexity_high, "Highest accepted perplexity")
      ->capture_default_str();
  app.add_option("--min-words", cfg.gates.min_original_words,
                 "Minimum word count of the original sentence")
      ->capture_default_str();
  app.add_flag("--no-numeric-gate", no_numeric_gate, "Do not require numeric tokens to survive");
  app.add_option("--seed", cfg.seed, "Seed for pair sampling")->capture_default_str();
  app.add_option("--sample-size", cfg.sample_size, "Pairs sampled for human evaluation")
      ->capture_default_str();
  app.add_option("--in-flight", cfg.in_flight, "Maximum outstanding backend requests")
      ->capture_default_str();
  app.add_option("--listen", listen, "Annotation service address host:port")
      ->capture_default_str();
  app.add_option("--data-dir", data_dir, "Annotation data directory")->capture_default_str();

  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  const std::pair<Stage, const char*> descriptions[] = {
      {Stage::segment, "Split contexts into sentences"},
      {Stage::simplify, "Send sentences to the simplifier backend (resumable)"},
      {Stage::threshold, "Score candidates and apply the quality gates"},
      {Stage::evaluate, "Compute BLEU, SARI and FKGL on accepted transfers"},
      {Stage::reconstruct, "Rebuild contexts and realign answer offsets"},
      {Stage::analyze, "Length-bucket analysis and evaluation sample"},
  };
  for (const auto& [stage, help] : descriptions) {
    auto* cmd = app.add_subcommand(std::string(to_string(stage)), help);
    cmd->fallthrough();
    stage_cmds.emplace_back(cmd, stage);
  }
  auto* run = app.add_subcommand("run", "Run every stage in order")->fallthrough();

  auto* annotate = app.add_subcommand("annotate", "Human evaluation service")->fallthrough();
  annotate->require_subcommand(1);
  auto* serve_cmd = annotate->add_subcommand("serve", "Serve the annotation API")->fallthrough();
  serve_cmd->add_option("--ui-dir", ui_dir, "Static UI files served at /");
  std::string sample_path;
  std::string kind = "quality_rating";
  auto* task_cmd =
      annotate->add_subcommand("create-task", "Create a task from a sample file")->fallthrough();
  task_cmd->add_option("--sample", sample_path, "Sample file (default: <out-dir>/sample.jsonl)");
  task_cmd->add_option("--kind", kind, "quality_rating or edit_classification")
      ->capture_default_str();

  std::string score_input;
  auto* score_cmd = app.add_subcommand(
      "score", "Score original<TAB>transferred[<TAB>refs joined by |||] lines from a file or stdin");
  score_cmd->add_option("file", score_input, "Input file (default: stdin)");

  CLI11_PARSE(app, argc, argv);
  cfg.gates.enforce_numeric = !no_numeric_gate;

  try {
    if (*score_cmd) {
      if (score_input.empty()) {
        score_tsv(std::cin, std::cout);
      } else {
        std::ifstream in(score_input);
        if (!in) throw Error("cannot open " + score_input);
        score_tsv(in, std::cout);
      }
      return 0;
    }
    if (*serve_cmd) return serve(listen, data_dir, ui_dir);
    if (*task_cmd) {
      if (sample_path.empty())
        sample_path = (std::filesystem::path(cfg.out_dir) / artifact::kSample).string();
      return create_task(sample_path, data_dir, kind);
    }
    if (*run) {
      run_pipeline(cfg);
      return 0;
    }
    for (const auto& [cmd, stage] : stage_cmds) {
      if (*cmd) {
        run_stage(stage, cfg);
        return 0;
      }
    }
  } catch (const StageFailed& e) {
    std::cerr << "splitqa: " << to_string(e.stage()) << " failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "splitqa: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
