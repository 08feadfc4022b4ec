#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "splitqa/error.hpp"
#include "splitqa/thresholding.hpp"

namespace splitqa {

struct PipelineConfig {
  std::string input;
  std::string out_dir = "out";
  std::string abbreviations;  // empty: builtin list
  std::string backend = "builtin:rule_split";
  std::string scorer = "builtin:stub";
  std::string stub_corpus;  // empty: bundled corpus
  GateConfig gates;
  std::uint64_t seed = 13;
  std::size_t sample_size = 50;
  std::size_t in_flight = 8;

  // Throws ValidationError for a bad gate config or a zero in-flight limit.
  void validate() const;
};

enum class Stage { segment, simplify, threshold, evaluate, reconstruct, analyze };

inline constexpr Stage kStages[] = {Stage::segment,  Stage::simplify,    Stage::threshold,
                                    Stage::evaluate, Stage::reconstruct, Stage::analyze};

std::string_view to_string(Stage stage);

// A stage that could not finish; the manifest marks it incomplete.
class StageFailed : public Error {
 public:
  StageFailed(Stage stage, const std::string& what) : Error(what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

// Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kSegments = "segments.jsonl";
inline constexpr const char* kJournal = "transfer.journal.jsonl";
inline constexpr const char* kTransfer = "transfer.jsonl";
inline constexpr const char* kThresholded = "thresholded.jsonl";
inline constexpr const char* kStageStats = "stage_stats.json";
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kMetricReport = "metric_report.json";
inline constexpr const char* kSimple = "simple.json";
inline constexpr const char* kOriginal = "original.json";
inline constexpr const char* kDrops = "drops.jsonl";
inline constexpr const char* kOffsets = "offsets.json";
inline constexpr const char* kAnalysis = "analysis.json";
inline constexpr const char* kAnalysisTable = "analysis.txt";
inline constexpr const char* kSample = "sample.jsonl";
}  // namespace artifact

// Each stage reads the previous stage's artifacts from config.out_dir and
// writes its own there, updating the manifest.
void run_stage(Stage stage, const PipelineConfig& config);
void run_pipeline(const PipelineConfig& config);

nlohmann::json read_manifest(const std::string& out_dir);

// Reads `original<TAB>transferred[<TAB>ref1|||ref2...]` lines and writes one
// JSON object of metric values per line. Returns the number of lines scored.
std::size_t score_tsv(std::istream& in, std::ostream& out);

}  // namespace splitqa
