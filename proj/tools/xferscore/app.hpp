#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xfer/manifest.hpp"
#include "xfer/score.hpp"

namespace xfer::app {

enum class Method { LogME, Swd, Tsne };

Method parse_method(std::string_view name);
std::string_view to_string(Method m) noexcept;

struct RunConfig {
  Method method = Method::LogME;
  std::filesystem::path manifest;
  std::filesystem::path output;
  std::uint64_t seed = 42;
  int jobs = 1;
  int projections = 128;
  int batch_size = 256;
  std::optional<double> perplexity;
  bool pool_mean = false;
  std::optional<std::filesystem::path> dump_embedding;
  Eigen::Index max_points = 1000;
};

struct CandidateOutcome {
  std::string candidate_id;
  std::optional<TransferScore> score;
  std::string error_code;  // empty on success
  std::string message;
};

struct ScoreRun {
  nlohmann::ordered_json header;
  std::vector<CandidateOutcome> outcomes;

  bool ok() const;
  /// {"header": {...}, "records": [...], "errors": [...]}
  nlohmann::ordered_json to_json() const;
};

/// Scores every manifest candidate; failures are recorded per candidate.
ScoreRun run_score(const RunConfig& cfg);

/// Scores a single candidate; throws xfer::Error on failure.
TransferScore score_candidate(const Manifest& manifest, const CandidateSpec& candidate, const RunConfig& cfg);

/// Hex FNV-1a of the settings that determine the scores.
std::string config_hash(const RunConfig& cfg);

struct AlignRecord {
  std::string utt_id;
  LabelSeq assigned;
  double log_prob = 0.0;
};

/// Forced alignment of every utterance of one candidate, in label-file order.
std::vector<AlignRecord> run_align(const Manifest& manifest, const std::string& candidate_id);
std::string to_jsonl(const std::vector<AlignRecord>& records);

/// Accepts a score-run document, an array of records, or one record.
std::vector<TransferScore> read_score_file(const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path, MetricDirection direction);
GroundTruth ground_truth_from_manifest(const Manifest& manifest);

// Subcommand drivers; return the process exit status.
int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_align(const std::filesystem::path& manifest, const std::optional<std::string>& candidate,
              const std::filesystem::path& output, std::ostream& err);
int cmd_rank(const std::vector<std::filesystem::path>& score_files, const std::optional<std::filesystem::path>& truth,
             const std::optional<std::filesystem::path>& manifest, MetricDirection direction,
             const std::filesystem::path& output, const std::optional<std::filesystem::path>& table,
             std::ostream& out, std::ostream& err);
int cmd_selftest(std::ostream& out);

}  // namespace xfer::app
