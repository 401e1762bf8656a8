#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xfer/types.hpp"

namespace xfer {

enum class TaskKind { Classification, Sequence };
enum class MetricDirection { LowerBetter, HigherBetter };

std::string_view to_string(TaskKind kind) noexcept;
std::string_view to_string(MetricDirection direction) noexcept;
MetricDirection parse_metric_direction(std::string_view text);

struct CandidateSpec {
  std::string id;
  /// Directory of <utt_id>.npy files, a JSONL sidecar of {"utt_id","path"},
  /// or a single .npy whose rows follow the label file order.
  std::filesystem::path features;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> posteriors;
  bool uniform_posteriors = false;
  std::optional<double> ground_truth_metric;
  MetricDirection metric_direction = MetricDirection::LowerBetter;
  /// Overrides the manifest-level source domain for this candidate.
  std::optional<std::filesystem::path> source_features;
};

struct Manifest {
  TaskKind task_kind = TaskKind::Sequence;
  std::vector<CandidateSpec> candidates;
  std::optional<std::filesystem::path> source_features;
  std::optional<Label> vocab_size;
  std::filesystem::path base_dir;

  const CandidateSpec& candidate(std::string_view id) const;
  std::optional<std::filesystem::path> source_for(const CandidateSpec& c) const;
};

/// Parses and validates a manifest; relative paths resolve against base_dir.
Manifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

struct LabeledUtterance {
  std::string utt_id;
  LabelSeq labels;
};

struct LabelData {
  std::vector<LabeledUtterance> utterances;
  Label vocab_size = 0;
};

/// Reads labels JSONL. When vocab_size is absent it is inferred as max label + 1.
LabelData read_labels(const std::filesystem::path& path, std::optional<Label> vocab_size = std::nullopt);

struct AssembleOptions {
  /// Replace every utterance by the 1 x D mean of its frames.
  bool pool_mean = false;
};

struct CandidateDataset {
  std::string candidate_id;
  TaskKind task_kind = TaskKind::Sequence;
  std::vector<FeatureMatrix> features;  // parallel to labels.utterances
  LabelData labels;
  std::vector<PosteriorGrid> posteriors;  // empty when absent or uniform
  bool uniform_posteriors = false;
  bool pooled = false;

  std::size_t size() const noexcept { return features.size(); }
  Eigen::Index dim() const noexcept { return features.empty() ? 0 : features.front().cols(); }
};

CandidateDataset assemble_dataset(const Manifest& manifest, std::string_view candidate_id,
                                  const AssembleOptions& options = {});

/// Loads an unlabeled domain (e.g. source-domain latents): every .npy in a
/// directory sorted by file name, a JSONL sidecar in listed order, or one file.
std::vector<FeatureMatrix> load_domain(const std::filesystem::path& path);

/// 1 x D arithmetic mean of the rows.
FeatureMatrix mean_pool(const FeatureMatrix& frames);

}  // namespace xfer
