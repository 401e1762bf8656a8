#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "xfer/types.hpp"

namespace xfer {

inline constexpr Eigen::Index kTsneMaxPoints = 5000;

struct TsneConfig {
  /// Defaults to min(30, (n - 1) / 3) when unset.
  std::optional<double> perplexity;
  int iterations = 1000;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  double exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double init_scale = 1e-4;
  double min_gain = 0.01;
  std::uint64_t seed = 42;
  /// Per-domain cap applied by tsne_score before embedding.
  Eigen::Index max_points_per_domain = 1000;
};

double default_perplexity(Eigen::Index n);

Matrix squared_distances(const Matrix& points);

/// Row-wise conditional probabilities p_{j|i} whose Shannon entropy matches
/// log(perplexity) to within 1e-5, found by bisection on the Gaussian
/// precision of each row. Rows whose nearest neighbours are tied and whose
/// entropy can never drop to the target get the limiting (uniform over the
/// tied nearest) distribution.
Matrix perplexity_calibration(const Matrix& distances_sq, double perplexity);

/// Symmetrised joint P = (C + C^T) / 2n, off-diagonal floored at 1e-12 and
/// renormalised to sum to one.
Matrix joint_probabilities(const Matrix& conditional);

/// KL(P || Q) for the Student-t similarity Q of an embedding.
double tsne_kl_divergence(const Matrix& joint, const Matrix& embedding);

struct TsneEmbedding {
  Matrix coords;  // n x 2
  double perplexity = 0.0;
  double kl_after_exaggeration = 0.0;
  double kl_final = 0.0;
};

/// Exact O(n^2) t-SNE into two dimensions.
TsneEmbedding tsne_embed(const Matrix& points, const TsneConfig& cfg);

struct TsneResult {
  double score = 0.0;   // distance between per-domain coordinate-wise medians
  double spread = 0.0;  // diagonal of the embedding's bounding box
  std::array<double, 2> source_median{};
  std::array<double, 2> target_median{};
  Eigen::Index n_source = 0;
  Eigen::Index n_target = 0;
  double perplexity = 0.0;
  bool degenerate = false;  // every pooled point identical; no embedding run
  Matrix embedding;         // source rows first, then target rows
};

TsneResult tsne_score(std::span<const FeatureMatrix> source, std::span<const FeatureMatrix> target,
                      const TsneConfig& cfg);

/// Stacks all frames of all utterances, keeping at most `cap` rows chosen by
/// the (seed, side) stream.
Matrix pool_frames(std::span<const FeatureMatrix> utts, Eigen::Index cap, std::uint64_t seed, std::uint64_t side);

}  // namespace xfer
