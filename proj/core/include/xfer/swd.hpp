#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xfer/types.hpp"

namespace xfer {

struct SwdConfig {
  static constexpr int kPNorm = 1;
  int n_projections = 128;
  int batch_size = 256;
  std::uint64_t seed = 42;
};

/// Equal-size source/target samples at one timestep.
struct LatentBatchPair {
  Matrix source;
  Matrix target;
};

/// 1-D Wasserstein-1 distance between equal-size empirical measures:
/// mean absolute difference of the order statistics.
double w1_1d(std::span<const double> a, std::span<const double> b);

/// `count` directions drawn uniformly on the unit sphere, one per column.
Matrix sample_directions(Eigen::Index dim, int count, std::uint64_t seed, std::uint64_t stream);

/// Monte Carlo sliced W1 over cfg.n_projections random directions. `stream`
/// selects an independent direction set for the same seed.
double sliced_w1(const LatentBatchPair& pair, const SwdConfig& cfg, std::uint64_t stream = 0);

struct SwdResult {
  double score = 0.0;  // median over timesteps; larger means harder transfer
  std::vector<double> per_timestep;
  Eigen::Index t_eval = 0;
  Eigen::Index batch_rows = 0;  // samples per side actually compared
};

/// Per-timestep sliced W1 between frame-t latents of each side, truncated to
/// the shortest utterance, aggregated by the median.
SwdResult swd_score(std::span<const FeatureMatrix> source, std::span<const FeatureMatrix> target,
                    const SwdConfig& cfg);

/// Frame-t rows of every utterance, subsampled to at most `rows` with the
/// (seed, t, side) stream.
Matrix timestep_batch(std::span<const FeatureMatrix> utts, Eigen::Index t, Eigen::Index rows, std::uint64_t seed,
                      std::uint64_t side);

}  // namespace xfer
