#include "xfer/swd.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "xfer/error.hpp"
#include "xfer/stats.hpp"

namespace xfer {
namespace {

constexpr std::uint64_t kDirectionTag = 0x5744;  // "WD"
constexpr int kProjectionBlock = 1024;

}  // namespace

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::LengthMismatch, "w1_1d needs equal sizes, got " + std::to_string(a.size()) + " and " +
                                        std::to_string(b.size()));
  }
  if (a.empty()) fail(ErrorCode::EmptyDomain, "w1_1d of empty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double total = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
  return total / static_cast<double>(sa.size());
}

Matrix sample_directions(Eigen::Index dim, int count, std::uint64_t seed, std::uint64_t stream) {
  if (dim < 1) fail(ErrorCode::ZeroDimension, "directions need D >= 1");
  auto rng = make_stream(seed, stream, kDirectionTag);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix dirs(dim, count);
  for (int j = 0; j < count; ++j) {
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index d = 0; d < dim; ++d) dirs(d, j) = normal(rng);
      norm = dirs.col(j).norm();
    }
    dirs.col(j) /= norm;
  }
  return dirs;
}

double sliced_w1(const LatentBatchPair& pair, const SwdConfig& cfg, std::uint64_t stream) {
  const Eigen::Index dim = pair.source.cols();
  if (dim < 1 || pair.target.cols() < 1) fail(ErrorCode::ZeroDimension, "sliced W1 needs D >= 1");
  if (pair.target.cols() != dim) fail(ErrorCode::DimensionMismatch, "source and target dimensions differ");
  if (pair.source.rows() != pair.target.rows()) {
    fail(ErrorCode::LengthMismatch, "source and target batches differ in size");
  }
  if (pair.source.rows() < 1) fail(ErrorCode::EmptyDomain, "empty batch");
  if (cfg.n_projections < 1) fail(ErrorCode::InvalidArgument, "need at least one projection");

  const Matrix dirs = sample_directions(dim, cfg.n_projections, cfg.seed, stream);
  const Eigen::Index rows = pair.source.rows();
  double total = 0.0;
  Matrix ps, pt;
  std::vector<double> a(static_cast<std::size_t>(rows)), b(static_cast<std::size_t>(rows));
  for (int start = 0; start < cfg.n_projections; start += kProjectionBlock) {
    const int width = std::min(kProjectionBlock, cfg.n_projections - start);
    ps.noalias() = pair.source * dirs.middleCols(start, width);
    pt.noalias() = pair.target * dirs.middleCols(start, width);
    for (int j = 0; j < width; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        a[static_cast<std::size_t>(i)] = ps(i, j);
        b[static_cast<std::size_t>(i)] = pt(i, j);
      }
      total += w1_1d(a, b);
    }
  }
  return total / static_cast<double>(cfg.n_projections);
}

Matrix timestep_batch(std::span<const FeatureMatrix> utts, Eigen::Index t, Eigen::Index rows, std::uint64_t seed,
                      std::uint64_t side) {
  auto rng = make_stream(seed, static_cast<std::uint64_t>(t), side);
  const auto picks = subsample_indices(utts.size(), static_cast<std::size_t>(rows), rng);
  Matrix batch(static_cast<Eigen::Index>(picks.size()), utts.front().cols());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    batch.row(static_cast<Eigen::Index>(i)) = utts[picks[i]].values().row(t);
  }
  return batch;
}

SwdResult swd_score(std::span<const FeatureMatrix> source, std::span<const FeatureMatrix> target,
                    const SwdConfig& cfg) {
  if (source.empty() || target.empty()) fail(ErrorCode::EmptyDomain, "SWD needs utterances on both sides");
  if (cfg.batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  const Eigen::Index dim = source.front().cols();
  Eigen::Index t_eval = source.front().rows();
  for (const auto side : {source, target}) {
    for (const auto& u : side) {
      if (u.cols() != dim) fail(ErrorCode::DimensionMismatch, "feature dimension differs between domains");
      t_eval = std::min(t_eval, u.rows());
    }
  }

  const auto rows = std::min<Eigen::Index>(
      {static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(target.size()), cfg.batch_size});
  SwdResult out;
  out.t_eval = t_eval;
  out.batch_rows = rows;
  out.per_timestep.reserve(static_cast<std::size_t>(t_eval));
  for (Eigen::Index t = 0; t < t_eval; ++t) {
    LatentBatchPair pair{timestep_batch(source, t, rows, cfg.seed, 1), timestep_batch(target, t, rows, cfg.seed, 2)};
    out.per_timestep.push_back(sliced_w1(pair, cfg, static_cast<std::uint64_t>(t)));
  }
  out.score = median(out.per_timestep);
  return out;
}

}  // namespace xfer
