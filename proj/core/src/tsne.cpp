#include "xfer/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "xfer/error.hpp"
#include "xfer/stats.hpp"

namespace xfer {
namespace {

constexpr double kEntropyTolerance = 1e-5;
constexpr int kBisectionSteps = 200;
constexpr double kJointFloor = 1e-12;
constexpr std::uint64_t kInitTag = 0x54534e45;  // "TSNE"

// Row probabilities for precision `beta` over shifted distances; returns entropy.
double row_entropy(const std::vector<double>& shifted, double beta, std::vector<double>& probs) {
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < shifted.size(); ++j) {
    probs[j] = std::exp(-beta * shifted[j]);
    sum += probs[j];
    weighted += shifted[j] * probs[j];
  }
  for (auto& p : probs) p /= sum;
  return std::log(sum) + beta * weighted / sum;
}

}  // namespace

double default_perplexity(Eigen::Index n) {
  return std::min(30.0, static_cast<double>(n - 1) / 3.0);
}

Matrix squared_distances(const Matrix& points) {
  const Eigen::Index n = points.rows();
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (points.row(i) - points.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

Matrix perplexity_calibration(const Matrix& distances_sq, double perplexity) {
  const Eigen::Index n = distances_sq.rows();
  if (distances_sq.cols() != n || n < 2) fail(ErrorCode::DegenerateShape, "distance matrix must be square, n >= 2");
  if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n - 1)) {
    fail(ErrorCode::InvalidArgument, "perplexity must lie in (0, n - 1), got " + std::to_string(perplexity));
  }
  const double target = std::log(perplexity);
  Matrix cond = Matrix::Zero(n, n);
  std::vector<double> shifted(static_cast<std::size_t>(n - 1));
  std::vector<double> probs(shifted.size());

  for (Eigen::Index i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0, k = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = distances_sq(i, j);
      if (!(d >= 0.0) || !std::isfinite(d)) fail(ErrorCode::DomainError, "distances must be finite and non-negative");
      shifted[static_cast<std::size_t>(k++)] = d;
      dmin = std::min(dmin, d);
    }
    std::size_t ties = 0;
    const double tie_eps = 1e-12 * std::max(1.0, dmin);
    for (auto& d : shifted) {
      d -= dmin;
      if (d <= tie_eps) {
        d = 0.0;
        ++ties;
      }
    }

    if (std::log(static_cast<double>(ties)) >= target - kEntropyTolerance) {
      for (std::size_t j = 0; j < shifted.size(); ++j) probs[j] = shifted[j] == 0.0 ? 1.0 / ties : 0.0;
    } else {
      double beta = 1.0;
      double lo = 0.0;
      double hi = std::numeric_limits<double>::infinity();
      bool done = false;
      for (int step = 0; step < kBisectionSteps; ++step) {
        const double h = row_entropy(shifted, beta, probs);
        if (std::abs(h - target) < kEntropyTolerance) {
          done = true;
          break;
        }
        if (h > target) {
          lo = beta;
          beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
        } else {
          hi = beta;
          beta = 0.5 * (beta + lo);
        }
      }
      if (!done) {
        fail(ErrorCode::BandwidthSearchFailed, "bandwidth search did not converge for row " + std::to_string(i));
      }
    }
    for (Eigen::Index j = 0, k = 0; j < n; ++j) {
      if (j != i) cond(i, j) = probs[static_cast<std::size_t>(k++)];
    }
  }
  return cond;
}

Matrix joint_probabilities(const Matrix& conditional) {
  const Eigen::Index n = conditional.rows();
  Matrix p = (conditional + conditional.transpose()) / (2.0 * static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) p(i, j) = i == j ? 0.0 : std::max(p(i, j), kJointFloor);
  }
  return p / p.sum();
}

double tsne_kl_divergence(const Matrix& joint, const Matrix& embedding) {
  const Eigen::Index n = joint.rows();
  Matrix num(n, n);
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    num(i, i) = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      num(i, j) = 1.0 / (1.0 + (embedding.row(i) - embedding.row(j)).squaredNorm());
      z += num(i, j);
    }
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || joint(i, j) <= 0.0) continue;
      kl += joint(i, j) * std::log(joint(i, j) / std::max(num(i, j) / z, std::numeric_limits<double>::min()));
    }
  }
  return kl;
}

TsneEmbedding tsne_embed(const Matrix& points, const TsneConfig& cfg) {
  const Eigen::Index n = points.rows();
  if (n > kTsneMaxPoints) {
    fail(ErrorCode::TooManyPoints, "exact t-SNE is limited to " + std::to_string(kTsneMaxPoints) + " points, got " +
                                       std::to_string(n) + "; subsample the input");
  }
  if (n < 4) fail(ErrorCode::DegenerateShape, "t-SNE needs at least 4 points");
  if (!points.allFinite()) fail(ErrorCode::NonFiniteInput, "non-finite t-SNE input");

  TsneEmbedding out;
  out.perplexity = cfg.perplexity.value_or(default_perplexity(n));
  const Matrix joint = joint_probabilities(perplexity_calibration(squared_distances(points), out.perplexity));

  auto rng = make_stream(cfg.seed, kInitTag, 0);
  std::normal_distribution<double> normal(0.0, cfg.init_scale);
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < 2; ++d) y(i, d) = normal(rng);
  }

  Matrix velocity = Matrix::Zero(n, 2);
  Matrix gains = Matrix::Ones(n, 2);
  Matrix grad(n, 2);
  Matrix num(n, n);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const double exaggeration = iter < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
    const double momentum = iter < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;

    double z = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double dx = y(i, 0) - y(j, 0);
        const double dy = y(i, 1) - y(j, 1);
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num(i, j) = v;
        num(j, i) = v;
        z += 2.0 * v;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double gx = 0.0;
      double gy = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = (exaggeration * joint(i, j) - num(i, j) / z) * num(i, j);
        gx += w * (y(i, 0) - y(j, 0));
        gy += w * (y(i, 1) - y(j, 1));
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index d = 0; d < 2; ++d) {
        const bool same_sign = (grad(i, d) > 0.0) == (velocity(i, d) > 0.0);
        gains(i, d) = std::max(same_sign ? gains(i, d) * 0.8 : gains(i, d) + 0.2, cfg.min_gain);
        velocity(i, d) = momentum * velocity(i, d) - cfg.learning_rate * gains(i, d) * grad(i, d);
        y(i, d) += velocity(i, d);
      }
    }
    y.rowwise() -= y.colwise().mean();

    if (iter + 1 == cfg.exaggeration_iterations) out.kl_after_exaggeration = tsne_kl_divergence(joint, y);
  }
  out.kl_final = tsne_kl_divergence(joint, y);
  out.coords = std::move(y);
  return out;
}

Matrix pool_frames(std::span<const FeatureMatrix> utts, Eigen::Index cap, std::uint64_t seed, std::uint64_t side) {
  Eigen::Index total = 0;
  for (const auto& u : utts) total += u.rows();
  Matrix all(total, utts.front().cols());
  Eigen::Index row = 0;
  for (const auto& u : utts) {
    all.middleRows(row, u.rows()) = u.values();
    row += u.rows();
  }
  if (total <= cap) return all;
  auto rng = make_stream(seed, 0, side);
  const auto picks = subsample_indices(static_cast<std::size_t>(total), static_cast<std::size_t>(cap), rng);
  Matrix out(cap, all.cols());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(picks[i]));
  }
  return out;
}

TsneResult tsne_score(std::span<const FeatureMatrix> source, std::span<const FeatureMatrix> target,
                      const TsneConfig& cfg) {
  if (source.empty() || target.empty()) fail(ErrorCode::EmptyDomain, "t-SNE score needs both domains");
  if (source.front().cols() != target.front().cols()) {
    fail(ErrorCode::DimensionMismatch, "feature dimension differs between domains");
  }
  const Matrix src = pool_frames(source, cfg.max_points_per_domain, cfg.seed, 1);
  const Matrix trg = pool_frames(target, cfg.max_points_per_domain, cfg.seed, 2);
  Matrix joint_pts(src.rows() + trg.rows(), src.cols());
  joint_pts << src, trg;

  TsneResult out;
  out.n_source = src.rows();
  out.n_target = trg.rows();

  const bool identical = (joint_pts.rowwise() - joint_pts.row(0)).cwiseAbs().maxCoeff() == 0.0;
  if (identical) {
    if (joint_pts.rows() < 4) fail(ErrorCode::DegenerateShape, "t-SNE needs at least 4 points");
    out.degenerate = true;
    out.perplexity = cfg.perplexity.value_or(default_perplexity(joint_pts.rows()));
    out.embedding = Matrix::Zero(joint_pts.rows(), 2);
    return out;
  }

  auto emb = tsne_embed(joint_pts, cfg);
  out.perplexity = emb.perplexity;
  out.embedding = std::move(emb.coords);
  for (int d = 0; d < 2; ++d) {
    std::vector<double> s(static_cast<std::size_t>(out.n_source)), t(static_cast<std::size_t>(out.n_target));
    for (Eigen::Index i = 0; i < out.n_source; ++i) s[static_cast<std::size_t>(i)] = out.embedding(i, d);
    for (Eigen::Index i = 0; i < out.n_target; ++i) {
      t[static_cast<std::size_t>(i)] = out.embedding(out.n_source + i, d);
    }
    out.source_median[static_cast<std::size_t>(d)] = median(s);
    out.target_median[static_cast<std::size_t>(d)] = median(t);
  }
  out.score = std::hypot(out.source_median[0] - out.target_median[0], out.source_median[1] - out.target_median[1]);
  const auto extent = (out.embedding.colwise().maxCoeff() - out.embedding.colwise().minCoeff()).eval();
  out.spread = extent.norm();
  return out;
}

}  // namespace xfer
