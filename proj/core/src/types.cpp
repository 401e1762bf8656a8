#include "xfer/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xfer/error.hpp"

namespace xfer {

FeatureMatrix::FeatureMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    fail(ErrorCode::DegenerateShape, "feature matrix must have at least one row and one column, got " +
                                         std::to_string(values_.rows()) + "x" +
                                         std::to_string(values_.cols()));
  }
  if (!values_.allFinite()) {
    fail(ErrorCode::NonFiniteInput, "feature matrix contains NaN or Inf");
  }
}

PosteriorGrid::PosteriorGrid(Matrix log_probs) : log_probs_(std::move(log_probs)) {
  if (log_probs_.rows() < 1 || log_probs_.cols() < 2) {
    fail(ErrorCode::DegenerateShape, "posterior grid needs T >= 1 frames and V+1 >= 2 columns");
  }
  for (Eigen::Index t = 0; t < log_probs_.rows(); ++t) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < log_probs_.cols(); ++k) {
      const double v = log_probs_(t, k);
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        fail(ErrorCode::NonFiniteInput, "posterior grid contains NaN or +Inf at frame " + std::to_string(t));
      }
      if (v > kMaxEntry) {
        fail(ErrorCode::DomainError, "posterior log-probability above zero at frame " + std::to_string(t));
      }
      row_max = std::max(row_max, v);
    }
    if (std::isinf(row_max)) {
      fail(ErrorCode::DomainError, "posterior row " + std::to_string(t) + " has no mass");
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < log_probs_.cols(); ++k) sum += std::exp(log_probs_(t, k) - row_max);
    const double lse = row_max + std::log(sum);
    if (std::abs(lse) > kRowNormTolerance) {
      fail(ErrorCode::DomainError, "posterior row " + std::to_string(t) + " log-sum-exp is " + std::to_string(lse));
    }
  }
}

PosteriorGrid PosteriorGrid::uniform(Eigen::Index frames, Label vocab_size) {
  const double lp = -std::log(static_cast<double>(vocab_size) + 1.0);
  return PosteriorGrid(Matrix::Constant(frames, vocab_size + 1, lp));
}

}  // namespace xfer
