#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace xfer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Token index. Vocabulary symbols occupy [0, V); the CTC blank is V.
using Label = std::int32_t;
using LabelSeq = std::vector<Label>;

/// n x D matrix of extracted representations, one row per sample or frame.
/// Construction enforces n >= 1, D >= 1 and finiteness of every entry.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.values_ == b.values_;
  }

 private:
  Matrix values_;
};

/// T x (V+1) natural-log posterior matrix; the last column is the blank.
class PosteriorGrid {
 public:
  static constexpr double kRowNormTolerance = 1e-4;
  static constexpr double kMaxEntry = 1e-6;

  explicit PosteriorGrid(Matrix log_probs);

  /// Every symbol equally likely at every frame.
  static PosteriorGrid uniform(Eigen::Index frames, Label vocab_size);

  const Matrix& log_probs() const noexcept { return log_probs_; }
  Eigen::Index frames() const noexcept { return log_probs_.rows(); }
  Label vocab_size() const noexcept { return static_cast<Label>(log_probs_.cols() - 1); }
  Label blank() const noexcept { return vocab_size(); }
  double operator()(Eigen::Index t, Label symbol) const { return log_probs_(t, symbol); }

 private:
  Matrix log_probs_;
};

}  // namespace xfer
