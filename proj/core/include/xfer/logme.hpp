#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Householder>
#include <Eigen/QR>

#include "xfer/align.hpp"
#include "xfer/types.hpp"

namespace xfer {

/// Singular-value factorization of a feature matrix F (n x D), computed once
/// and shared across every target regressed on F. Only the left singular
/// coordinates of a target (U^T y) and its out-of-span residual are needed,
/// so the n x n (or n x D) left factor is never materialised for n >= D.
class SpectralFactor {
 public:
  struct Projection {
    Vector coords;          // U^T y, length min(n, D)
    double out_of_span_sq;  // ||y - U U^T y||^2
  };

  explicit SpectralFactor(const Matrix& features);

  Eigen::Index samples() const noexcept { return samples_; }
  Eigen::Index dim() const noexcept { return dim_; }
  /// Squared singular values, length min(n, D).
  const Vector& sigma_sq() const noexcept { return sigma_sq_; }

  Projection project(const Vector& target) const;
  /// Maps coefficients in the right singular basis back to weight space.
  Vector to_weights(const Vector& coeffs) const { return right_ * coeffs; }

 private:
  Eigen::Index samples_;
  Eigen::Index dim_;
  Vector sigma_sq_;
  Matrix right_;  // D x k right singular vectors
  Matrix left_;   // n < D: n x n left vectors; n >= D: left vectors of R
  Eigen::HouseholderQR<Matrix> qr_;
  bool tall_;
};

struct EvidenceOptions {
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double tolerance = 1e-6;
  int max_iterations = 200;
  double precision_cap = 1e12;
  double zero_residual = 1e-12;
};

struct EvidenceState {
  double alpha = 1.0;
  double beta = 1.0;
  Vector m;             // posterior mean weights
  double gamma = 0.0;   // effective number of well-determined directions
  double log_evidence = 0.0;
  int iterations = 0;
  bool converged = false;
  bool beta_capped = false;   // y (numerically) in the column span of F
  bool alpha_capped = false;  // posterior mean collapsed to zero
};

/// log p(y | F, alpha, beta) for the Bayesian linear model with prior
/// w ~ N(0, alpha^-1 I) and noise precision beta.
double evidence(const Matrix& features, const Vector& target, double alpha, double beta);
double evidence(const SpectralFactor& factor, const SpectralFactor::Projection& proj, double alpha,
                double beta);

/// MacKay fixed-point maximisation of the evidence over (alpha, beta).
EvidenceState maximize_evidence(const Matrix& features, const Vector& target, const EvidenceOptions& options = {});
EvidenceState maximize_evidence(const SpectralFactor& factor, const SpectralFactor::Projection& proj,
                                const EvidenceOptions& options = {});

struct ClassEvidence {
  Label label = 0;
  double log_evidence = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  int iterations = 0;
  bool converged = false;
  bool beta_capped = false;
  bool alpha_capped = false;
};

struct LogMEScore {
  double score = 0.0;  // mean over evaluated classes of log-evidence, divided by n
  std::vector<ClassEvidence> per_class;
  LabelSeq skipped_classes;  // absent or present in every sample
  Eigen::Index n_samples = 0;
  Label n_classes = 0;
  std::vector<std::string> flags;
};

/// One-vs-rest LogME over one-hot targets, averaged across evaluable classes.
LogMEScore logme_classification(const Matrix& features, std::span<const Label> labels, Label vocab_size,
                                 const EvidenceOptions& options = {});

/// LogME over (frame, label) pairs pooled from forced alignments; blank
/// frames are dropped.
LogMEScore logme_ctc(std::span<const FeatureMatrix> features, std::span<const FrameAlignment> alignments,
                     Label vocab_size, const EvidenceOptions& options = {});

}  // namespace xfer
