#include "xfer/logme.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

#include "xfer/error.hpp"

namespace xfer {
namespace {

void check_inputs(const Matrix& features, const Vector& target) {
  if (features.rows() < 2 || features.cols() < 1) {
    fail(ErrorCode::DegenerateShape, "evidence needs n >= 2 samples and D >= 1, got " +
                                         std::to_string(features.rows()) + "x" + std::to_string(features.cols()));
  }
  if (target.size() != features.rows()) {
    fail(ErrorCode::LengthMismatch, "target length " + std::to_string(target.size()) + " != sample count " +
                                        std::to_string(features.rows()));
  }
  if (!features.allFinite() || !target.allFinite()) fail(ErrorCode::NonFiniteInput, "non-finite evidence input");
}

struct Posterior {
  double mean_sq;   // m^T m
  double residual;  // ||y - F m||^2
  double gamma;
};

Posterior posterior(const SpectralFactor& f, const SpectralFactor::Projection& p, double alpha, double beta) {
  Posterior out{0.0, p.out_of_span_sq, 0.0};
  const Vector& s2 = f.sigma_sq();
  for (Eigen::Index i = 0; i < s2.size(); ++i) {
    const double denom = alpha + beta * s2[i];
    const double coef = beta * std::sqrt(s2[i]) * p.coords[i] / denom;
    const double resid = alpha * p.coords[i] / denom;
    out.mean_sq += coef * coef;
    out.residual += resid * resid;
    out.gamma += beta * s2[i] / denom;
  }
  return out;
}

Vector posterior_mean(const SpectralFactor& f, const SpectralFactor::Projection& p, double alpha, double beta) {
  const Vector& s2 = f.sigma_sq();
  Vector coeffs(s2.size());
  for (Eigen::Index i = 0; i < s2.size(); ++i) {
    coeffs[i] = beta * std::sqrt(s2[i]) * p.coords[i] / (alpha + beta * s2[i]);
  }
  return f.to_weights(coeffs);
}

}  // namespace

SpectralFactor::SpectralFactor(const Matrix& features)
    : samples_(features.rows()), dim_(features.cols()), tall_(features.rows() >= features.cols()) {
  if (samples_ < 1 || dim_ < 1) fail(ErrorCode::DegenerateShape, "empty feature matrix");
  if (tall_) {
    // F = Q R, R = Ur S V^T  =>  U = Q[:, :D] Ur.
    qr_.compute(features);
    const Matrix r = qr_.matrixQR().topRows(dim_).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    sigma_sq_ = svd.singularValues().array().square();
    left_ = svd.matrixU();
    right_ = svd.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> svd(features, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma_sq_ = svd.singularValues().array().square();
    left_ = svd.matrixU();
    right_ = svd.matrixV();
  }
}

SpectralFactor::Projection SpectralFactor::project(const Vector& target) const {
  if (target.size() != samples_) {
    fail(ErrorCode::LengthMismatch, "target length does not match sample count");
  }
  Projection p;
  if (tall_) {
    const Vector rotated = qr_.householderQ().adjoint() * target;
    p.coords = left_.transpose() * rotated.head(dim_);
    p.out_of_span_sq = rotated.tail(samples_ - dim_).squaredNorm();
  } else {
    p.coords = left_.transpose() * target;
    p.out_of_span_sq = (target - left_ * p.coords).squaredNorm();
  }
  return p;
}

double evidence(const SpectralFactor& f, const SpectralFactor::Projection& p, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) fail(ErrorCode::DomainError, "alpha and beta must be positive");
  const auto n = static_cast<double>(f.samples());
  const auto d = static_cast<double>(f.dim());
  const auto post = posterior(f, p, alpha, beta);
  double log_det = static_cast<double>(f.dim() - f.sigma_sq().size()) * std::log(alpha);
  for (Eigen::Index i = 0; i < f.sigma_sq().size(); ++i) log_det += std::log(alpha + beta * f.sigma_sq()[i]);
  return 0.5 * n * std::log(beta) + 0.5 * d * std::log(alpha) - 0.5 * n * std::log(2.0 * std::numbers::pi) -
         0.5 * beta * post.residual - 0.5 * alpha * post.mean_sq - 0.5 * log_det;
}

double evidence(const Matrix& features, const Vector& target, double alpha, double beta) {
  check_inputs(features, target);
  const SpectralFactor f(features);
  return evidence(f, f.project(target), alpha, beta);
}

EvidenceState maximize_evidence(const SpectralFactor& f, const SpectralFactor::Projection& p,
                                const EvidenceOptions& options) {
  if (f.samples() < 2) fail(ErrorCode::DegenerateShape, "evidence needs n >= 2 samples");
  if (f.sigma_sq().maxCoeff() <= 0.0) fail(ErrorCode::DegenerateShape, "feature matrix is all zero");
  const auto n = static_cast<double>(f.samples());

  EvidenceState st;
  st.alpha = options.alpha0;
  st.beta = options.beta0;
  st.log_evidence = evidence(f, p, st.alpha, st.beta);
  for (st.iterations = 1; st.iterations <= options.max_iterations; ++st.iterations) {
    const auto post = posterior(f, p, st.alpha, st.beta);
    st.gamma = post.gamma;
    if (post.mean_sq * options.precision_cap <= post.gamma) {
      st.alpha = options.precision_cap;
      st.alpha_capped = true;
    } else {
      st.alpha = post.gamma / post.mean_sq;
      st.alpha_capped = false;
    }
    if (post.residual < options.zero_residual) {
      st.beta = options.precision_cap;
      st.beta_capped = true;
    } else {
      st.beta = std::min((n - post.gamma) / post.residual, options.precision_cap);
      st.beta_capped = st.beta == options.precision_cap;
    }
    const double next = evidence(f, p, st.alpha, st.beta);
    const double change = std::abs(next - st.log_evidence);
    st.log_evidence = next;
    if (change < options.tolerance) {
      st.converged = true;
      break;
    }
  }
  if (!st.converged) st.iterations = options.max_iterations;
  st.gamma = posterior(f, p, st.alpha, st.beta).gamma;
  st.m = posterior_mean(f, p, st.alpha, st.beta);
  return st;
}

EvidenceState maximize_evidence(const Matrix& features, const Vector& target, const EvidenceOptions& options) {
  check_inputs(features, target);
  const SpectralFactor f(features);
  return maximize_evidence(f, f.project(target), options);
}

LogMEScore logme_classification(const Matrix& features, std::span<const Label> labels, Label vocab_size,
                                 const EvidenceOptions& options) {
  const Eigen::Index n = features.rows();
  if (n < 2 || features.cols() < 1) {
    fail(ErrorCode::DegenerateShape, "LogME needs n >= 2 samples and D >= 1");
  }
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    fail(ErrorCode::LengthMismatch, "label count " + std::to_string(labels.size()) + " != sample count " +
                                        std::to_string(n));
  }
  if (!features.allFinite()) fail(ErrorCode::NonFiniteInput, "non-finite features");

  std::vector<Eigen::Index> counts(static_cast<std::size_t>(vocab_size), 0);
  for (const Label l : labels) {
    if (l < 0 || l >= vocab_size) {
      fail(ErrorCode::InvalidLabel, "label " + std::to_string(l) + " outside [0, " + std::to_string(vocab_size) + ")");
    }
    ++counts[static_cast<std::size_t>(l)];
  }

  LogMEScore out;
  out.n_samples = n;
  out.n_classes = vocab_size;
  std::vector<Label> evaluable;
  for (Label k = 0; k < vocab_size; ++k) {
    const auto c = counts[static_cast<std::size_t>(k)];
    if (c == 0 || c == n) {
      out.skipped_classes.push_back(k);
    } else {
      evaluable.push_back(k);
    }
  }
  if (evaluable.empty()) fail(ErrorCode::NoEvaluableClass, "every one-vs-rest target is constant");

  const SpectralFactor factor(features);
  double total = 0.0;
  for (const Label k : evaluable) {
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0;
    const auto st = maximize_evidence(factor, factor.project(y), options);
    out.per_class.push_back(ClassEvidence{k, st.log_evidence, st.alpha, st.beta, st.gamma, st.iterations,
                                          st.converged, st.beta_capped, st.alpha_capped});
    total += st.log_evidence;
    const std::string tag = "class " + std::to_string(k) + ": ";
    if (!st.converged) out.flags.push_back(tag + "no_convergence");
    if (st.beta_capped) out.flags.push_back(tag + "zero_residual");
    if (st.alpha_capped) out.flags.push_back(tag + "alpha_capped");
  }
  out.score = total / static_cast<double>(out.per_class.size()) / static_cast<double>(n);
  return out;
}

LogMEScore logme_ctc(std::span<const FeatureMatrix> features, std::span<const FrameAlignment> alignments,
                     Label vocab_size, const EvidenceOptions& options) {
  const auto samples = frames_to_samples(features, alignments);
  if (samples.features.rows() == 0) fail(ErrorCode::EmptyAlignedSet, "every aligned frame is blank");
  return logme_classification(samples.features, samples.labels, vocab_size, options);
}

}  // namespace xfer
