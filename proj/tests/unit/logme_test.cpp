#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "xfer/logme.hpp"

using namespace xfer;
using xfer::testing::gaussian_matrix;

namespace {

Vector gaussian_vector(Eigen::Index n, std::mt19937_64& rng) { return gaussian_matrix(n, 1, rng).col(0); }

}  // namespace

TEST(Evidence, OneDimensionalAnalytic) {
  Matrix f(2, 1);
  f << 1, 1;
  const Vector y = Vector::Zero(2);
  const double expected = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(3.0);
  EXPECT_NEAR(evidence(f, y, 1.0, 1.0), expected, 1e-10);
  const double fv[2] = {1.0, 1.0}, yv[2] = {0.0, 0.0};
  EXPECT_NEAR(xfer::testing::quadrature_evidence_1d(fv, yv, 1.0, 1.0), expected, 1e-10);
}

TEST(Evidence, OneDimensionalQuadrature) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix f = gaussian_matrix(5, 1, rng);
    const Vector y = gaussian_vector(5, rng);
    const double alpha = 0.5 + trial, beta = 2.0 / (1 + trial);
    const double q = xfer::testing::quadrature_evidence_1d({f.data(), 5}, {y.data(), 5}, alpha, beta);
    EXPECT_NEAR(evidence(f, y, alpha, beta), q, 1e-10);
  }
}

TEST(Evidence, ZeroTargetClosedForm) {
  std::mt19937_64 rng(12);
  const Matrix f = gaussian_matrix(30, 7, rng);
  const Eigen::JacobiSVD<Matrix> svd(f);
  const double alpha = 0.3, beta = 4.0, n = 30, d = 7;
  double expected = 0.5 * n * std::log(beta) + 0.5 * d * std::log(alpha) - 0.5 * n * std::log(2 * std::numbers::pi);
  for (Eigen::Index i = 0; i < 7; ++i) {
    const double s = svd.singularValues()[i];
    expected -= 0.5 * std::log(alpha + beta * s * s);
  }
  EXPECT_NEAR(evidence(f, Vector::Zero(30), alpha, beta), expected, 1e-10);
}

TEST(Evidence, SvdPathMatchesDenseOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_n(2, 200), pick_d(1, 50);
  std::uniform_real_distribution<double> log_param(-3.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = trial < 3 ? 200 : pick_n(rng);
    const int d = trial < 3 ? 50 : pick_d(rng);
    const Matrix f = gaussian_matrix(n, d, rng);
    const Vector y = gaussian_vector(n, rng);
    const double alpha = std::exp(log_param(rng)), beta = std::exp(log_param(rng));
    EXPECT_NEAR(evidence(f, y, alpha, beta), xfer::testing::dense_evidence(f, y, alpha, beta), 1e-8)
        << n << "x" << d;
  }
}

TEST(Evidence, WideMatrices) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix f = gaussian_matrix(8, 40, rng);
    const Vector y = gaussian_vector(8, rng);
    EXPECT_NEAR(evidence(f, y, 2.0, 0.5), xfer::testing::dense_evidence(f, y, 2.0, 0.5), 1e-8);
  }
}

TEST(Evidence, Rejections) {
  EXPECT_XFER_ERROR(evidence(Matrix::Ones(1, 3), Vector::Ones(1), 1.0, 1.0), ErrorCode::DegenerateShape);
  Matrix bad = Matrix::Ones(3, 2);
  bad(0, 0) = std::nan("");
  EXPECT_XFER_ERROR(evidence(bad, Vector::Ones(3), 1.0, 1.0), ErrorCode::NonFiniteInput);
  EXPECT_XFER_ERROR(evidence(Matrix::Ones(3, 2), Vector::Ones(2), 1.0, 1.0), ErrorCode::LengthMismatch);
  EXPECT_XFER_ERROR(evidence(Matrix::Ones(3, 2), Vector::Ones(3), 0.0, 1.0), ErrorCode::DomainError);
  EXPECT_XFER_ERROR(maximize_evidence(Matrix::Zero(4, 2), Vector::Ones(4)), ErrorCode::DegenerateShape);
}

TEST(MaximizeEvidence, AttainsGridMaximum) {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> noise_level(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix f = gaussian_matrix(100, 5, rng);
    const Vector w = gaussian_vector(5, rng);
    const Vector y = f * w + noise_level(rng) * gaussian_vector(100, rng);
    const auto st = maximize_evidence(f, y);
    ASSERT_TRUE(st.converged);
    const auto grid = xfer::testing::grid_max_evidence(f, y);
    EXPECT_GE(st.log_evidence, grid.log_evidence - 1e-3) << "trial " << trial;
    EXPECT_NEAR(st.log_evidence, xfer::testing::dense_evidence(f, y, st.alpha, st.beta), 1e-8);
  }
}

TEST(MaximizeEvidence, StateInvariants) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + 10 * trial, d = 1 + trial % 12;
    const Matrix f = gaussian_matrix(n, d, rng);
    const Vector y = gaussian_vector(n, rng) + 0.5 * f.col(0);
    const auto st = maximize_evidence(f, y);
    EXPECT_GT(st.alpha, 0.0);
    EXPECT_GT(st.beta, 0.0);
    EXPECT_GE(st.gamma, 0.0);
    EXPECT_LE(st.gamma, std::min(n, d) + 1e-12);
    EXPECT_TRUE(std::isfinite(st.log_evidence));
    EXPECT_GE(st.log_evidence, evidence(f, y, 1.0, 1.0) - 1e-9);
    // m is the posterior mean at the returned precisions.
    const Matrix a = st.alpha * Matrix::Identity(d, d) + st.beta * f.transpose() * f;
    const Vector m = st.beta * a.ldlt().solve(f.transpose() * y);
    EXPECT_LT((st.m - m).norm(), 1e-8 * (1.0 + m.norm()));
  }
}

TEST(MaximizeEvidence, ZeroResidualIsCappedAndFlagged) {
  std::mt19937_64 rng(4);
  const Matrix f = gaussian_matrix(20, 3, rng);
  const Vector y = f * Vector::Ones(3);
  const auto st = maximize_evidence(f, y);
  EXPECT_TRUE(st.beta_capped);
  EXPECT_LE(st.beta, 1e12);
  EXPECT_TRUE(std::isfinite(st.log_evidence));
}

TEST(MaximizeEvidence, NoiseScoresBelowCorrelatedTarget) {
  std::mt19937_64 rng(77);
  const Matrix f = gaussian_matrix(200, 10, rng);
  Vector noise = gaussian_vector(200, rng);
  Vector corr = f * gaussian_vector(10, rng) + 0.3 * gaussian_vector(200, rng);
  corr *= noise.norm() / corr.norm();
  const auto sn = maximize_evidence(f, noise);
  const auto sc = maximize_evidence(f, corr);
  EXPECT_LT(sn.log_evidence, sc.log_evidence);
  EXPECT_LT(sn.gamma, 1.5);
  EXPECT_GT(sc.gamma, 9.0);
  const double scale = 200.0 / noise.squaredNorm();
  EXPECT_NEAR(sn.beta / scale, 1.0, 0.1);
}

TEST(LogME, ScoreIsMeanOverClassesDividedByN) {
  std::mt19937_64 rng(3);
  const auto blobs = xfer::testing::gaussian_blobs(30, 4, 3, 2.0, rng);
  const auto s = logme_classification(blobs.points, blobs.labels, 5);
  ASSERT_EQ(s.per_class.size(), 3u);
  EXPECT_EQ(s.skipped_classes, (LabelSeq{3, 4}));
  double sum = 0.0;
  for (const auto& c : s.per_class) sum += c.log_evidence;
  EXPECT_NEAR(s.score, sum / 3.0 / 90.0, 1e-12);
  EXPECT_EQ(s.n_samples, 90);
  for (const auto& c : s.per_class) EXPECT_TRUE(c.converged);
  EXPECT_TRUE(s.flags.empty());
}

TEST(LogME, SeparatedBlobsBeatShuffledLabels) {
  std::mt19937_64 rng(10);
  const auto blobs = xfer::testing::gaussian_blobs(50, 2, 2, 8.0, rng);
  auto shuffled = blobs.labels;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_GT(logme_classification(blobs.points, blobs.labels, 2).score,
            logme_classification(blobs.points, shuffled, 2).score);
}

TEST(LogME, SingleClassIsNotEvaluable) {
  const Matrix f = Matrix::Random(10, 3);
  const LabelSeq labels(10, 1);
  EXPECT_XFER_ERROR(logme_classification(f, labels, 3), ErrorCode::NoEvaluableClass);
  EXPECT_XFER_ERROR(logme_classification(f, LabelSeq(10, 3), 3), ErrorCode::InvalidLabel);
  EXPECT_XFER_ERROR(logme_classification(f, LabelSeq(9, 0), 3), ErrorCode::LengthMismatch);
}

TEST(LogME, RotationInvariance) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const auto blobs = xfer::testing::gaussian_blobs(40, 6, 4, 1.5, rng);
    const Matrix q = xfer::testing::random_orthogonal(6, rng);
    EXPECT_NEAR(logme_classification(blobs.points * q, blobs.labels, 4).score,
                logme_classification(blobs.points, blobs.labels, 4).score, 1e-8);
  }
}

TEST(LogME, SamplePermutationInvariance) {
  std::mt19937_64 rng(42);
  const auto blobs = xfer::testing::gaussian_blobs(40, 6, 4, 1.5, rng);
  std::vector<Eigen::Index> perm(160);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix f(160, 6);
  LabelSeq labels(160);
  for (Eigen::Index i = 0; i < 160; ++i) {
    f.row(i) = blobs.points.row(perm[static_cast<std::size_t>(i)]);
    labels[static_cast<std::size_t>(i)] = blobs.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  const auto a = logme_classification(blobs.points, blobs.labels, 4);
  const auto b = logme_classification(f, labels, 4);
  // Row order changes floating-point summation order inside the factorization;
  // agreement is to rounding level rather than bit-for-bit.
  EXPECT_NEAR(a.score, b.score, 1e-10);
  for (std::size_t k = 0; k < a.per_class.size(); ++k)
    EXPECT_NEAR(a.per_class[k].log_evidence, b.per_class[k].log_evidence, 1e-10 * 160);
}

TEST(LogME, IsDeterministic) {
  std::mt19937_64 rng(43);
  const auto blobs = xfer::testing::gaussian_blobs(30, 5, 3, 1.0, rng);
  EXPECT_EQ(logme_classification(blobs.points, blobs.labels, 3).score,
            logme_classification(blobs.points, blobs.labels, 3).score);
}

TEST(LogMECtc, AllBlankIsEmpty) {
  const std::vector<FeatureMatrix> feats{FeatureMatrix(Matrix::Ones(3, 2))};
  FrameAlignment a;
  a.assigned = {2, 2, 2};
  a.blank = 2;
  const std::vector<FrameAlignment> al{a};
  EXPECT_XFER_ERROR(logme_ctc(feats, al, 2), ErrorCode::EmptyAlignedSet);
}

TEST(LogMECtc, CompositionIdentity) {
  std::mt19937_64 rng(17);
  const Matrix f = gaussian_matrix(8, 3, rng);
  FrameAlignment a;
  a.assigned = {3, 0, 0, 3, 1, 2, 2, 3};
  a.blank = 3;
  const std::vector<FeatureMatrix> feats{FeatureMatrix(f)};
  const std::vector<FrameAlignment> al{a};
  Matrix pooled(5, 3);
  pooled << f.row(1), f.row(2), f.row(4), f.row(5), f.row(6);
  const LabelSeq labels{0, 0, 1, 2, 2};
  const auto ctc = logme_ctc(feats, al, 3);
  EXPECT_EQ(ctc.score, logme_classification(pooled, labels, 3).score);
  EXPECT_EQ(ctc.n_samples, 5);
}

TEST(LogMECtc, ClusteredFramesBeatReassignedLabels) {
  const auto bench = xfer::testing::make_sequence_benchmark(5, 6, 30);
  const auto& feats = bench.layers.back();
  std::vector<FrameAlignment> aligned;
  for (std::size_t u = 0; u < feats.size(); ++u) aligned.push_back(viterbi_align(bench.posteriors[u], bench.labels[u]));
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<Label> pick(0, bench.vocab_size - 1);
  auto scrambled = aligned;
  for (auto& a : scrambled)
    for (auto& s : a.assigned)
      if (s != a.blank) s = pick(rng);
  EXPECT_GT(logme_ctc(feats, aligned, bench.vocab_size).score,
            logme_ctc(feats, scrambled, bench.vocab_size).score);
}

TEST(LogME, LayerBenchmarkOrdering) {
  const auto bench = xfer::testing::make_layer_benchmark(1234);
  double previous = -std::numeric_limits<double>::infinity();
  for (const auto& layer : bench.layers) {
    const double s = logme_classification(layer, bench.labels, bench.classes).score;
    EXPECT_GT(s, previous);
    previous = s;
  }
}
