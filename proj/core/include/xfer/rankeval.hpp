#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xfer/manifest.hpp"

namespace xfer {

enum class RankSource { MetricLowerBetter, MetricHigherBetter, Score };

/// Ranks with 1 = best; ties share the average of the positions they span.
struct RankVector {
  std::vector<double> ranks;
  RankSource source = RankSource::Score;

  std::size_t size() const noexcept { return ranks.size(); }
};

RankVector to_ranks(std::span<const double> values, MetricDirection direction);
RankVector to_ranks(std::span<const double> values, MetricDirection direction, RankSource source);

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::string method = "spearman";
};

/// Spearman's rho with a two-sided t-approximation p-value.
CorrelationResult spearman(const RankVector& a, const RankVector& b);
/// Raw values are ranked ascending on both sides first.
CorrelationResult spearman(std::span<const double> a, std::span<const double> b);

/// Two-sided p-value of rho under the t approximation with n - 2 degrees of
/// freedom; |rho| = 1 gives 0.
double spearman_t_pvalue(double rho, std::size_t n);

inline constexpr std::size_t kPermutationMaxN = 10;

/// Exact two-sided permutation p-value: share of all n! rearrangements of `b`
/// whose |rho| reaches the observed |rho|.
double spearman_permutation_pvalue(const RankVector& a, const RankVector& b);

/// Regularised incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double x, double a, double b);

enum class ScoreOrientation { HigherBetter, LowerBetter };

/// logme scores are higher-better; swd and tsne are difficulty scores.
ScoreOrientation default_orientation(std::string_view method);
std::string_view to_string(ScoreOrientation o) noexcept;

struct MethodColumn {
  std::string method;
  ScoreOrientation orientation = ScoreOrientation::HigherBetter;
  std::vector<std::string> candidate_ids;
  std::vector<double> scores;
  std::vector<std::optional<std::uint64_t>> seeds;  // empty or parallel to scores
};

struct GroundTruth {
  std::vector<std::string> candidate_ids;
  std::vector<double> metric;
  MetricDirection direction = MetricDirection::LowerBetter;
};

struct MethodRanking {
  std::string method;
  ScoreOrientation orientation = ScoreOrientation::HigherBetter;
  std::vector<double> scores;  // ground-truth candidate order
  RankVector ranks;
  CorrelationResult correlation;
  std::optional<double> permutation_p;  // n <= 8 only
  std::optional<std::uint64_t> seed;
};

struct RankingReport {
  std::vector<std::string> candidate_ids;
  std::vector<double> ground_truth;
  MetricDirection direction = MetricDirection::LowerBetter;
  RankVector ground_truth_ranks;
  std::vector<MethodRanking> methods;

  nlohmann::ordered_json to_json() const;
  /// Plain-text table: candidate, metric, Rank_FT, one rank column per method,
  /// then rho and p-value rows.
  std::string to_table() const;
};

RankingReport build_report(std::span<const MethodColumn> columns, const GroundTruth& truth);

}  // namespace xfer
