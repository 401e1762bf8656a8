#include "xfer/rankeval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "xfer/error.hpp"

namespace xfer {
namespace {

bool all_distinct(const std::vector<double>& r) {
  std::vector<double> s(r);
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) == s.end();
}

bool integral(const std::vector<double>& r) {
  return std::all_of(r.begin(), r.end(), [](double v) { return v == std::floor(v); });
}

double rho_of(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = a.size();
  if (all_distinct(a) && all_distinct(b) && integral(a) && integral(b)) {
    // Exact integer arithmetic: 1 - 6 sum d^2 / (n (n^2 - 1)).
    double sum_d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum_d2 += (a[i] - b[i]) * (a[i] - b[i]);
    const double nn = static_cast<double>(n);
    const double denom = nn * (nn * nn - 1.0);
    return (denom - 6.0 * sum_d2) / denom;
  }
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

void check_pair(std::size_t na, std::size_t nb) {
  if (na != nb) fail(ErrorCode::LengthMismatch, "rank vectors differ in length");
  if (na < 3) fail(ErrorCode::TooFewPoints, "Spearman correlation needs n >= 3");
}

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double x, double a, double b) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string rank_text(double r) { return r == std::floor(r) ? fmt("%.0f", r) : fmt("%.1f", r); }

}  // namespace

RankVector to_ranks(std::span<const double> values, MetricDirection direction) {
  return to_ranks(values, direction,
                  direction == MetricDirection::LowerBetter ? RankSource::MetricLowerBetter
                                                            : RankSource::MetricHigherBetter);
}

RankVector to_ranks(std::span<const double> values, MetricDirection direction, RankSource source) {
  for (const double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteInput, "cannot rank non-finite values");
  }
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const bool lower = direction == MetricDirection::LowerBetter;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return lower ? values[i] < values[j] : values[i] > values[j];
  });
  RankVector out;
  out.source = source;
  out.ranks.assign(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = avg;
    i = j + 1;
  }
  return out;
}

double spearman_t_pvalue(double rho, std::size_t n) {
  if (n < 3) fail(ErrorCode::TooFewPoints, "p-value needs n >= 3");
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(x, 0.5 * df, 0.5), 0.0, 1.0);
}

CorrelationResult spearman(const RankVector& a, const RankVector& b) {
  check_pair(a.size(), b.size());
  CorrelationResult out;
  out.n = a.size();
  out.rho = rho_of(a.ranks, b.ranks);
  out.p_value = spearman_t_pvalue(out.rho, out.n);
  return out;
}

CorrelationResult spearman(std::span<const double> a, std::span<const double> b) {
  check_pair(a.size(), b.size());
  return spearman(to_ranks(a, MetricDirection::LowerBetter, RankSource::Score),
                  to_ranks(b, MetricDirection::LowerBetter, RankSource::Score));
}

double spearman_permutation_pvalue(const RankVector& a, const RankVector& b) {
  check_pair(a.size(), b.size());
  if (a.size() > kPermutationMaxN) {
    fail(ErrorCode::EnumerationTooLarge, "permutation p-value is limited to n <= " + std::to_string(kPermutationMaxN));
  }
  const double observed = std::abs(rho_of(a.ranks, b.ranks));
  std::vector<double> perm(b.ranks);
  std::sort(perm.begin(), perm.end());
  std::size_t hits = 0, total = 0;
  // Enumerates distinct arrangements; with tied ranks each distinct
  // arrangement stands for the same number of index permutations.
  do {
    ++total;
    if (std::abs(rho_of(a.ranks, perm)) >= observed - 1e-12) ++hits;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

double incomplete_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    fail(ErrorCode::DomainError, "incomplete_beta needs x in [0,1] and a, b > 0");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
  return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

ScoreOrientation default_orientation(std::string_view method) {
  if (method == "logme") return ScoreOrientation::HigherBetter;
  if (method == "swd" || method == "tsne") return ScoreOrientation::LowerBetter;
  fail(ErrorCode::InvalidArgument, "no default orientation for method '" + std::string(method) + "'");
}

std::string_view to_string(ScoreOrientation o) noexcept {
  return o == ScoreOrientation::HigherBetter ? "higher_better" : "lower_better";
}

RankingReport build_report(std::span<const MethodColumn> columns, const GroundTruth& truth) {
  if (truth.candidate_ids.size() != truth.metric.size()) {
    fail(ErrorCode::LengthMismatch, "ground truth ids and metrics differ in length");
  }
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < truth.candidate_ids.size(); ++i) {
    if (!position.emplace(truth.candidate_ids[i], i).second) {
      fail(ErrorCode::DuplicateCandidateId, "duplicate ground-truth candidate '" + truth.candidate_ids[i] + "'");
    }
  }

  RankingReport report;
  report.candidate_ids = truth.candidate_ids;
  report.ground_truth = truth.metric;
  report.direction = truth.direction;
  report.ground_truth_ranks = to_ranks(truth.metric, truth.direction);
  const auto gt_sorted = std::set<std::string>(truth.candidate_ids.begin(), truth.candidate_ids.end());

  for (const auto& col : columns) {
    if (col.candidate_ids.size() != col.scores.size() || (!col.seeds.empty() && col.seeds.size() != col.scores.size())) {
      fail(ErrorCode::LengthMismatch, "method '" + col.method + "' has inconsistent column lengths");
    }
    const std::set<std::string> ids(col.candidate_ids.begin(), col.candidate_ids.end());
    if (ids != gt_sorted || col.candidate_ids.size() != truth.candidate_ids.size()) {
      fail(ErrorCode::CandidateSetMismatch,
           "method '" + col.method + "' does not cover exactly the ground-truth candidate set");
    }
    MethodRanking mr;
    mr.method = col.method;
    mr.orientation = col.orientation;
    mr.scores.assign(truth.candidate_ids.size(), 0.0);
    for (std::size_t i = 0; i < col.scores.size(); ++i) mr.scores[position.at(col.candidate_ids[i])] = col.scores[i];
    for (const auto& s : col.seeds) {
      if (s && mr.seed && *s != *mr.seed) {
        fail(ErrorCode::MixedSeeds, "method '" + col.method + "' mixes scores from different seeds");
      }
      if (s) mr.seed = s;
    }
    mr.ranks = to_ranks(mr.scores,
                        col.orientation == ScoreOrientation::HigherBetter ? MetricDirection::HigherBetter
                                                                          : MetricDirection::LowerBetter,
                        RankSource::Score);
    mr.correlation = spearman(report.ground_truth_ranks, mr.ranks);
    if (mr.ranks.size() <= 8) mr.permutation_p = spearman_permutation_pvalue(report.ground_truth_ranks, mr.ranks);
    report.methods.push_back(std::move(mr));
  }
  return report;
}

nlohmann::ordered_json RankingReport::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = candidate_ids.size();
  j["metric_direction"] = std::string(to_string(direction));
  auto& rows = j["candidates"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
    nlohmann::ordered_json row;
    row["candidate_id"] = candidate_ids[i];
    row["ground_truth"] = ground_truth[i];
    row["rank_ft"] = ground_truth_ranks.ranks[i];
    for (const auto& m : methods) {
      row["score_" + m.method] = m.scores[i];
      row["rank_" + m.method] = m.ranks.ranks[i];
    }
    rows.push_back(std::move(row));
  }
  auto& ms = j["methods"] = nlohmann::ordered_json::array();
  for (const auto& m : methods) {
    nlohmann::ordered_json e;
    e["method"] = m.method;
    e["orientation"] = std::string(to_string(m.orientation));
    e["rho"] = m.correlation.rho;
    e["p_value"] = m.correlation.p_value;
    e["p_value_method"] = "t_approximation";
    if (m.permutation_p) e["p_value_exact_permutation"] = *m.permutation_p;
    if (m.seed) e["seed"] = *m.seed;
    ms.push_back(std::move(e));
  }
  return j;
}

std::string RankingReport::to_table() const {
  std::size_t id_width = 9;
  for (const auto& id : candidate_ids) id_width = std::max(id_width, id.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  auto left = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  constexpr std::size_t kCol = 12;
  std::string out = left("Candidate", id_width) + " | " + pad("Metric", kCol) + " | " + pad("Rank_FT", kCol);
  for (const auto& m : methods) out += " | " + pad("Rank_" + m.method, kCol);
  out += "\n";
  out += std::string(out.size() - 1, '-') + "\n";
  for (std::size_t i = 0; i < candidate_ids.size(); ++i) {
    out += left(candidate_ids[i], id_width) + " | " + pad(fmt("%.4g", ground_truth[i]), kCol) + " | " +
           pad(rank_text(ground_truth_ranks.ranks[i]), kCol);
    for (const auto& m : methods) out += " | " + pad(rank_text(m.ranks.ranks[i]), kCol);
    out += "\n";
  }
  const std::size_t label_width = id_width + 3 + kCol + 3 + kCol;
  out += left("Spearman's rank correlation", label_width);
  for (const auto& m : methods) out += " | " + pad(fmt("%.4f", m.correlation.rho), kCol);
  out += "\n" + left("p-value", label_width);
  for (const auto& m : methods) out += " | " + pad(fmt("%.2e", m.correlation.p_value), kCol);
  out += "\n";
  return out;
}

}  // namespace xfer
