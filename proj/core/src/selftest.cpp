#include "xfer/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "xfer/align.hpp"
#include "xfer/fixtures.hpp"
#include "xfer/logme.hpp"
#include "xfer/rankeval.hpp"
#include "xfer/stats.hpp"

namespace xfer {
namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

Outcome rank_fixture(std::vector<double> truth, std::vector<double> estimate, double expected_rho,
                     double reported_p, bool corrupt) {
  if (corrupt) std::reverse(estimate.begin(), estimate.end());
  const auto r = spearman(RankVector{truth, RankSource::Score}, RankVector{estimate, RankSource::Score});
  const bool rho_ok = std::abs(r.rho - expected_rho) <= fixtures::kRhoTolerance;
  const bool p_ok = r.p_value <= reported_p * fixtures::kPValueFactor && r.p_value >= reported_p / fixtures::kPValueFactor;
  return {rho_ok && p_ok, fmt("rho=%.4f p=%.3e", r.rho, r.p_value)};
}

Outcome evidence_fixture(bool corrupt) {
  // D = 1, F = [1, 1]^T, y = 0, alpha = beta = 1.
  Matrix f(2, 1);
  f << 1.0, corrupt ? 2.0 : 1.0;
  const double got = evidence(f, Vector::Zero(2), 1.0, 1.0);
  const double want = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(3.0);
  return {std::abs(got - want) <= 1e-10, fmt("evidence=%.12f expected=%.12f", got, want)};
}

Outcome alignment_fixture(bool corrupt) {
  auto rng = make_stream(20240601, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.5);
  constexpr int kFrames = 8;
  constexpr Label kVocab = 3;
  Matrix logits(kFrames, kVocab + 1);
  for (int t = 0; t < kFrames; ++t) {
    for (int k = 0; k <= kVocab; ++k) logits(t, k) = normal(rng);
    const double lse = std::log(logits.row(t).array().exp().sum());
    logits.row(t).array() -= lse;
  }
  const PosteriorGrid grid(logits);
  const LabelSeq labels = {1, 1, 2};
  const auto fast = viterbi_align(grid, labels);
  auto slow = brute_force_align(grid, labels);
  if (corrupt) slow.path_log_prob += 1.0;
  const bool ok = fast.assigned == slow.assigned && std::abs(fast.path_log_prob - slow.path_log_prob) <= 1e-9;
  return {ok, fmt("viterbi=%.12f brute=%.12f", fast.path_log_prob, slow.path_log_prob)};
}

std::vector<double> to_vec(const auto& arr) { return {arr.begin(), arr.end()}; }

}  // namespace

bool run_selftest(std::ostream& out, const SelftestOptions& options) {
  using fixtures::ConformerMls;
  using fixtures::HubertPer;
  struct Fixture {
    std::string name;
    std::function<Outcome(bool)> run;
  };
  const std::vector<Fixture> suite = {
      {"conformer_logme_spearman",
       [](bool c) {
         return rank_fixture(to_vec(ConformerMls::rank_ft), to_vec(ConformerMls::rank_logme),
                             ConformerMls::rho_logme, ConformerMls::reported_p_logme, c);
       }},
      {"conformer_swd_spearman",
       [](bool c) {
         return rank_fixture(to_vec(ConformerMls::rank_ft), to_vec(ConformerMls::rank_swd), ConformerMls::rho_swd,
                             ConformerMls::reported_p_swd, c);
       }},
      {"conformer_tsne_spearman",
       [](bool c) {
         return rank_fixture(to_vec(ConformerMls::rank_ft), to_vec(ConformerMls::rank_tsne),
                             ConformerMls::rho_tsne, ConformerMls::reported_p_tsne, c);
       }},
      {"hubert_logme_spearman",
       [](bool c) {
         return rank_fixture(to_vec(HubertPer::rank_ft), to_vec(HubertPer::rank_logme), HubertPer::rho_logme,
                             HubertPer::reported_p_logme, c);
       }},
      {"evidence_1d_analytic", evidence_fixture},
      {"viterbi_vs_brute_force", alignment_fixture},
  };

  bool all = true;
  for (const auto& f : suite) {
    Outcome o{false, ""};
    try {
      o = f.run(f.name == options.corrupt_fixture);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    out << (o.pass ? "PASS " : "FAIL ") << f.name << "  " << o.detail << "\n";
  }
  out << (all ? "selftest: all fixtures passed\n" : "selftest: FAILED\n");
  return all;
}

}  // namespace xfer
