#include "xfer/score.hpp"

#include <algorithm>
#include <iterator>

#include "xfer/error.hpp"

namespace xfer {

TransferScore make_logme_score(const std::string& candidate_id, const LogMEScore& s, std::uint64_t seed) {
  TransferScore out{candidate_id, "logme", s.score, seed, {}};
  auto per_class = nlohmann::ordered_json::array();
  for (const auto& c : s.per_class) {
    nlohmann::ordered_json e;
    e["label"] = c.label;
    e["log_evidence"] = c.log_evidence;
    e["alpha"] = c.alpha;
    e["beta"] = c.beta;
    e["gamma"] = c.gamma;
    e["iterations"] = c.iterations;
    e["converged"] = c.converged;
    per_class.push_back(std::move(e));
  }
  out.details["per_class"] = std::move(per_class);
  out.details["skipped_classes"] = s.skipped_classes;
  out.details["flags"] = s.flags;
  out.details["n"] = s.n_samples;
  out.details["class_aggregation"] = "mean";
  return out;
}

TransferScore make_swd_score(const std::string& candidate_id, const SwdResult& s, const SwdConfig& cfg) {
  TransferScore out{candidate_id, "swd", s.score, cfg.seed, {}};
  out.details["t_eval"] = s.t_eval;
  out.details["m"] = cfg.n_projections;
  out.details["batch_size"] = cfg.batch_size;
  out.details["batch_rows"] = s.batch_rows;
  out.details["p"] = SwdConfig::kPNorm;
  out.details["length_policy"] = "truncate_to_min";
  return out;
}

TransferScore make_tsne_score(const std::string& candidate_id, const TsneResult& s, const TsneConfig& cfg) {
  TransferScore out{candidate_id, "tsne", s.score, cfg.seed, {}};
  out.details["perplexity"] = s.perplexity;
  out.details["median_definition"] = "coordinate_wise";
  out.details["spread"] = s.spread;
  out.details["n_source"] = s.n_source;
  out.details["n_target"] = s.n_target;
  if (s.degenerate) out.details["flags"] = {"identical_points"};
  return out;
}

nlohmann::ordered_json to_json(const TransferScore& s) {
  nlohmann::ordered_json j;
  j["candidate_id"] = s.candidate_id;
  j["method"] = s.method;
  j["score"] = s.score;
  for (const auto& [k, v] : s.details.items()) j[k] = v;
  j["seed"] = s.seed;
  return j;
}

TransferScore transfer_score_from_json(const nlohmann::json& j) {
  try {
    TransferScore s;
    s.candidate_id = j.at("candidate_id").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.score = j.at("score").get<double>();
    if (!j.contains("seed")) fail(ErrorCode::ParseError, "score record for '" + s.candidate_id + "' lacks a seed");
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.items()) {
      if (k != "candidate_id" && k != "method" && k != "score" && k != "seed") s.details[k] = v;
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed score record: ") + e.what());
  }
}

std::vector<MethodColumn> columns_from_scores(std::span<const TransferScore> scores) {
  std::vector<MethodColumn> cols;
  for (const auto& s : scores) {
    auto it = std::find_if(cols.begin(), cols.end(), [&](const auto& c) { return c.method == s.method; });
    if (it == cols.end()) {
      cols.push_back(MethodColumn{s.method, default_orientation(s.method), {}, {}, {}});
      it = std::prev(cols.end());
    }
    it->candidate_ids.push_back(s.candidate_id);
    it->scores.push_back(s.score);
    it->seeds.emplace_back(s.seed);
  }
  return cols;
}

}  // namespace xfer
