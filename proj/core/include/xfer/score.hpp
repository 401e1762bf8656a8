#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xfer/logme.hpp"
#include "xfer/rankeval.hpp"
#include "xfer/swd.hpp"
#include "xfer/tsne.hpp"

namespace xfer {

/// Method-tagged scalar score plus the method-specific provenance fields that
/// are written alongside it.
struct TransferScore {
  std::string candidate_id;
  std::string method;
  double score = 0.0;
  std::uint64_t seed = 0;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
};

TransferScore make_logme_score(const std::string& candidate_id, const LogMEScore& s, std::uint64_t seed);
TransferScore make_swd_score(const std::string& candidate_id, const SwdResult& s, const SwdConfig& cfg);
TransferScore make_tsne_score(const std::string& candidate_id, const TsneResult& s, const TsneConfig& cfg);

/// {"candidate_id", "method", "score", <details...>, "seed"} with a fixed
/// field order so reruns serialise byte-identically.
nlohmann::ordered_json to_json(const TransferScore& s);
TransferScore transfer_score_from_json(const nlohmann::json& j);

/// Groups records into one column per method, in order of first appearance.
std::vector<MethodColumn> columns_from_scores(std::span<const TransferScore> scores);

}  // namespace xfer
