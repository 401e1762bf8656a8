#include "app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "xfer/align.hpp"
#include "xfer/error.hpp"
#include "xfer/logme.hpp"
#include "xfer/npy.hpp"
#include "xfer/selftest.hpp"
#include "xfer/swd.hpp"
#include "xfer/tsne.hpp"

namespace xfer::app {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kSourceRefusal =
    "requires source-domain features (manifest 'source_features'). Source/target distance scores compare a "
    "distinct pre-training domain with the target domain; for self-supervised models whose pre-training and "
    "target data share a domain there is no such source, so this method does not apply. Use --method logme.";

std::vector<FrameAlignment> align_dataset(const CandidateDataset& ds) {
  std::vector<FrameAlignment> out;
  out.reserve(ds.size());
  for (std::size_t u = 0; u < ds.size(); ++u) {
    const auto& labels = ds.labels.utterances[u].labels;
    if (ds.uniform_posteriors) {
      out.push_back(uniform_alignment(static_cast<std::size_t>(ds.features[u].rows()), labels, ds.labels.vocab_size));
    } else {
      out.push_back(viterbi_align(ds.posteriors[u], labels));
    }
  }
  return out;
}

void require_alignment_source(const CandidateDataset& ds) {
  if (ds.posteriors.empty() && !ds.uniform_posteriors) {
    fail(ErrorCode::MissingPosteriors, "sequence candidate '" + ds.candidate_id +
                                           "' needs 'posteriors' (a directory of grids or \"uniform\") for LogME");
  }
}

TransferScore score_logme(const Manifest& manifest, const CandidateSpec& c, const RunConfig& cfg) {
  const auto ds = assemble_dataset(manifest, c.id, AssembleOptions{cfg.pool_mean});
  if (manifest.task_kind == TaskKind::Sequence) {
    require_alignment_source(ds);
    const auto alignments = align_dataset(ds);
    return make_logme_score(c.id, logme_ctc(ds.features, alignments, ds.labels.vocab_size), cfg.seed);
  }
  Matrix features(static_cast<Eigen::Index>(ds.size()), ds.dim());
  LabelSeq labels;
  for (std::size_t u = 0; u < ds.size(); ++u) {
    if (ds.features[u].rows() != 1) {
      fail(ErrorCode::InvalidArgument, "classification utterance '" + ds.labels.utterances[u].utt_id + "' has " +
                                           std::to_string(ds.features[u].rows()) +
                                           " frames; pass --pool-mean to average frames per utterance");
    }
    features.row(static_cast<Eigen::Index>(u)) = ds.features[u].values().row(0);
    labels.push_back(ds.labels.utterances[u].labels.front());
  }
  return make_logme_score(c.id, logme_classification(features, labels, ds.labels.vocab_size), cfg.seed);
}

fs::path embedding_path(const fs::path& base, const std::string& candidate, bool single) {
  if (single) return base;
  fs::path p = base;
  p.replace_filename(base.stem().string() + "." + candidate + base.extension().string());
  return p;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "logme") return Method::LogME;
  if (name == "swd") return Method::Swd;
  if (name == "tsne") return Method::Tsne;
  fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::LogME: return "logme";
    case Method::Swd: return "swd";
    case Method::Tsne: return "tsne";
  }
  return "?";
}

TransferScore score_candidate(const Manifest& manifest, const CandidateSpec& c, const RunConfig& cfg) {
  if (cfg.method == Method::LogME) return score_logme(manifest, c, cfg);

  const auto source_path = manifest.source_for(c);
  if (!source_path) {
    fail(ErrorCode::MissingSourceFeatures, std::string(to_string(cfg.method)) + " " + std::string(kSourceRefusal));
  }
  auto source = load_domain(*source_path);
  const auto ds = assemble_dataset(manifest, c.id, AssembleOptions{cfg.pool_mean});
  if (cfg.pool_mean) {
    for (auto& s : source) s = mean_pool(s);
  }

  if (cfg.method == Method::Swd) {
    SwdConfig swd;
    swd.n_projections = cfg.projections;
    swd.batch_size = cfg.batch_size;
    swd.seed = cfg.seed;
    return make_swd_score(c.id, swd_score(source, ds.features, swd), swd);
  }

  TsneConfig tsne;
  tsne.perplexity = cfg.perplexity;
  tsne.seed = cfg.seed;
  tsne.max_points_per_domain = cfg.max_points;
  TsneResult result;
  try {
    result = tsne_score(source, ds.features, tsne);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooManyPoints) throw;
    throw Error(e.code(), std::string(e.what()) + " (lower --max-points, currently " +
                              std::to_string(cfg.max_points) + " per domain)");
  }
  if (cfg.dump_embedding) {
    write_array(embedding_path(*cfg.dump_embedding, c.id, manifest.candidates.size() == 1), result.embedding);
  }
  return make_tsne_score(c.id, result, tsne);
}

std::string config_hash(const RunConfig& cfg) {
  std::ostringstream canon;
  canon << "method=" << to_string(cfg.method) << ";seed=" << cfg.seed << ";projections=" << cfg.projections
        << ";batch_size=" << cfg.batch_size << ";perplexity=" << (cfg.perplexity ? std::to_string(*cfg.perplexity) : "auto")
        << ";pool_mean=" << cfg.pool_mean << ";max_points=" << cfg.max_points;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canon.str())));
  return buf;
}

bool ScoreRun::ok() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.error_code.empty(); });
}

ojson ScoreRun::to_json() const {
  ojson doc;
  doc["header"] = header;
  doc["records"] = ojson::array();
  doc["errors"] = ojson::array();
  for (const auto& o : outcomes) {
    if (o.score) {
      doc["records"].push_back(xfer::to_json(*o.score));
    } else {
      doc["errors"].push_back(ojson{{"candidate_id", o.candidate_id}, {"error", o.error_code}, {"message", o.message}});
    }
  }
  return doc;
}

ScoreRun run_score(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const auto manifest = load_manifest(cfg.manifest);

  ScoreRun run;
  run.outcomes.resize(manifest.candidates.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.candidates.size(); i = next++) {
      const auto& c = manifest.candidates[i];
      auto& o = run.outcomes[i];
      o.candidate_id = c.id;
      try {
        o.score = score_candidate(manifest, c, cfg);
      } catch (const Error& e) {
        o.error_code = std::string(xfer::to_string(e.code()));
        o.message = e.what();
      } catch (const std::exception& e) {
        o.error_code = "InternalError";
        o.message = e.what();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp<int>(cfg.jobs, 1, 256));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(threads, manifest.candidates.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  run.header["tool"] = "xferscore";
  run.header["method"] = std::string(to_string(cfg.method));
  run.header["task_kind"] = std::string(xfer::to_string(manifest.task_kind));
  run.header["seed"] = cfg.seed;
  run.header["config_hash"] = config_hash(cfg);
  run.header["candidates"] = manifest.candidates.size();
  run.header["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

std::vector<AlignRecord> run_align(const Manifest& manifest, const std::string& candidate_id) {
  if (manifest.task_kind != TaskKind::Sequence) {
    fail(ErrorCode::InvalidArgument, "alignment applies to sequence manifests only");
  }
  const auto ds = assemble_dataset(manifest, candidate_id);
  require_alignment_source(ds);
  const auto alignments = align_dataset(ds);
  std::vector<AlignRecord> out;
  for (std::size_t u = 0; u < ds.size(); ++u) {
    out.push_back({ds.labels.utterances[u].utt_id, alignments[u].assigned, alignments[u].path_log_prob});
  }
  return out;
}

std::string to_jsonl(const std::vector<AlignRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    ojson j;
    j["utt_id"] = r.utt_id;
    j["assigned"] = r.assigned;
    j["log_prob"] = r.log_prob;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<TransferScore> read_score_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open score file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  std::vector<TransferScore> out;
  if (doc.is_object() && doc.contains("records")) {
    for (const auto& r : doc.at("records")) out.push_back(transfer_score_from_json(r));
  } else if (doc.is_array()) {
    for (const auto& r : doc) out.push_back(transfer_score_from_json(r));
  } else {
    out.push_back(transfer_score_from_json(doc));
  }
  return out;
}

GroundTruth read_ground_truth(const fs::path& path, MetricDirection direction) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open ground truth " + path.string());
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.empty()) fail(ErrorCode::ParseError, "ground truth must be a non-empty object");
  GroundTruth gt;
  gt.direction = direction;
  for (const auto& [id, v] : doc.items()) {
    if (!v.is_number()) fail(ErrorCode::ParseError, "ground truth for '" + id + "' is not a number");
    gt.candidate_ids.push_back(id);
    gt.metric.push_back(v.get<double>());
  }
  return gt;
}

GroundTruth ground_truth_from_manifest(const Manifest& manifest) {
  GroundTruth gt;
  gt.direction = manifest.candidates.front().metric_direction;
  for (const auto& c : manifest.candidates) {
    if (!c.ground_truth_metric) {
      fail(ErrorCode::ParseError, "candidate '" + c.id + "' has no ground_truth_metric");
    }
    if (c.metric_direction != gt.direction) {
      fail(ErrorCode::ParseError, "candidates disagree on metric_direction");
    }
    gt.candidate_ids.push_back(c.id);
    gt.metric.push_back(*c.ground_truth_metric);
  }
  return gt;
}

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const auto run = run_score(cfg);
    const auto text = run.to_json().dump(2) + "\n";
    if (cfg.output.empty()) {
      out << text;
    } else {
      write_text(cfg.output, text);
    }
    for (const auto& o : run.outcomes) {
      if (!o.error_code.empty()) err << "candidate " << o.candidate_id << ": " << o.error_code << ": " << o.message << "\n";
    }
    return run.ok() ? 0 : 1;
  } catch (const Error& e) {
    err << ojson{{"error", std::string(xfer::to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
}

int cmd_align(const fs::path& manifest_path, const std::optional<std::string>& candidate, const fs::path& output,
              std::ostream& err) {
  try {
    const auto manifest = load_manifest(manifest_path);
    std::string id;
    if (candidate) {
      id = *candidate;
    } else if (manifest.candidates.size() == 1) {
      id = manifest.candidates.front().id;
    } else {
      fail(ErrorCode::InvalidArgument, "manifest has several candidates; pass --candidate");
    }
    write_text(output, to_jsonl(run_align(manifest, id)));
    return 0;
  } catch (const Error& e) {
    err << ojson{{"error", std::string(xfer::to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
}

int cmd_rank(const std::vector<fs::path>& score_files, const std::optional<fs::path>& truth_path,
             const std::optional<fs::path>& manifest_path, MetricDirection direction, const fs::path& output,
             const std::optional<fs::path>& table_path, std::ostream& out, std::ostream& err) {
  try {
    std::vector<TransferScore> scores;
    for (const auto& f : score_files) {
      auto part = read_score_file(f);
      scores.insert(scores.end(), part.begin(), part.end());
    }
    GroundTruth gt;
    if (truth_path) {
      gt = read_ground_truth(*truth_path, direction);
    } else if (manifest_path) {
      gt = ground_truth_from_manifest(load_manifest(*manifest_path));
    } else {
      fail(ErrorCode::InvalidArgument, "rank needs --ground-truth or --manifest");
    }
    const auto columns = columns_from_scores(scores);
    const auto report = build_report(columns, gt);
    const auto table = report.to_table();
    if (!output.empty()) write_text(output, report.to_json().dump(2) + "\n");
    if (table_path) {
      write_text(*table_path, table);
    } else {
      out << table;
    }
    return 0;
  } catch (const Error& e) {
    err << ojson{{"error", std::string(xfer::to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
}

int cmd_selftest(std::ostream& out) { return run_selftest(out) ? 0 : 1; }

}  // namespace xfer::app
