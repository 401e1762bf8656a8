#include "xfer/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "xfer/error.hpp"
#include "xfer/npy.hpp"

namespace xfer {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_exists(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) {
    fail(ErrorCode::MissingFile, std::string(what) + " not found: " + path.string());
  }
}

const json& require_key(const json& obj, const char* key, std::string_view ctx) {
  if (!obj.is_object() || !obj.contains(key)) {
    fail(ErrorCode::ParseError, std::string(ctx) + ": missing required key '" + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, std::string_view ctx) {
  const auto& v = require_key(obj, key, ctx);
  if (!v.is_string()) fail(ErrorCode::ParseError, std::string(ctx) + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

bool is_npy(const fs::path& p) { return p.extension() == ".npy"; }
bool is_jsonl(const fs::path& p) { return p.extension() == ".jsonl"; }

// utt_id -> file, from a JSONL sidecar.
std::vector<std::pair<std::string, fs::path>> read_sidecar(const fs::path& sidecar) {
  std::vector<std::pair<std::string, fs::path>> entries;
  for (const auto& row : read_jsonl(sidecar)) {
    const auto ctx = sidecar.string();
    entries.emplace_back(require_string(row, "utt_id", ctx),
                         resolve(sidecar.parent_path(), require_string(row, "path", ctx)));
  }
  return entries;
}

void check_dims(const std::vector<FeatureMatrix>& mats, std::string_view what) {
  for (const auto& m : mats) {
    if (m.cols() != mats.front().cols()) {
      fail(ErrorCode::DimensionMismatch, std::string(what) + ": feature dimension differs across utterances (" +
                                             std::to_string(m.cols()) + " vs " +
                                             std::to_string(mats.front().cols()) + ")");
    }
  }
}

}  // namespace

std::string_view to_string(TaskKind kind) noexcept {
  return kind == TaskKind::Classification ? "classification" : "sequence";
}

std::string_view to_string(MetricDirection direction) noexcept {
  return direction == MetricDirection::LowerBetter ? "lower_better" : "higher_better";
}

MetricDirection parse_metric_direction(std::string_view text) {
  if (text == "lower_better") return MetricDirection::LowerBetter;
  if (text == "higher_better") return MetricDirection::HigherBetter;
  fail(ErrorCode::ParseError, "metric_direction must be lower_better or higher_better, got '" +
                                  std::string(text) + "'");
}

const CandidateSpec& Manifest::candidate(std::string_view id) const {
  const auto it = std::find_if(candidates.begin(), candidates.end(), [&](const auto& c) { return c.id == id; });
  if (it == candidates.end()) fail(ErrorCode::UnknownCandidate, "no candidate '" + std::string(id) + "'");
  return *it;
}

std::optional<fs::path> Manifest::source_for(const CandidateSpec& c) const {
  return c.source_features ? c.source_features : source_features;
}

Manifest parse_manifest(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) fail(ErrorCode::ParseError, "manifest must be a JSON object");
  Manifest m;
  m.base_dir = base_dir;

  const auto kind = require_string(doc, "task_kind", "manifest");
  if (kind == "classification") {
    m.task_kind = TaskKind::Classification;
  } else if (kind == "sequence") {
    m.task_kind = TaskKind::Sequence;
  } else {
    fail(ErrorCode::ParseError, "task_kind must be classification or sequence, got '" + kind + "'");
  }

  if (doc.contains("vocab_size")) {
    const auto& v = doc.at("vocab_size");
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      fail(ErrorCode::ParseError, "vocab_size must be a positive integer");
    }
    m.vocab_size = v.get<Label>();
  }
  if (doc.contains("source_features")) {
    m.source_features = resolve(base_dir, require_string(doc, "source_features", "manifest"));
    require_exists(*m.source_features, "source_features");
  }

  const auto& cands = require_key(doc, "candidates", "manifest");
  if (!cands.is_array() || cands.empty()) {
    fail(ErrorCode::ParseError, "manifest needs a non-empty 'candidates' array");
  }
  std::set<std::string> seen;
  for (const auto& c : cands) {
    CandidateSpec spec;
    spec.id = require_string(c, "id", "candidate");
    const std::string ctx = "candidate '" + spec.id + "'";
    if (!seen.insert(spec.id).second) {
      fail(ErrorCode::DuplicateCandidateId, "duplicate candidate id '" + spec.id + "'");
    }
    spec.features = resolve(base_dir, require_string(c, "features", ctx));
    spec.labels = resolve(base_dir, require_string(c, "labels", ctx));
    require_exists(spec.features, ctx + " features");
    require_exists(spec.labels, ctx + " labels");
    if (c.contains("posteriors")) {
      const auto p = require_string(c, "posteriors", ctx);
      if (p == "uniform") {
        spec.uniform_posteriors = true;
      } else {
        spec.posteriors = resolve(base_dir, p);
        require_exists(*spec.posteriors, ctx + " posteriors");
      }
    }
    if (c.contains("ground_truth_metric")) {
      const auto& g = c.at("ground_truth_metric");
      if (!g.is_number()) fail(ErrorCode::ParseError, ctx + ": ground_truth_metric must be a number");
      spec.ground_truth_metric = g.get<double>();
    }
    if (c.contains("metric_direction")) {
      spec.metric_direction = parse_metric_direction(require_string(c, "metric_direction", ctx));
    }
    if (c.contains("source_features")) {
      spec.source_features = resolve(base_dir, require_string(c, "source_features", ctx));
      require_exists(*spec.source_features, ctx + " source_features");
    }
    m.candidates.push_back(std::move(spec));
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return parse_manifest(doc, fs::absolute(path).parent_path());
}

LabelData read_labels(const fs::path& path, std::optional<Label> vocab_size) {
  LabelData data;
  std::set<std::string> seen;
  Label max_label = -1;
  for (const auto& row : read_jsonl(path)) {
    LabeledUtterance utt;
    utt.utt_id = require_string(row, "utt_id", path.string());
    const auto& labels = require_key(row, "labels", path.string());
    if (!labels.is_array()) fail(ErrorCode::ParseError, path.string() + ": 'labels' must be an array");
    for (const auto& l : labels) {
      if (!l.is_number_integer() || l.get<long long>() < 0) {
        fail(ErrorCode::InvalidLabel, path.string() + ": utterance '" + utt.utt_id +
                                          "' has a label that is not a non-negative integer");
      }
      utt.labels.push_back(l.get<Label>());
      max_label = std::max(max_label, utt.labels.back());
    }
    if (!seen.insert(utt.utt_id).second) {
      fail(ErrorCode::UttIdMismatch, path.string() + ": duplicate utt_id '" + utt.utt_id + "'");
    }
    data.utterances.push_back(std::move(utt));
  }
  if (data.utterances.empty()) fail(ErrorCode::ParseError, path.string() + ": no utterances");
  data.vocab_size = vocab_size.value_or(max_label + 1);
  if (data.vocab_size < 1) fail(ErrorCode::InvalidLabel, path.string() + ": no labels at all");
  if (max_label >= data.vocab_size) {
    fail(ErrorCode::InvalidLabel, path.string() + ": label " + std::to_string(max_label) +
                                      " outside vocabulary of size " + std::to_string(data.vocab_size));
  }
  return data;
}

FeatureMatrix mean_pool(const FeatureMatrix& frames) {
  return FeatureMatrix(frames.values().colwise().mean());
}

std::vector<FeatureMatrix> load_domain(const fs::path& path) {
  std::vector<FeatureMatrix> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && is_npy(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(read_array(f));
  } else if (is_jsonl(path)) {
    for (const auto& [id, file] : read_sidecar(path)) out.push_back(read_array(file));
  } else {
    out.push_back(read_array(path));
  }
  if (out.empty()) fail(ErrorCode::EmptyDomain, "no feature files under " + path.string());
  check_dims(out, path.string());
  return out;
}

CandidateDataset assemble_dataset(const Manifest& manifest, std::string_view candidate_id,
                                  const AssembleOptions& options) {
  const auto& spec = manifest.candidate(candidate_id);
  CandidateDataset ds;
  ds.candidate_id = spec.id;
  ds.task_kind = manifest.task_kind;
  ds.uniform_posteriors = spec.uniform_posteriors;
  ds.pooled = options.pool_mean;

  // Vocabulary: explicit, else the posterior width, else inferred from labels.
  std::optional<Label> vocab = manifest.vocab_size;
  std::vector<PosteriorGrid> grids;
  if (spec.posteriors) {
    const auto lab = read_labels(spec.labels, vocab);
    for (const auto& u : lab.utterances) {
      const auto file = *spec.posteriors / (u.utt_id + ".npy");
      if (!fs::exists(file)) {
        fail(ErrorCode::UttIdMismatch, "no posterior grid for utterance '" + u.utt_id + "' in " +
                                           spec.posteriors->string());
      }
      grids.push_back(read_posterior_grid(file));
      if (grids.back().vocab_size() != grids.front().vocab_size()) {
        fail(ErrorCode::DimensionMismatch, "posterior widths differ across utterances of '" + spec.id + "'");
      }
    }
    if (!vocab) vocab = grids.front().vocab_size();
    if (grids.front().vocab_size() != *vocab) {
      fail(ErrorCode::DimensionMismatch, "posterior width " + std::to_string(grids.front().vocab_size() + 1) +
                                             " does not match vocabulary size " + std::to_string(*vocab) +
                                             " + 1");
    }
  }
  ds.labels = read_labels(spec.labels, vocab);
  const auto& utts = ds.labels.utterances;

  for (const auto& u : utts) {
    if (manifest.task_kind == TaskKind::Classification && u.labels.size() != 1) {
      fail(ErrorCode::InvalidLabel, "classification utterance '" + u.utt_id + "' must carry exactly one label");
    }
    if (manifest.task_kind == TaskKind::Sequence && u.labels.empty()) {
      fail(ErrorCode::InvalidLabel, "sequence utterance '" + u.utt_id + "' has no labels");
    }
  }

  if (fs::is_directory(spec.features)) {
    for (const auto& u : utts) {
      const auto file = spec.features / (u.utt_id + ".npy");
      if (!fs::exists(file)) {
        fail(ErrorCode::UttIdMismatch, "no feature file for utterance '" + u.utt_id + "' in " +
                                           spec.features.string());
      }
      ds.features.push_back(read_array(file));
    }
  } else if (is_jsonl(spec.features)) {
    std::map<std::string, fs::path> files;
    for (auto& [id, file] : read_sidecar(spec.features)) files.emplace(id, file);
    if (files.size() != utts.size()) {
      fail(ErrorCode::UttIdMismatch, "feature sidecar lists " + std::to_string(files.size()) +
                                         " utterances, labels list " + std::to_string(utts.size()));
    }
    for (const auto& u : utts) {
      const auto it = files.find(u.utt_id);
      if (it == files.end()) {
        fail(ErrorCode::UttIdMismatch, "utterance '" + u.utt_id + "' missing from feature sidecar");
      }
      ds.features.push_back(read_array(it->second));
    }
  } else {
    // One row per utterance, in label-file order.
    const auto all = read_array(spec.features);
    if (static_cast<std::size_t>(all.rows()) != utts.size()) {
      fail(ErrorCode::UttIdMismatch, spec.features.string() + " has " + std::to_string(all.rows()) +
                                         " rows for " + std::to_string(utts.size()) + " utterances");
    }
    for (Eigen::Index r = 0; r < all.rows(); ++r) ds.features.emplace_back(all.values().row(r));
  }
  check_dims(ds.features, spec.id);

  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (grids[i].frames() != ds.features[i].rows()) {
      fail(ErrorCode::FrameCountMismatch, "utterance '" + utts[i].utt_id + "': posterior has " +
                                              std::to_string(grids[i].frames()) + " frames, features have " +
                                              std::to_string(ds.features[i].rows()));
    }
  }
  ds.posteriors = std::move(grids);

  if (options.pool_mean) {
    for (auto& f : ds.features) f = mean_pool(f);
  }
  return ds;
}

}  // namespace xfer
