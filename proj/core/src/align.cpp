#include "xfer/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xfer/error.hpp"

namespace xfer {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_labels(const LabelSeq& labels, Label vocab_size) {
  if (labels.empty()) fail(ErrorCode::EmptyLabels, "label sequence is empty");
  for (const Label l : labels) {
    if (l < 0 || l >= vocab_size) {
      fail(ErrorCode::InvalidLabel,
           "label " + std::to_string(l) + " outside vocabulary of size " + std::to_string(vocab_size));
    }
  }
}

void check_feasible(const PosteriorGrid& grid, const LabelSeq& labels) {
  check_labels(labels, grid.vocab_size());
  const auto need = min_frames(labels);
  if (static_cast<std::size_t>(grid.frames()) < need) {
    fail(ErrorCode::InfeasibleLength, "labels need at least " + std::to_string(need) + " frames, grid has " +
                                          std::to_string(grid.frames()));
  }
}

// Depth-first enumeration of symbol sequences whose collapse equals `labels`.
// Prunes any prefix whose collapse already diverges.
class Enumerator {
 public:
  Enumerator(const PosteriorGrid& grid, const LabelSeq& labels) : grid_(grid), labels_(labels) {
    if (static_cast<std::size_t>(grid.frames()) > kBruteForceMaxFrames || labels.size() > kBruteForceMaxLabels) {
      fail(ErrorCode::EnumerationTooLarge, "brute-force alignment is limited to T <= " +
                                               std::to_string(kBruteForceMaxFrames) + " and L <= " +
                                               std::to_string(kBruteForceMaxLabels));
    }
    alphabet_.push_back(grid.blank());
    for (const Label l : labels) {
      if (std::find(alphabet_.begin(), alphabet_.end(), l) == alphabet_.end()) alphabet_.push_back(l);
    }
    current_.reserve(static_cast<std::size_t>(grid.frames()));
  }

  void run() { visit(0, 0, grid_.blank(), 0.0); }

  const LabelSeq& best() const { return best_; }
  double best_log_prob() const { return best_log_prob_; }
  const std::vector<double>& path_log_probs() const { return path_log_probs_; }

 private:
  void visit(Eigen::Index t, std::size_t matched, Label last, double log_prob) {
    if (t == grid_.frames()) {
      if (matched != labels_.size()) return;
      path_log_probs_.push_back(log_prob);
      if (best_.empty() || log_prob > best_log_prob_) {
        best_ = current_;
        best_log_prob_ = log_prob;
      }
      return;
    }
    for (const Label sym : alphabet_) {
      std::size_t next_matched = matched;
      if (sym != grid_.blank() && sym != last) {
        if (matched == labels_.size() || labels_[matched] != sym) continue;
        ++next_matched;
      }
      current_.push_back(sym);
      visit(t + 1, next_matched, sym, log_prob + grid_(t, sym));
      current_.pop_back();
    }
  }

  const PosteriorGrid& grid_;
  const LabelSeq& labels_;
  LabelSeq alphabet_;
  LabelSeq current_;
  LabelSeq best_;
  double best_log_prob_ = kNegInf;
  std::vector<double> path_log_probs_;
};

}  // namespace

ExtendedLabelSeq::ExtendedLabelSeq(const LabelSeq& labels, Label vocab_size) : blank_(vocab_size) {
  check_labels(labels, vocab_size);
  symbols_.reserve(2 * labels.size() + 1);
  symbols_.push_back(blank_);
  for (const Label l : labels) {
    symbols_.push_back(l);
    symbols_.push_back(blank_);
  }
}

ExtendedLabelSeq extend_labels(const LabelSeq& labels, Label vocab_size) {
  return ExtendedLabelSeq(labels, vocab_size);
}

std::size_t min_frames(const LabelSeq& labels) {
  std::size_t n = labels.size();
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

LabelSeq collapse(const LabelSeq& assigned, Label blank) {
  LabelSeq out;
  Label prev = blank;
  for (const Label a : assigned) {
    if (a != blank && a != prev) out.push_back(a);
    prev = a;
  }
  return out;
}

FrameAlignment viterbi_align(const PosteriorGrid& grid, const LabelSeq& labels) {
  check_feasible(grid, labels);
  const ExtendedLabelSeq ext(labels, grid.vocab_size());
  const auto frames = static_cast<std::size_t>(grid.frames());
  const std::size_t states = ext.size();

  std::vector<double> delta(frames * states, kNegInf);
  std::vector<std::size_t> back(frames * states, 0);
  auto at = [states](std::size_t t, std::size_t s) { return t * states + s; };

  delta[at(0, 0)] = grid(0, ext[0]);
  delta[at(0, 1)] = grid(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    for (std::size_t s = 0; s < states; ++s) {
      double best = delta[at(t - 1, s)];
      std::size_t from = s;
      if (s >= 1 && delta[at(t - 1, s - 1)] > best) {
        best = delta[at(t - 1, s - 1)];
        from = s - 1;
      }
      if (ext.can_skip_into(s) && delta[at(t - 1, s - 2)] > best) {
        best = delta[at(t - 1, s - 2)];
        from = s - 2;
      }
      delta[at(t, s)] = best + grid(ti, ext[s]);
      back[at(t, s)] = from;
    }
  }

  std::size_t s = states - 1;
  if (delta[at(frames - 1, states - 2)] > delta[at(frames - 1, s)]) s = states - 2;
  const double score = delta[at(frames - 1, s)];
  if (score == kNegInf) fail(ErrorCode::AllPathsImpossible, "every alignment path has zero probability");

  FrameAlignment out;
  out.blank = ext.blank();
  out.path_log_prob = score;
  out.state_path.assign(frames, 0);
  out.assigned.assign(frames, ext.blank());
  for (std::size_t t = frames; t-- > 0;) {
    out.state_path[t] = s;
    out.assigned[t] = ext[s];
    s = back[at(t, s)];
  }
  return out;
}

double ctc_total_log_prob(const PosteriorGrid& grid, const LabelSeq& labels) {
  check_feasible(grid, labels);
  const ExtendedLabelSeq ext(labels, grid.vocab_size());
  const std::size_t states = ext.size();

  std::vector<double> prev(states, kNegInf);
  std::vector<double> cur(states, kNegInf);
  prev[0] = grid(0, ext[0]);
  prev[1] = grid(0, ext[1]);
  for (Eigen::Index t = 1; t < grid.frames(); ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      double acc = prev[s];
      if (s >= 1) acc = log_add(acc, prev[s - 1]);
      if (ext.can_skip_into(s)) acc = log_add(acc, prev[s - 2]);
      cur[s] = acc == kNegInf ? kNegInf : acc + grid(t, ext[s]);
    }
    std::swap(prev, cur);
  }
  const double total = log_add(prev[states - 1], prev[states - 2]);
  if (total == kNegInf) fail(ErrorCode::AllPathsImpossible, "every alignment path has zero probability");
  return total;
}

FrameAlignment brute_force_align(const PosteriorGrid& grid, const LabelSeq& labels) {
  check_feasible(grid, labels);
  Enumerator e(grid, labels);
  e.run();
  if (e.best().empty() || e.best_log_prob() == kNegInf) {
    fail(ErrorCode::AllPathsImpossible, "every alignment path has zero probability");
  }
  FrameAlignment out;
  out.blank = grid.blank();
  out.assigned = e.best();
  out.path_log_prob = e.best_log_prob();
  out.state_path = state_path_from_assignment(out.assigned, out.blank);
  return out;
}

double brute_force_total_log_prob(const PosteriorGrid& grid, const LabelSeq& labels) {
  check_feasible(grid, labels);
  Enumerator e(grid, labels);
  e.run();
  const auto& lps = e.path_log_probs();
  const double hi = lps.empty() ? kNegInf : *std::max_element(lps.begin(), lps.end());
  if (hi == kNegInf) fail(ErrorCode::AllPathsImpossible, "every alignment path has zero probability");
  double sum = 0.0;
  for (const double lp : lps) sum += std::exp(lp - hi);
  return hi + std::log(sum);
}

std::vector<std::size_t> state_path_from_assignment(const LabelSeq& assigned, Label blank) {
  std::vector<std::size_t> states;
  states.reserve(assigned.size());
  std::size_t emitted = 0;
  Label prev = blank;
  for (const Label a : assigned) {
    if (a == blank) {
      states.push_back(2 * emitted);
    } else {
      if (a != prev) ++emitted;
      states.push_back(2 * emitted - 1);
    }
    prev = a;
  }
  return states;
}

FrameAlignment uniform_alignment(std::size_t frames, const LabelSeq& labels, Label vocab_size) {
  check_labels(labels, vocab_size);
  const std::size_t need = min_frames(labels);
  if (frames < need) {
    fail(ErrorCode::InfeasibleLength, "labels need at least " + std::to_string(need) + " frames, have " +
                                          std::to_string(frames));
  }
  const std::size_t count = labels.size();
  const std::size_t extra = frames - need;
  FrameAlignment out;
  out.blank = vocab_size;
  out.assigned.reserve(frames);
  for (std::size_t k = 0; k < count; ++k) {
    const bool repeat = k > 0 && labels[k] == labels[k - 1];
    const std::size_t share = (k + 1) * extra / count - k * extra / count;
    if (repeat) out.assigned.push_back(out.blank);
    out.assigned.insert(out.assigned.end(), 1 + share, labels[k]);
  }
  out.path_log_prob = -static_cast<double>(frames) * std::log(static_cast<double>(vocab_size) + 1.0);
  out.state_path = state_path_from_assignment(out.assigned, out.blank);
  return out;
}

AlignedSamples frames_to_samples(std::span<const FeatureMatrix> features,
                                 std::span<const FrameAlignment> alignments) {
  if (features.size() != alignments.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(features.size()) + " feature matrices but " +
                                        std::to_string(alignments.size()) + " alignments");
  }
  Eigen::Index kept = 0;
  Eigen::Index dim = features.empty() ? 0 : features.front().cols();
  for (std::size_t u = 0; u < features.size(); ++u) {
    if (static_cast<std::size_t>(features[u].rows()) != alignments[u].assigned.size()) {
      fail(ErrorCode::FrameCountMismatch, "utterance " + std::to_string(u) + ": " +
                                              std::to_string(features[u].rows()) + " frames vs alignment of " +
                                              std::to_string(alignments[u].assigned.size()));
    }
    if (features[u].cols() != dim) fail(ErrorCode::DimensionMismatch, "feature dimension differs across utterances");
    for (const Label a : alignments[u].assigned) kept += a != alignments[u].blank;
  }

  AlignedSamples out;
  out.features.resize(kept, dim);
  out.labels.reserve(static_cast<std::size_t>(kept));
  Eigen::Index row = 0;
  for (std::size_t u = 0; u < features.size(); ++u) {
    const auto& a = alignments[u];
    for (std::size_t t = 0; t < a.assigned.size(); ++t) {
      if (a.assigned[t] == a.blank) continue;
      out.features.row(row++) = features[u].values().row(static_cast<Eigen::Index>(t));
      out.labels.push_back(a.assigned[t]);
    }
  }
  return out;
}

}  // namespace xfer
