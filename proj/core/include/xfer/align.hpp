#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xfer/types.hpp"

namespace xfer {

/// Blank-interleaved label sequence [blank, y1, blank, y2, ..., yL, blank].
class ExtendedLabelSeq {
 public:
  ExtendedLabelSeq(const LabelSeq& labels, Label vocab_size);

  std::size_t size() const noexcept { return symbols_.size(); }
  std::size_t label_count() const noexcept { return (symbols_.size() - 1) / 2; }
  Label operator[](std::size_t s) const { return symbols_[s]; }
  Label blank() const noexcept { return blank_; }
  const LabelSeq& symbols() const noexcept { return symbols_; }

  /// Whether state s may be entered directly from s - 2 (skipping a blank).
  bool can_skip_into(std::size_t s) const noexcept {
    return s >= 2 && symbols_[s] != blank_ && symbols_[s] != symbols_[s - 2];
  }

 private:
  LabelSeq symbols_;
  Label blank_;
};

ExtendedLabelSeq extend_labels(const LabelSeq& labels, Label vocab_size);

struct FrameAlignment {
  LabelSeq assigned;               // length T, blank = vocab size
  double path_log_prob = 0.0;
  std::vector<std::size_t> state_path;  // indices into the extended sequence
  Label blank = 0;
};

/// Fewest frames able to emit `labels`: one per label plus a separating
/// blank for every adjacent repeat.
std::size_t min_frames(const LabelSeq& labels);

/// Drops blanks and merges consecutive repeats.
LabelSeq collapse(const LabelSeq& assigned, Label blank);

/// Maximum-probability CTC path via dynamic programming with backpointers.
/// Ties prefer staying in a state, then advancing by one, then skipping.
FrameAlignment viterbi_align(const PosteriorGrid& grid, const LabelSeq& labels);

/// Log of the summed probability over all valid CTC paths (forward pass).
double ctc_total_log_prob(const PosteriorGrid& grid, const LabelSeq& labels);

inline constexpr std::size_t kBruteForceMaxFrames = 12;
inline constexpr std::size_t kBruteForceMaxLabels = 4;

/// Reference alignment by enumerating every symbol sequence that collapses to
/// `labels`. Guarded to T <= 12 and L <= 4.
FrameAlignment brute_force_align(const PosteriorGrid& grid, const LabelSeq& labels);

/// Log-sum-exp over the same enumeration as brute_force_align.
double brute_force_total_log_prob(const PosteriorGrid& grid, const LabelSeq& labels);

/// Length-proportional segmentation used when no posterior source exists:
/// each label receives an equal share of the frames beyond the minimum, and
/// repeated labels are separated by a leading blank.
FrameAlignment uniform_alignment(std::size_t frames, const LabelSeq& labels, Label vocab_size);

/// Extended-sequence state for each frame of a valid assignment.
std::vector<std::size_t> state_path_from_assignment(const LabelSeq& assigned, Label blank);

struct AlignedSamples {
  Matrix features;  // one row per non-blank frame
  LabelSeq labels;
};

/// Stacks (frame, label) pairs for non-blank frames, utterance order then
/// frame order.
AlignedSamples frames_to_samples(std::span<const FeatureMatrix> features,
                                 std::span<const FrameAlignment> alignments);

}  // namespace xfer
