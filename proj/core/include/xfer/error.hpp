#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xfer {

/// Failure categories surfaced by the engine. Names are stable and appear
/// verbatim in structured error records written by the CLI.
enum class ErrorCode {
  // ingest
  BadMagic,
  UnsupportedDtype,
  FortranOrderUnsupported,
  TruncatedPayload,
  MalformedHeader,
  NonFiniteInput,
  ParseError,
  MissingFile,
  DuplicateCandidateId,
  UnknownCandidate,
  UttIdMismatch,
  FrameCountMismatch,
  InvalidLabel,
  MissingPosteriors,
  // align
  EmptyLabels,
  InfeasibleLength,
  AllPathsImpossible,
  EnumerationTooLarge,
  // logme
  DegenerateShape,
  NoEvaluableClass,
  EmptyAlignedSet,
  // swd / tsne
  LengthMismatch,
  ZeroDimension,
  EmptyDomain,
  DimensionMismatch,
  BandwidthSearchFailed,
  TooManyPoints,
  // rankeval
  TooFewPoints,
  DomainError,
  CandidateSetMismatch,
  MixedSeeds,
  // cli
  MissingSourceFeatures,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace xfer
