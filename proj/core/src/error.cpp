#include "xfer/error.hpp"

namespace xfer {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::FortranOrderUnsupported: return "FortranOrderUnsupported";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DuplicateCandidateId: return "DuplicateCandidateId";
    case ErrorCode::UnknownCandidate: return "UnknownCandidate";
    case ErrorCode::UttIdMismatch: return "UttIdMismatch";
    case ErrorCode::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::MissingPosteriors: return "MissingPosteriors";
    case ErrorCode::EmptyLabels: return "EmptyLabels";
    case ErrorCode::InfeasibleLength: return "InfeasibleLength";
    case ErrorCode::AllPathsImpossible: return "AllPathsImpossible";
    case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::DegenerateShape: return "DegenerateShape";
    case ErrorCode::NoEvaluableClass: return "NoEvaluableClass";
    case ErrorCode::EmptyAlignedSet: return "EmptyAlignedSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BandwidthSearchFailed: return "BandwidthSearchFailed";
    case ErrorCode::TooManyPoints: return "TooManyPoints";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::CandidateSetMismatch: return "CandidateSetMismatch";
    case ErrorCode::MixedSeeds: return "MixedSeeds";
    case ErrorCode::MissingSourceFeatures: return "MissingSourceFeatures";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace xfer
