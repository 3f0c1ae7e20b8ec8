#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlab {

enum class ErrorCode {
  MalformedHeader,
  InconsistentRecordCount,
  DegenerateScaling,
  RateMismatch,
  OverlapError,
  NegativeSpanError,
  UnknownClassError,
  ParseError,
  InvalidConfig,
  MissingElectrode,
  EmptyAverageSet,
  TooShort,
  DimensionMismatch,
  InsufficientData,
  NonFiniteLikelihood,
  EmptyInput,
  SingleClassInput,
  SplitOverlap,
  EmptyCorpus,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::InconsistentRecordCount: return "InconsistentRecordCount";
    case ErrorCode::DegenerateScaling: return "DegenerateScaling";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::NegativeSpanError: return "NegativeSpanError";
    case ErrorCode::UnknownClassError: return "UnknownClassError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingElectrode: return "MissingElectrode";
    case ErrorCode::EmptyAverageSet: return "EmptyAverageSet";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonFiniteLikelihood: return "NonFiniteLikelihood";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::SplitOverlap: return "SplitOverlap";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code so the
/// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mlab
