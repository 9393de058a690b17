#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace elicit {

enum class ErrorCode {
  DuplicateRating,
  ValueOutOfRange,
  DomainMismatch,
  EmptyPopulation,
  EmptyTrainingSet,
  EmptyCandidateSet,
  NonFiniteScore,
  TooFewUsers,
  InsufficientRatings,
  MissingSplit,
  EmptyTestSet,
  NoRecommendations,
  ZeroBaseline,
  MissingFile,
  MalformedRow,
  TruncatedBlock,
  UnparsableScore,
  EmptyResult,
  InvalidSpec,
  InvalidConfig,
  InvalidArgument,
  TrainingDiverged,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateRating: return "DuplicateRating";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::TooFewUsers: return "TooFewUsers";
    case ErrorCode::InsufficientRatings: return "InsufficientRatings";
    case ErrorCode::MissingSplit: return "MissingSplit";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::NoRecommendations: return "NoRecommendations";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::TruncatedBlock: return "TruncatedBlock";
    case ErrorCode::UnparsableScore: return "UnparsableScore";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
  }
  return "Unknown";
}

// Every failure raised by the library carries a code so callers (and the CLI
// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace elicit
