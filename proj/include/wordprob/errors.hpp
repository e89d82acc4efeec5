#pragma once

#include <stdexcept>
#include <string>

namespace wordprob {

enum class ErrorCode {
  // vocabulary / tokeniser
  DuplicateId,
  EmptySurface,
  EmptyMarkedSet,
  UnknownWord,
  UnmappedSequence,
  NotUniquelyDecodable,
  MissingMidMap,
  // scoring
  SchemeMismatch,
  FirstWordNeedsFix3,
  NonEmptyContext,
  // language models
  ParseError,
  NotNormalised,
  SupportViolation,
  MissingContext,
  BackendUnavailable,
  MalformedResponse,
  // oracle
  BudgetTooSmall,
  ZeroContextMass,
  // analysis
  LengthMismatch,
  DegenerateInput,
  SingularDesign,
  EmptyCorpus,
  MisalignedFrames,
  // cli
  ConfigError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wordprob
