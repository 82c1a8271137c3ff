#pragma once

#include <stdexcept>
#include <string>

namespace osil {

/// Error categories raised across the pipeline. Precondition violations
/// throw; expected runtime outcomes (non-convergence, task failure) are
/// reported through result structs instead.
enum class ErrorCode {
  InvalidArgument,
  InvalidDepth,
  BehindCamera,
  EmptyMask,
  EmptyScene,
  UnknownObject,
  WidthOutOfRange,
  MissingKeyframe,
  NoTransitions,
  NoValidKeyframe,
  ParseError,
  RangeError,
  NoMatches,
  TooFewPoints,
  DegenerateGeometry,
  NoConsensus,
  AlignmentFailed,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Stage of an alignment step that failed; carried by AlignmentError so
/// callers can attribute failures in run reports.
enum class AlignStage { Match, Mask, Estimate };

const char* align_stage_name(AlignStage stage);

class AlignmentError : public Error {
 public:
  AlignmentError(AlignStage stage, const std::string& what)
      : Error(ErrorCode::AlignmentFailed,
              std::string(align_stage_name(stage)) + ": " + what),
        stage_(stage) {}

  AlignStage stage() const { return stage_; }

 private:
  AlignStage stage_;
};

}  // namespace osil
