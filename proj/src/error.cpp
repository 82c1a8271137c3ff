#include "osil/error.hpp"

namespace osil {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return "InvalidArgument";
    case ErrorCode::InvalidDepth:
      return "InvalidDepth";
    case ErrorCode::BehindCamera:
      return "BehindCamera";
    case ErrorCode::EmptyMask:
      return "EmptyMask";
    case ErrorCode::EmptyScene:
      return "EmptyScene";
    case ErrorCode::UnknownObject:
      return "UnknownObject";
    case ErrorCode::WidthOutOfRange:
      return "WidthOutOfRange";
    case ErrorCode::MissingKeyframe:
      return "MissingKeyframe";
    case ErrorCode::NoTransitions:
      return "NoTransitions";
    case ErrorCode::NoValidKeyframe:
      return "NoValidKeyframe";
    case ErrorCode::ParseError:
      return "ParseError";
    case ErrorCode::RangeError:
      return "RangeError";
    case ErrorCode::NoMatches:
      return "NoMatches";
    case ErrorCode::TooFewPoints:
      return "TooFewPoints";
    case ErrorCode::DegenerateGeometry:
      return "DegenerateGeometry";
    case ErrorCode::NoConsensus:
      return "NoConsensus";
    case ErrorCode::AlignmentFailed:
      return "AlignmentFailed";
    case ErrorCode::IoError:
      return "IoError";
  }
  return "Unknown";
}

const char* align_stage_name(AlignStage stage) {
  switch (stage) {
    case AlignStage::Match:
      return "match";
    case AlignStage::Mask:
      return "mask";
    case AlignStage::Estimate:
      return "estimate";
  }
  return "unknown";
}

}  // namespace osil
