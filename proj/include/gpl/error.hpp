#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpl {

enum class ErrorCode {
  // numeric / degenerate input
  NonPositiveAxis,
  OutOfRangeValue,
  ShapeMismatch,
  EmptyMask,
  DegenerateInput,
  NoEllipseSolution,
  NotAnEllipse,
  ImaginaryEllipse,
  DegenerateEllipse,
  InvalidSize,
  IndexOutOfRange,
  OutOfRangeThreshold,
  NonFiniteInput,
  NonFiniteLoss,
  EmptyGroundTruth,
  EmptyVolume,
  BothEmpty,
  LengthMismatch,
  InvalidArgument,
  InvalidSpec,
  // file formats and I/O
  UnreadableFile,
  InconsistentDimensions,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  ParseError,
  WriteFailed,
};

/// Broad class of an error; the CLI maps each class to an exit code.
enum class ErrorClass { Usage, IO, Numeric };

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveAxis: return "NonPositiveAxis";
    case ErrorCode::OutOfRangeValue: return "OutOfRangeValue";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoEllipseSolution: return "NoEllipseSolution";
    case ErrorCode::NotAnEllipse: return "NotAnEllipse";
    case ErrorCode::ImaginaryEllipse: return "ImaginaryEllipse";
    case ErrorCode::DegenerateEllipse: return "DegenerateEllipse";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::OutOfRangeThreshold: return "OutOfRangeThreshold";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::EmptyVolume: return "EmptyVolume";
    case ErrorCode::BothEmpty: return "BothEmpty";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::InconsistentDimensions: return "InconsistentDimensions";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::WriteFailed: return "WriteFailed";
  }
  return "Unknown";
}

constexpr ErrorClass error_class(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnreadableFile:
    case ErrorCode::InconsistentDimensions:
    case ErrorCode::BadMagic:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::TruncatedFile:
    case ErrorCode::ParseError:
    case ErrorCode::WriteFailed:
      return ErrorClass::IO;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidSpec:
      return ErrorClass::Usage;
    default:
      return ErrorClass::Numeric;
  }
}

/// The single exception type thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gpl
