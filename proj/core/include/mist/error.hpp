#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mist {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedDepth,
  UnsupportedType,
  StructuralMismatch,
  TruncatedStream,
  CorruptMarker,
  CorruptData,
  LevelOutOfRange,
  Excluded,
  MixedSeries,
  HierarchyViolation,
  MissingGeometry,
  NothingIngestable,
  NotFound,
  IoError,
  DimsMismatch,
  DimsOutOfRange,
};

/// Why an input file was left out of an ingest.
enum class ExclusionReason {
  NoPixelData,
  UnsupportedDepth,
  UnsupportedType,
  UnsupportedFormat,
  MixedSeries,
  Unreadable,
};

std::string_view to_string(ErrorCode code) noexcept;
std::string_view to_string(ExclusionReason reason) noexcept;
ExclusionReason exclusion_reason_from_string(std::string_view text);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by format readers when a file is well-formed enough to identify but
/// cannot be ingested.
class ExcludedError : public Error {
 public:
  ExcludedError(ExclusionReason reason, const std::string& message)
      : Error(ErrorCode::Excluded, message), reason_(reason) {}

  ExclusionReason reason() const noexcept { return reason_; }

 private:
  ExclusionReason reason_;
};

}  // namespace mist
