#include "mist/error.hpp"

#include <array>
#include <utility>

namespace mist {
namespace {

constexpr std::array<std::pair<ExclusionReason, std::string_view>, 6> kReasons{{
    {ExclusionReason::NoPixelData, "NoPixelData"},
    {ExclusionReason::UnsupportedDepth, "UnsupportedDepth"},
    {ExclusionReason::UnsupportedType, "UnsupportedType"},
    {ExclusionReason::UnsupportedFormat, "UnsupportedFormat"},
    {ExclusionReason::MixedSeries, "MixedSeries"},
    {ExclusionReason::Unreadable, "Unreadable"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedDepth: return "UnsupportedDepth";
    case ErrorCode::UnsupportedType: return "UnsupportedType";
    case ErrorCode::StructuralMismatch: return "StructuralMismatch";
    case ErrorCode::TruncatedStream: return "TruncatedStream";
    case ErrorCode::CorruptMarker: return "CorruptMarker";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::Excluded: return "Excluded";
    case ErrorCode::MixedSeries: return "MixedSeries";
    case ErrorCode::HierarchyViolation: return "HierarchyViolation";
    case ErrorCode::MissingGeometry: return "MissingGeometry";
    case ErrorCode::NothingIngestable: return "NothingIngestable";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::DimsOutOfRange: return "DimsOutOfRange";
  }
  return "Unknown";
}

std::string_view to_string(ExclusionReason reason) noexcept {
  for (const auto& [r, name] : kReasons) {
    if (r == reason) return name;
  }
  return "Unknown";
}

ExclusionReason exclusion_reason_from_string(std::string_view text) {
  for (const auto& [r, name] : kReasons) {
    if (name == text) return r;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown exclusion reason: " + std::string(text));
}

}  // namespace mist
