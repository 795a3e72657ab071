#pragma once

// Decomposition -> byte extent map for a codestream.

#include "mist/codec.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mist {

struct TilePartEntry {
  int level = 1;               // 1 = coarsest
  std::size_t offset = 0;      // position of the 0xFF90 marker
  std::size_t end = 0;         // one past the last payload byte

  friend bool operator==(const TilePartEntry&, const TilePartEntry&) = default;
};

struct OffsetTable {
  std::vector<TilePartEntry> entries;
  std::size_t total_length = 0;
  std::size_t eoc_offset = 0;

  int max_level() const noexcept { return static_cast<int>(entries.size()); }

  friend bool operator==(const OffsetTable&, const OffsetTable&) = default;
};

/// Walks the declared tile-part lengths and checks each marker on the way.
/// Throws CorruptMarker or TruncatedStream.
OffsetTable build_offset_table(std::span<const std::uint8_t> bytes);
inline OffsetTable build_offset_table(const Codestream& cs) { return build_offset_table(cs.bytes); }

/// Bytes needed to decode `level`. Throws LevelOutOfRange.
std::size_t prefix_length(const OffsetTable& table, int level);

enum class ViolationKind {
  Ordering,
  MissingTilePart,
  BadMarker,
  Gap,
  BadLength,
  BadTerminator,
};

struct Violation {
  ViolationKind kind;
  int level = 0;  // 0 when not tied to a tile-part
  std::size_t offset = 0;
  std::string message;
};

std::string_view to_string(ViolationKind kind) noexcept;

/// Checks `table` against `bytes`; an empty result means every marker,
/// abutment, and length invariant holds.
std::vector<Violation> validate(std::span<const std::uint8_t> bytes, const OffsetTable& table);

void to_json(nlohmann::json& j, const TilePartEntry& e);
void from_json(const nlohmann::json& j, TilePartEntry& e);

}  // namespace mist
