#include "mist/codestream_index.hpp"

#include "bytes.hpp"
#include "mist/error.hpp"

#include <string>

namespace mist {
namespace {

bool marker_at(std::span<const std::uint8_t> bytes, std::size_t offset, std::uint8_t code) {
  return offset + 2 <= bytes.size() && bytes[offset] == kMarkerPrefix && bytes[offset + 1] == code;
}

}  // namespace

OffsetTable build_offset_table(std::span<const std::uint8_t> bytes) {
  const CodestreamHeader header = parse_header(bytes);
  OffsetTable table;
  std::size_t offset = kMainHeaderSize;
  for (int level = 1; level <= header.max_level(); ++level) {
    if (offset + kTilePartHeaderSize > bytes.size()) {
      throw Error(ErrorCode::TruncatedStream,
                  "tile-part for level " + std::to_string(level) + " missing at offset " +
                      std::to_string(offset));
    }
    if (!marker_at(bytes, offset, kTilePartMarker)) {
      throw Error(ErrorCode::CorruptMarker, "expected 0xFF90 at offset " + std::to_string(offset));
    }
    const std::size_t length = detail::get_be(bytes, offset + 3, 4);
    const std::size_t end = offset + kTilePartHeaderSize + length;
    if (end > bytes.size()) {
      throw Error(ErrorCode::TruncatedStream,
                  "tile-part for level " + std::to_string(level) + " ends past the stream");
    }
    table.entries.push_back({level, offset, end});
    offset = end;
  }
  if (offset + kEocSize > bytes.size()) {
    throw Error(ErrorCode::TruncatedStream, "stream ends before 0xFFD9");
  }
  if (!marker_at(bytes, offset, kEndOfCodestream)) {
    throw Error(ErrorCode::CorruptMarker, "expected 0xFFD9 at offset " + std::to_string(offset));
  }
  table.eoc_offset = offset;
  table.total_length = offset + kEocSize;
  if (table.total_length != bytes.size()) {
    throw Error(ErrorCode::CorruptData, std::to_string(bytes.size() - table.total_length) +
                                            " bytes follow the end-of-codestream marker");
  }
  return table;
}

std::size_t prefix_length(const OffsetTable& table, int level) {
  if (level < 1 || level > table.max_level()) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(level) + " outside [1, " +
                                                std::to_string(table.max_level()) + "]");
  }
  return table.entries[static_cast<std::size_t>(level - 1)].end;
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::Ordering: return "Ordering";
    case ViolationKind::MissingTilePart: return "MissingTilePart";
    case ViolationKind::BadMarker: return "BadMarker";
    case ViolationKind::Gap: return "Gap";
    case ViolationKind::BadLength: return "BadLength";
    case ViolationKind::BadTerminator: return "BadTerminator";
  }
  return "Unknown";
}

std::vector<Violation> validate(std::span<const std::uint8_t> bytes, const OffsetTable& table) {
  std::vector<Violation> out;
  auto report = [&out](ViolationKind kind, int level, std::size_t offset, std::string message) {
    out.push_back({kind, level, offset, std::move(message)});
  };

  if (table.entries.empty()) {
    report(ViolationKind::MissingTilePart, 1, kMainHeaderSize, "table has no entries");
    return out;
  }
  for (std::size_t k = 0; k < table.entries.size(); ++k) {
    const TilePartEntry& e = table.entries[k];
    const int expected = static_cast<int>(k) + 1;
    if (e.level != expected) {
      report(ViolationKind::Ordering, e.level, e.offset,
             "entry " + std::to_string(k) + " has level " + std::to_string(e.level) +
                 ", expected " + std::to_string(expected));
    }
    const std::size_t expected_offset = k == 0 ? kMainHeaderSize : table.entries[k - 1].end;
    if (e.offset != expected_offset) {
      report(ViolationKind::Gap, e.level, e.offset,
             "tile-part for level " + std::to_string(e.level) + " starts at " +
                 std::to_string(e.offset) + ", expected " + std::to_string(expected_offset));
    }
  }

  for (const TilePartEntry& e : table.entries) {
    if (e.offset + kTilePartHeaderSize > bytes.size() || e.end > bytes.size()) {
      report(ViolationKind::MissingTilePart, e.level, e.offset,
             "stream of " + std::to_string(bytes.size()) + " bytes lacks tile-part for level " +
                 std::to_string(e.level));
      return out;
    }
    if (!marker_at(bytes, e.offset, kTilePartMarker)) {
      report(ViolationKind::BadMarker, e.level, e.offset,
             "no 0xFF90 at offset " + std::to_string(e.offset));
      continue;
    }
    if (bytes[e.offset + 2] != e.level - 1) {
      report(ViolationKind::Ordering, e.level, e.offset,
             "tile-part at offset " + std::to_string(e.offset) + " carries index " +
                 std::to_string(bytes[e.offset + 2]) + " but is listed as level " +
                 std::to_string(e.level));
    }
    const std::size_t declared = detail::get_be(bytes, e.offset + 3, 4);
    if (e.offset + kTilePartHeaderSize + declared != e.end) {
      report(ViolationKind::BadLength, e.level, e.offset,
             "declared length " + std::to_string(declared) + " disagrees with recorded end " +
                 std::to_string(e.end));
    }
  }

  if (table.eoc_offset != table.entries.back().end) {
    report(ViolationKind::Gap, 0, table.eoc_offset, "end-of-codestream does not follow last tile-part");
  }
  if (table.eoc_offset + kEocSize != table.total_length) {
    report(ViolationKind::BadLength, 0, table.eoc_offset, "total length does not close after 0xFFD9");
  }
  if (!marker_at(bytes, table.eoc_offset, kEndOfCodestream)) {
    report(ViolationKind::BadTerminator, 0, table.eoc_offset,
           "no 0xFFD9 at offset " + std::to_string(table.eoc_offset));
  }
  if (bytes.size() != table.total_length) {
    report(ViolationKind::BadLength, 0, bytes.size(),
           "stream is " + std::to_string(bytes.size()) + " bytes, table records " +
               std::to_string(table.total_length));
  }
  return out;
}

void to_json(nlohmann::json& j, const TilePartEntry& e) {
  j = nlohmann::json{{"level", e.level}, {"offset", e.offset}, {"end", e.end}};
}

void from_json(const nlohmann::json& j, TilePartEntry& e) {
  j.at("level").get_to(e.level);
  j.at("offset").get_to(e.offset);
  j.at("end").get_to(e.end);
}

}  // namespace mist
