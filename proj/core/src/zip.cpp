#include "zip.hpp"

#include "bytes.hpp"
#include "mist/error.hpp"

#include <zlib.h>

#include <limits>

namespace mist::detail {
namespace {

constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

}  // namespace

std::vector<std::uint8_t> zip_stored(const std::vector<ExportedFile>& files) {
  if (files.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "too many zip entries");
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> central;
  for (const auto& f : files) {
    if (f.bytes.size() >= std::numeric_limits<std::uint32_t>::max() || f.name.size() > 0xFFFF ||
        out.size() >= std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::InvalidArgument, "archive exceeds zip32 limits");
    }
    const auto crc = static_cast<std::uint32_t>(
        crc32(crc32(0L, Z_NULL, 0), f.bytes.data(), static_cast<uInt>(f.bytes.size())));
    const auto size = static_cast<std::uint32_t>(f.bytes.size());
    const auto offset = static_cast<std::uint32_t>(out.size());

    put_le(out, 0x04034b50, 4);
    put_le(out, 20, 2);  // version needed
    put_le(out, 0, 2);   // flags
    put_le(out, 0, 2);   // stored
    put_le(out, kDosTime, 2);
    put_le(out, kDosDate, 2);
    put_le(out, crc, 4);
    put_le(out, size, 4);
    put_le(out, size, 4);
    put_le(out, f.name.size(), 2);
    put_le(out, 0, 2);
    put_bytes(out, f.name);
    out.insert(out.end(), f.bytes.begin(), f.bytes.end());

    put_le(central, 0x02014b50, 4);
    put_le(central, 20, 2);  // version made by
    put_le(central, 20, 2);
    put_le(central, 0, 2);
    put_le(central, 0, 2);
    put_le(central, kDosTime, 2);
    put_le(central, kDosDate, 2);
    put_le(central, crc, 4);
    put_le(central, size, 4);
    put_le(central, size, 4);
    put_le(central, f.name.size(), 2);
    put_le(central, 0, 2);  // extra
    put_le(central, 0, 2);  // comment
    put_le(central, 0, 2);  // disk
    put_le(central, 0, 2);  // internal attributes
    put_le(central, 0, 4);  // external attributes
    put_le(central, offset, 4);
    put_bytes(central, f.name);
  }
  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out.insert(out.end(), central.begin(), central.end());
  put_le(out, 0x06054b50, 4);
  put_le(out, 0, 2);
  put_le(out, 0, 2);
  put_le(out, files.size(), 2);
  put_le(out, files.size(), 2);
  put_le(out, central.size(), 4);
  put_le(out, central_offset, 4);
  put_le(out, 0, 2);
  return out;
}

}  // namespace mist::detail
