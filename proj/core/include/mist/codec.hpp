#pragma once

// Reversible multi-resolution codec.
//
// A plane is split into a LeGall 5/3 integer wavelet pyramid and written as a
// codestream whose tile-parts are ordered coarsest first. Any prefix that ends
// on a tile-part boundary decodes to the matching sub-resolution image.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mist {

inline constexpr std::uint8_t kMarkerPrefix = 0xFF;
inline constexpr std::uint8_t kTilePartMarker = 0x90;  // 0xFF90
inline constexpr std::uint8_t kEndOfCodestream = 0xD9;  // 0xFFD9

inline constexpr std::size_t kMainHeaderSize = 32;
inline constexpr std::size_t kTilePartHeaderSize = 7;  // marker, index, BE32 length
inline constexpr std::size_t kEocSize = 2;

inline constexpr int kDefaultAlpha = 64;
inline constexpr int kDefaultBlockSize = 64;
inline constexpr int kMaxBitDepth = 16;
inline constexpr int kMaxLevels = 30;

struct RescaleSlope {
  std::uint32_t numerator = 1;
  std::uint32_t denominator = 1;

  friend bool operator==(const RescaleSlope&, const RescaleSlope&) = default;
};

/// One 2-D slice of unsigned samples. The source signal is
/// `stored * slope + intercept`; slope is always 1 for integer sources.
struct PixelPlane {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int bit_depth = 16;
  std::vector<std::uint16_t> samples;
  std::int64_t rescale_intercept = 0;
  RescaleSlope rescale_slope{};

  std::uint16_t at(std::size_t r, std::size_t c) const { return samples[r * cols + c]; }

  /// Source value of sample `i` after undoing the intercept shift.
  std::int64_t signal(std::size_t i) const {
    return static_cast<std::int64_t>(samples[i]) + rescale_intercept;
  }

  /// Throws InvalidArgument unless dims, sample count, and depth bound hold.
  void validate() const;

  friend bool operator==(const PixelPlane&, const PixelPlane&) = default;
};

/// Smallest depth in [1, 16] that can hold `max_value`.
int bit_depth_for(std::uint32_t max_value) noexcept;

/// floor(log2(min(rows, cols) / alpha)), clamped at zero.
int decomposition_levels(std::size_t rows, std::size_t cols, int alpha = kDefaultAlpha);

struct DecompositionSpec {
  int n_levels = 0;
  int alpha = kDefaultAlpha;
  int block_size = kDefaultBlockSize;

  int decomposition_count() const noexcept { return n_levels + 1; }

  static DecompositionSpec for_plane(std::size_t rows, std::size_t cols,
                                     int alpha = kDefaultAlpha);

  friend bool operator==(const DecompositionSpec&, const DecompositionSpec&) = default;
};

/// Shift an integer-valued plane into unsigned storage. Intercept is the
/// minimum when any value is negative, otherwise zero.
PixelPlane compute_rescale(std::size_t rows, std::size_t cols,
                           std::span<const std::int64_t> values);
/// Same, but rejects non-integral values with UnsupportedType.
PixelPlane compute_rescale(std::size_t rows, std::size_t cols,
                           std::span<const double> values);

/// Row-major signed coefficient plane.
struct CoefficientPlane {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> values;

  std::int32_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  friend bool operator==(const CoefficientPlane&, const CoefficientPlane&) = default;
};

struct DetailBands {
  CoefficientPlane hl;  // horizontal high-pass, vertical low-pass
  CoefficientPlane lh;  // horizontal low-pass, vertical high-pass
  CoefficientPlane hh;

  friend bool operator==(const DetailBands&, const DetailBands&) = default;
};

/// `details` runs from the coarsest level to the finest. Dropping trailing
/// entries yields the pyramid of a lower resolution.
struct SubbandPyramid {
  CoefficientPlane ll;
  std::vector<DetailBands> details;

  friend bool operator==(const SubbandPyramid&, const SubbandPyramid&) = default;
};

SubbandPyramid forward_transform(const PixelPlane& plane, int n_levels);

/// Reconstructs the plane at the resolution implied by the number of detail
/// levels present. Samples are clamped to [0, 2^bit_depth) so that
/// sub-resolution output remains a valid plane; the full reconstruction is
/// exact and never clamps.
PixelPlane inverse_transform(const SubbandPyramid& pyramid, int bit_depth = 16);

/// Unclamped reconstruction, exposed for tests of the transform itself.
CoefficientPlane inverse_transform_coefficients(const SubbandPyramid& pyramid);

struct CodestreamHeader {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int bit_depth = 16;
  int n_levels = 0;
  int block_size = kDefaultBlockSize;
  std::int64_t rescale_intercept = 0;
  RescaleSlope rescale_slope{};

  int max_level() const noexcept { return n_levels + 1; }

  friend bool operator==(const CodestreamHeader&, const CodestreamHeader&) = default;
};

/// Parses the fixed 32-byte main header.
/// Throws TruncatedStream, CorruptMarker (bad magic), CorruptData.
CodestreamHeader parse_header(std::span<const std::uint8_t> bytes);

struct Codestream {
  std::vector<std::uint8_t> bytes;
  DecompositionSpec spec;
  CodestreamHeader header;
};

/// Emits header, n+1 tile-parts in resolution order, and the EOC marker.
/// Throws UnsupportedDepth for bit_depth > 16.
Codestream encode(const PixelPlane& plane, const DecompositionSpec& spec);
/// Encodes with the level count derived from the plane's dimensions.
Codestream encode(const PixelPlane& plane);

/// Resolution selector for `decode`: 1 is the coarsest, n+1 is full.
struct DecodeLevel {
  std::optional<int> level;  // empty means full resolution

  static DecodeLevel full() { return {}; }
  static DecodeLevel at(int level) { return {level}; }
};

/// Decodes a codestream or any prefix of one that ends at or past the close
/// of the requested tile-part.
/// Throws TruncatedStream, CorruptMarker, CorruptData, LevelOutOfRange.
PixelPlane decode(std::span<const std::uint8_t> bytes, DecodeLevel level = DecodeLevel::full());

/// Dimensions of the image decoded at `level` for an n-level stream.
std::pair<std::size_t, std::size_t> level_dims(std::size_t rows, std::size_t cols, int n_levels,
                                               int level);

inline std::size_t ceil_div(std::size_t value, std::size_t divisor) {
  return (value + divisor - 1) / divisor;
}

}  // namespace mist
