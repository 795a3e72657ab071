#include "mist/codec.hpp"

#include "bytes.hpp"
#include "entropy.hpp"
#include "mist/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace mist {
namespace {

constexpr std::uint8_t kMagic[4] = {'M', 'I', 'S', 'T'};
constexpr std::uint8_t kVersion = 1;

void check_spec(const DecompositionSpec& spec) {
  if (spec.n_levels < 0 || spec.n_levels > kMaxLevels) {
    throw Error(ErrorCode::InvalidArgument, "level count out of range: " +
                                                std::to_string(spec.n_levels));
  }
  if (spec.block_size < 1 || spec.block_size > (1 << 15) ||
      !std::has_single_bit(static_cast<unsigned>(spec.block_size))) {
    throw Error(ErrorCode::InvalidArgument,
                "block size must be a power of two: " + std::to_string(spec.block_size));
  }
}

void append_tile_part(std::vector<std::uint8_t>& out, int index,
                      const std::vector<std::uint8_t>& payload) {
  out.push_back(kMarkerPrefix);
  out.push_back(kTilePartMarker);
  out.push_back(static_cast<std::uint8_t>(index));
  detail::put_be(out, payload.size(), 4);
  out.insert(out.end(), payload.begin(), payload.end());
}

}  // namespace

void PixelPlane::validate() const {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::InvalidArgument, "plane has an empty dimension");
  if (bit_depth < 1 || bit_depth > kMaxBitDepth) {
    throw Error(ErrorCode::UnsupportedDepth, "bit depth " + std::to_string(bit_depth));
  }
  if (samples.size() != rows * cols) {
    throw Error(ErrorCode::InvalidArgument, "sample count " + std::to_string(samples.size()) +
                                                " does not match " + std::to_string(rows) + "x" +
                                                std::to_string(cols));
  }
  const std::uint32_t limit = 1u << bit_depth;
  for (std::uint16_t s : samples) {
    if (s >= limit) {
      throw Error(ErrorCode::InvalidArgument,
                  "sample " + std::to_string(s) + " exceeds " + std::to_string(bit_depth) + " bits");
    }
  }
}

int bit_depth_for(std::uint32_t max_value) noexcept {
  return std::clamp(static_cast<int>(std::bit_width(max_value)), 1, kMaxBitDepth);
}

int decomposition_levels(std::size_t rows, std::size_t cols, int alpha) {
  if (rows < 1 || cols < 1 || alpha < 1) {
    throw Error(ErrorCode::InvalidArgument, "dimensions and alpha must be positive");
  }
  const std::uint64_t smaller = std::min(rows, cols);
  int n = 0;
  while ((static_cast<std::uint64_t>(alpha) << (n + 1)) <= smaller) ++n;
  return n;
}

DecompositionSpec DecompositionSpec::for_plane(std::size_t rows, std::size_t cols, int alpha) {
  DecompositionSpec spec;
  spec.alpha = alpha;
  spec.n_levels = std::min(decomposition_levels(rows, cols, alpha), kMaxLevels);
  return spec;
}

PixelPlane compute_rescale(std::size_t rows, std::size_t cols,
                           std::span<const std::int64_t> values) {
  if (rows < 1 || cols < 1 || values.size() != rows * cols) {
    throw Error(ErrorCode::InvalidArgument, "value count does not match dimensions");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const std::int64_t intercept = *lo < 0 ? *lo : 0;
  // Compare in unsigned space so extreme int64 inputs cannot overflow.
  const std::uint64_t span = static_cast<std::uint64_t>(*hi) - static_cast<std::uint64_t>(intercept);
  if (span > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::UnsupportedDepth,
                "value range [" + std::to_string(*lo) + ", " + std::to_string(*hi) +
                    "] needs more than 16 bits");
  }
  PixelPlane plane;
  plane.rows = rows;
  plane.cols = cols;
  plane.rescale_intercept = intercept;
  plane.bit_depth = bit_depth_for(static_cast<std::uint32_t>(span));
  plane.samples.resize(values.size());
  std::transform(values.begin(), values.end(), plane.samples.begin(), [intercept](std::int64_t v) {
    return static_cast<std::uint16_t>(v - intercept);
  });
  return plane;
}

PixelPlane compute_rescale(std::size_t rows, std::size_t cols, std::span<const double> values) {
  std::vector<std::int64_t> integral(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v != std::floor(v) || std::fabs(v) > 9.0e15) {
      throw Error(ErrorCode::UnsupportedType, "non-integer sample value at index " +
                                                  std::to_string(i));
    }
    integral[i] = static_cast<std::int64_t>(v);
  }
  return compute_rescale(rows, cols, integral);
}

std::pair<std::size_t, std::size_t> level_dims(std::size_t rows, std::size_t cols, int n_levels,
                                               int level) {
  if (level < 1 || level > n_levels + 1) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(level) + " outside [1, " +
                                                std::to_string(n_levels + 1) + "]");
  }
  const std::size_t scale = std::size_t{1} << (n_levels + 1 - level);
  return {ceil_div(rows, scale), ceil_div(cols, scale)};
}

Codestream encode(const PixelPlane& plane) {
  return encode(plane, DecompositionSpec::for_plane(plane.rows, plane.cols));
}

Codestream encode(const PixelPlane& plane, const DecompositionSpec& spec) {
  if (plane.bit_depth > kMaxBitDepth || plane.bit_depth < 1) {
    throw Error(ErrorCode::UnsupportedDepth, "bit depth " + std::to_string(plane.bit_depth));
  }
  check_spec(spec);
  if (plane.rows > std::numeric_limits<std::uint32_t>::max() ||
      plane.cols > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "plane dimensions exceed 32 bits");
  }
  if (plane.rescale_slope.numerator != 1 || plane.rescale_slope.denominator != 1) {
    throw Error(ErrorCode::UnsupportedType, "fractional rescale slopes are not supported");
  }
  const SubbandPyramid pyramid = forward_transform(plane, spec.n_levels);

  Codestream cs;
  cs.spec = spec;
  cs.header = CodestreamHeader{plane.rows,         plane.cols,         plane.bit_depth,
                               spec.n_levels,      spec.block_size,    plane.rescale_intercept,
                               plane.rescale_slope};
  auto& out = cs.bytes;
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  detail::put_be(out, plane.rows, 4);
  detail::put_be(out, plane.cols, 4);
  out.push_back(static_cast<std::uint8_t>(plane.bit_depth));
  out.push_back(static_cast<std::uint8_t>(spec.n_levels));
  out.push_back(static_cast<std::uint8_t>(std::countr_zero(static_cast<unsigned>(spec.block_size))));
  detail::put_be(out, static_cast<std::uint64_t>(plane.rescale_intercept), 8);
  detail::put_be(out, plane.rescale_slope.numerator, 4);
  detail::put_be(out, plane.rescale_slope.denominator, 4);

  std::vector<std::uint8_t> payload;
  detail::encode_band(pyramid.ll, spec.block_size, payload);
  append_tile_part(out, 0, payload);
  for (std::size_t i = 0; i < pyramid.details.size(); ++i) {
    payload.clear();
    const DetailBands& bands = pyramid.details[i];
    detail::encode_band(bands.hl, spec.block_size, payload);
    detail::encode_band(bands.lh, spec.block_size, payload);
    detail::encode_band(bands.hh, spec.block_size, payload);
    append_tile_part(out, static_cast<int>(i + 1), payload);
  }
  out.push_back(kMarkerPrefix);
  out.push_back(kEndOfCodestream);
  return cs;
}

CodestreamHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMainHeaderSize) {
    throw Error(ErrorCode::TruncatedStream, "codestream shorter than its " +
                                                std::to_string(kMainHeaderSize) + "-byte header");
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(ErrorCode::CorruptMarker, "missing MIST magic");
  }
  if (bytes[4] != kVersion) {
    throw Error(ErrorCode::CorruptData, "unsupported codestream version " + std::to_string(bytes[4]));
  }
  CodestreamHeader h;
  h.rows = detail::get_be(bytes, 5, 4);
  h.cols = detail::get_be(bytes, 9, 4);
  h.bit_depth = bytes[13];
  h.n_levels = bytes[14];
  const int block_log2 = bytes[15];
  h.rescale_intercept = static_cast<std::int64_t>(detail::get_be(bytes, 16, 8));
  h.rescale_slope.numerator = static_cast<std::uint32_t>(detail::get_be(bytes, 24, 4));
  h.rescale_slope.denominator = static_cast<std::uint32_t>(detail::get_be(bytes, 28, 4));
  if (h.rows == 0 || h.cols == 0 || h.bit_depth < 1 || h.bit_depth > kMaxBitDepth ||
      h.n_levels > kMaxLevels || block_log2 > 15 || h.rescale_slope.denominator == 0) {
    throw Error(ErrorCode::CorruptData, "codestream header fields out of range");
  }
  h.block_size = 1 << block_log2;
  return h;
}

PixelPlane decode(std::span<const std::uint8_t> bytes, DecodeLevel which) {
  const CodestreamHeader h = parse_header(bytes);
  const int level = which.level.value_or(h.max_level());
  if (level < 1 || level > h.max_level()) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(level) + " outside [1, " +
                                                std::to_string(h.max_level()) + "]");
  }

  SubbandPyramid pyramid;
  std::size_t offset = kMainHeaderSize;
  for (int part = 0; part < level; ++part) {
    if (offset + kTilePartHeaderSize > bytes.size()) {
      throw Error(ErrorCode::TruncatedStream,
                  "stream ends before tile-part " + std::to_string(part) + " header");
    }
    if (bytes[offset] != kMarkerPrefix || bytes[offset + 1] != kTilePartMarker) {
      throw Error(ErrorCode::CorruptMarker,
                  "expected 0xFF90 at offset " + std::to_string(offset));
    }
    if (bytes[offset + 2] != part) {
      throw Error(ErrorCode::CorruptData, "tile-part " + std::to_string(part) +
                                              " carries index " + std::to_string(bytes[offset + 2]));
    }
    const std::size_t length = detail::get_be(bytes, offset + 3, 4);
    const std::size_t begin = offset + kTilePartHeaderSize;
    if (length > bytes.size() - begin) {
      throw Error(ErrorCode::TruncatedStream,
                  "stream ends inside tile-part " + std::to_string(part));
    }
    const auto payload = bytes.subspan(begin, length);
    std::size_t pos = 0;
    const auto [rows, cols] = level_dims(h.rows, h.cols, h.n_levels, part + 1);
    if (part == 0) {
      pyramid.ll = detail::decode_band(rows, cols, h.block_size, payload, pos);
    } else {
      const std::size_t lr = ceil_div(rows, 2), lc = ceil_div(cols, 2);
      DetailBands bands;
      bands.hl = detail::decode_band(lr, cols / 2, h.block_size, payload, pos);
      bands.lh = detail::decode_band(rows / 2, lc, h.block_size, payload, pos);
      bands.hh = detail::decode_band(rows / 2, cols / 2, h.block_size, payload, pos);
      pyramid.details.push_back(std::move(bands));
    }
    if (pos != payload.size()) {
      throw Error(ErrorCode::CorruptData, "tile-part " + std::to_string(part) + " has " +
                                              std::to_string(payload.size() - pos) +
                                              " trailing bytes");
    }
    offset = begin + length;
  }
  // Only a complete stream can be checked for its terminator.
  if (level == h.max_level() && bytes.size() >= offset + kEocSize &&
      (bytes[offset] != kMarkerPrefix || bytes[offset + 1] != kEndOfCodestream)) {
    throw Error(ErrorCode::CorruptMarker, "expected 0xFFD9 at offset " + std::to_string(offset));
  }

  PixelPlane plane = inverse_transform(pyramid, h.bit_depth);
  plane.rescale_intercept = h.rescale_intercept;
  plane.rescale_slope = h.rescale_slope;
  return plane;
}

}  // namespace mist
