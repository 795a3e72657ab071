#pragma once

// Block-wise Rice coding of wavelet subbands.
//
// Each band is cut into block_size x block_size blocks in raster order. A block
// starts with one header byte:
//   0x40        every coefficient is zero, no payload follows
//   0x80 | w    raw escape: 32-bit block minimum, then each coefficient's
//               offset from it in w bits (w may be 0)
//   k (0..31)   Rice code with parameter k
// Rice-coded coefficients are zigzag mapped first. Each block's payload is
// padded to a byte boundary.

#include "mist/codec.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mist::detail {

inline constexpr std::uint8_t kBlockZero = 0x40;
inline constexpr std::uint8_t kBlockRaw = 0x80;

void encode_band(const CoefficientPlane& band, int block_size, std::vector<std::uint8_t>& out);

/// Decodes a band of known dimensions from `in` starting at `pos`; advances
/// `pos`. Throws CorruptData on malformed or overrunning input.
CoefficientPlane decode_band(std::size_t rows, std::size_t cols, int block_size,
                             std::span<const std::uint8_t> in, std::size_t& pos);

}  // namespace mist::detail
