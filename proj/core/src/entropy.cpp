#include "entropy.hpp"

#include "mist/error.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

namespace mist::detail {
namespace {

constexpr int kMaxRiceParameter = 31;
// A unary run longer than this cannot come from a 16-bit source plane.
constexpr std::uint64_t kMaxQuotient = std::uint64_t{1} << 24;

std::uint32_t zigzag(std::int32_t v) {
  return v >= 0 ? static_cast<std::uint32_t>(v) << 1
                : (static_cast<std::uint32_t>(-(v + 1)) << 1) | 1u;
}

std::int32_t unzigzag(std::uint32_t u) {
  return (u & 1u) ? -static_cast<std::int32_t>(u >> 1) - 1 : static_cast<std::int32_t>(u >> 1);
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) put_bit((value >> i) & 1u);
  }
  void put_bit(std::uint32_t bit) {
    acc_ = static_cast<std::uint8_t>((acc_ << 1) | bit);
    if (++fill_ == 8) flush_byte();
  }
  void put_ones(std::uint64_t count) {
    while (fill_ != 0 && count > 0) {
      put_bit(1);
      --count;
    }
    for (; count >= 8; count -= 8) out_.push_back(0xFF);
    while (count-- > 0) put_bit(1);
  }
  void align() {
    if (fill_ > 0) {
      acc_ = static_cast<std::uint8_t>(acc_ << (8 - fill_));
      flush_byte();
    }
  }

 private:
  void flush_byte() {
    out_.push_back(acc_);
    acc_ = 0;
    fill_ = 0;
  }

  std::vector<std::uint8_t>& out_;
  std::uint8_t acc_ = 0;
  int fill_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> in, std::size_t pos) : in_(in), pos_(pos) {}

  std::uint32_t get_bit() {
    if (bit_ == 0) {
      if (pos_ >= in_.size()) {
        throw Error(ErrorCode::CorruptData, "entropy payload overruns tile-part");
      }
      cur_ = in_[pos_++];
      bit_ = 8;
    }
    --bit_;
    return (cur_ >> bit_) & 1u;
  }
  std::uint32_t get(int bits) {
    std::uint32_t v = 0;
    for (int i = 0; i < bits; ++i) v = (v << 1) | get_bit();
    return v;
  }
  std::uint64_t get_unary() {
    std::uint64_t q = 0;
    while (get_bit() == 1) {
      if (++q > kMaxQuotient) throw Error(ErrorCode::CorruptData, "unary run too long");
    }
    return q;
  }
  // Drops the padding bits of the current byte.
  std::size_t align() {
    bit_ = 0;
    return pos_;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_;
  std::uint8_t cur_ = 0;
  int bit_ = 0;
};

void encode_block(std::span<const std::int32_t> block, std::span<std::uint32_t> mapped,
                  std::vector<std::uint8_t>& out) {
  const auto [lo, hi] = std::minmax_element(block.begin(), block.end());
  if (*lo == 0 && *hi == 0) {
    out.push_back(kBlockZero);
    return;
  }
  const std::uint64_t n = block.size();
  const auto raw_width = static_cast<int>(
      std::bit_width(static_cast<std::uint32_t>(static_cast<std::int64_t>(*hi) - *lo)));
  const std::uint64_t raw_cost = 32 + n * static_cast<std::uint64_t>(raw_width);

  std::uint32_t max_mapped = 0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    mapped[i] = zigzag(block[i]);
    max_mapped = std::max(max_mapped, mapped[i]);
  }
  int best_k = 0;
  std::uint64_t best_cost = std::numeric_limits<std::uint64_t>::max();
  for (int k = 0; k <= std::min(static_cast<int>(std::bit_width(max_mapped)), kMaxRiceParameter);
       ++k) {
    std::uint64_t cost = n * static_cast<std::uint64_t>(k + 1);
    for (std::size_t i = 0; i < block.size(); ++i) cost += mapped[i] >> k;
    if (cost < best_cost) {
      best_cost = cost;
      best_k = k;
    }
  }

  BitWriter writer(out);
  if (raw_cost < best_cost) {
    out.push_back(static_cast<std::uint8_t>(kBlockRaw | raw_width));
    writer.put(static_cast<std::uint32_t>(*lo), 32);
    for (std::int32_t v : block) {
      writer.put(static_cast<std::uint32_t>(static_cast<std::int64_t>(v) - *lo), raw_width);
    }
  } else {
    out.push_back(static_cast<std::uint8_t>(best_k));
    const std::uint32_t mask = best_k == 0 ? 0u : (~0u >> (32 - best_k));
    for (std::size_t i = 0; i < block.size(); ++i) {
      writer.put_ones(mapped[i] >> best_k);
      writer.put_bit(0);
      writer.put(mapped[i] & mask, best_k);
    }
  }
  writer.align();
}

}  // namespace

void encode_band(const CoefficientPlane& band, int block_size, std::vector<std::uint8_t>& out) {
  const auto bs = static_cast<std::size_t>(block_size);
  std::vector<std::int32_t> block;
  std::vector<std::uint32_t> mapped(bs * bs);
  block.reserve(bs * bs);
  for (std::size_t r0 = 0; r0 < band.rows; r0 += bs) {
    for (std::size_t c0 = 0; c0 < band.cols; c0 += bs) {
      block.clear();
      const std::size_t r1 = std::min(band.rows, r0 + bs);
      const std::size_t c1 = std::min(band.cols, c0 + bs);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) block.push_back(band.at(r, c));
      }
      encode_block(block, mapped, out);
    }
  }
}

CoefficientPlane decode_band(std::size_t rows, std::size_t cols, int block_size,
                             std::span<const std::uint8_t> in, std::size_t& pos) {
  const auto bs = static_cast<std::size_t>(block_size);
  CoefficientPlane band{rows, cols, std::vector<std::int32_t>(rows * cols)};
  for (std::size_t r0 = 0; r0 < rows; r0 += bs) {
    for (std::size_t c0 = 0; c0 < cols; c0 += bs) {
      if (pos >= in.size()) throw Error(ErrorCode::CorruptData, "missing block header");
      const std::uint8_t head = in[pos++];
      const std::size_t r1 = std::min(rows, r0 + bs);
      const std::size_t c1 = std::min(cols, c0 + bs);
      if (head == kBlockZero) continue;

      BitReader reader(in, pos);
      if (head & kBlockRaw) {
        const int width = head & 0x3F;
        if (width > 32) {
          throw Error(ErrorCode::CorruptData, "bad raw block width " + std::to_string(width));
        }
        const auto base = static_cast<std::int64_t>(static_cast<std::int32_t>(reader.get(32)));
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            const std::int64_t v = base + reader.get(width);
            if (v > std::numeric_limits<std::int32_t>::max()) {
              throw Error(ErrorCode::CorruptData, "coefficient out of range");
            }
            band.values[r * cols + c] = static_cast<std::int32_t>(v);
          }
        }
      } else {
        if (head > kMaxRiceParameter) {
          throw Error(ErrorCode::CorruptData, "bad block header " + std::to_string(head));
        }
        const int k = head;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            const std::uint64_t q = reader.get_unary();
            const std::uint64_t u = (q << k) | reader.get(k);
            if (u > std::numeric_limits<std::uint32_t>::max()) {
              throw Error(ErrorCode::CorruptData, "coefficient out of range");
            }
            band.values[r * cols + c] = unzigzag(static_cast<std::uint32_t>(u));
          }
        }
      }
      pos = reader.align();
    }
  }
  return band;
}

}  // namespace mist::detail
