#pragma once

// Big/little-endian helpers and a bounded reader shared by the binary formats.

#include "mist/error.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mist::detail {

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = width - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_bytes(std::vector<std::uint8_t>& out, std::string_view text) {
  out.insert(out.end(), text.begin(), text.end());
}

inline void set_le(std::span<std::uint8_t> out, std::size_t at, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 8) | in[at + i];
  return v;
}

inline std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = width - 1; i >= 0; --i) v = (v << 8) | in[at + i];
  return v;
}

/// Sequential little-endian reader that reports overruns with `code`.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, ErrorCode code = ErrorCode::CorruptData)
      : data_(data), code_(code) {}

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool at_end() const noexcept { return pos_ >= data_.size(); }
  void seek(std::size_t pos) {
    if (pos > data_.size()) fail("seek past end");
    pos_ = pos;
  }

  void need(std::size_t n) const {
    if (n > remaining()) fail("unexpected end of data");
  }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint64_t le(int width) {
    need(static_cast<std::size_t>(width));
    const auto v = get_le(data_, pos_, width);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint64_t be(int width) {
    need(static_cast<std::size_t>(width));
    const auto v = get_be(data_, pos_, width);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string text(std::size_t n) {
    auto b = bytes(n);
    return std::string(b.begin(), b.end());
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(code_, what + " at byte " + std::to_string(pos_));
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  ErrorCode code_;
};

}  // namespace mist::detail
