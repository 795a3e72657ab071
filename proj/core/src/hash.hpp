#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mist::detail {

/// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  std::array<std::uint8_t, 32> digest();
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string to_hex(std::span<const std::uint8_t> bytes);

/// Deterministic DICOM UID under the 2.25 (UUID-derived) root.
std::string uid_from_seed(std::string_view seed);

}  // namespace mist::detail
