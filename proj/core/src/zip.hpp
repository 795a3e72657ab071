#pragma once

// Uncompressed (stored) zip archives with fixed timestamps, so identical
// inputs give identical bytes.

#include "mist/formats.hpp"

#include <cstdint>
#include <vector>

namespace mist::detail {

std::vector<std::uint8_t> zip_stored(const std::vector<ExportedFile>& files);

}  // namespace mist::detail
