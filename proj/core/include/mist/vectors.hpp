#pragma once

// Codec conformance corpus for independent decoders.
//
//   OUT/index.json
//   OUT/<name>/codestream.mistcs
//   OUT/<name>/level_<i>.raw      stored samples, row-major uint16 little-endian
//
// index.json lists, per vector: name, rows, cols, bit_depth, n_levels,
// rescale_intercept, and per level {level, rows, cols, prefix_length, file,
// sha256}.

#include "mist/codec.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mist {

struct NamedPlane {
  std::string name;
  PixelPlane plane;
};

/// Deterministic synthetic planes covering odd sizes, depths, and level counts.
std::vector<NamedPlane> default_vector_planes();

/// Encodes each plane and writes the corpus; returns the number of files written.
std::size_t write_test_vectors(const std::filesystem::path& out, const std::vector<NamedPlane>& planes);

}  // namespace mist
