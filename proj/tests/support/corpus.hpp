#pragma once

// On-disk fixtures: temporary directories and small series in each source format.

#include "mist/formats.hpp"
#include "support/fixtures.hpp"
#include "support/planes.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace mist::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mist-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Smooth signed CT-like values in [-1024, 3071].
inline std::vector<std::int16_t> ct_values(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const PixelPlane p = smooth_plane(rng, rows, cols, 12);
  std::vector<std::int16_t> v(p.samples.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<std::int16_t>(p.samples[i] - 1024);
  return v;
}

/// Writes `slices` CT slices into `dir`; returns the file paths.
inline std::vector<std::filesystem::path> write_ct_series(const std::filesystem::path& dir,
                                                          const std::string& uid, std::size_t rows,
                                                          std::size_t cols, std::size_t slices,
                                                          const CtGeometry& g = {},
                                                          std::uint64_t seed = 1) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (std::size_t k = 0; k < slices; ++k) {
    const auto bytes = ct_slice(uid, g, rows, cols, k, ct_values(rows, cols, seed + k)).build();
    out.push_back(dir / ("ct_" + std::to_string(k) + ".dcm"));
    write_file_bytes(out.back(), bytes);
  }
  return out;
}

/// A uint16 NIfTI volume of smooth planes.
inline std::filesystem::path write_nifti_volume(const std::filesystem::path& path, int rows, int cols,
                                                int slices, std::uint64_t seed = 7) {
  std::vector<std::uint8_t> voxels;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < slices; ++k) {
    const PixelPlane p = smooth_plane(rng, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), 12);
    for (auto s : p.samples) le(voxels, s, 2);
  }
  std::filesystem::create_directories(path.parent_path());
  write_file_bytes(path, nifti_bytes({cols, rows, slices}, 512, 16, voxels,
                                     {{{0.8f, 0, 0, -10}, {0, 0.8f, 0, 20}, {0, 0, 2.0f, 5}}}));
  return path;
}

inline std::filesystem::path write_png(const std::filesystem::path& path, const PixelPlane& plane) {
  std::filesystem::create_directories(path.parent_path());
  write_file_bytes(path, encode_png(plane));
  return path;
}

/// The three exclusion fixtures: no pixel data, float pixels, a range wider than 16 bits.
struct ExclusionFixtures {
  std::filesystem::path no_pixels;
  std::filesystem::path float_pixels;
  std::filesystem::path wide_range;
};

inline ExclusionFixtures write_exclusion_fixtures(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ExclusionFixtures f;
  const auto base = [] { return ct_slice("1.2.826.0.1.77", CtGeometry{}, 2, 2, 0, {1, 2, 3, 4}); };
  f.no_pixels = dir / "no_pixels.dcm";
  write_file_bytes(f.no_pixels, base().erase(0x7FE0, 0x0010).build());

  f.float_pixels = dir / "float.nii";
  write_file_bytes(f.float_pixels, nifti_bytes({2, 2, 4}, 16, 32, std::vector<std::uint8_t>(64, 0)));

  std::vector<std::uint8_t> wide;
  for (std::int64_t v : {0, 70000, 1, 2}) le(wide, static_cast<std::uint64_t>(v), 4);
  f.wide_range = dir / "wide.nii";
  write_file_bytes(f.wide_range, nifti_bytes({2, 2, 1}, 8, 32, wide));
  return f;
}

}  // namespace mist::testing
