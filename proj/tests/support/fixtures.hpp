#pragma once

// Hand-rolled DICOM and NIfTI byte builders. They share no code with the
// library so reader tests check against an independent encoding.

#include "mist/metadata.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace mist::testing {

inline void le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class DicomBuilder {
 public:
  DicomBuilder& str(std::uint16_t g, std::uint16_t e, const char* vr, std::string v) {
    if (v.size() % 2) v.push_back(std::string(vr) == "UI" ? '\0' : ' ');
    elements_[key(g, e)] = {vr, std::vector<std::uint8_t>(v.begin(), v.end())};
    return *this;
  }
  DicomBuilder& us(std::uint16_t g, std::uint16_t e, std::uint16_t v) {
    std::vector<std::uint8_t> b;
    le(b, v, 2);
    elements_[key(g, e)] = {"US", b};
    return *this;
  }
  DicomBuilder& raw(std::uint16_t g, std::uint16_t e, const char* vr, std::vector<std::uint8_t> b) {
    elements_[key(g, e)] = {vr, std::move(b)};
    return *this;
  }
  DicomBuilder& erase(std::uint16_t g, std::uint16_t e) {
    elements_.erase(key(g, e));
    return *this;
  }
  DicomBuilder& transfer_syntax(std::string uid) {
    syntax_ = std::move(uid);
    return *this;
  }

  std::vector<std::uint8_t> build() const {
    const bool implicit = syntax_ == "1.2.840.10008.1.2";
    std::vector<std::uint8_t> meta;
    auto meta_str = [&](std::uint16_t e, std::string v) {
      if (v.size() % 2) v.push_back('\0');
      emit(meta, key(2, e), "UI", std::vector<std::uint8_t>(v.begin(), v.end()), false);
    };
    meta_str(0x0002, "1.2.840.10008.5.1.4.1.1.2");
    meta_str(0x0003, "1.2.3.4");
    meta_str(0x0010, syntax_);
    std::vector<std::uint8_t> out(128, 0);
    for (char c : std::string("DICM")) out.push_back(static_cast<std::uint8_t>(c));
    std::vector<std::uint8_t> gl;
    le(gl, meta.size(), 4);
    emit(out, key(2, 0), "UL", gl, false);
    out.insert(out.end(), meta.begin(), meta.end());
    for (const auto& [t, e] : elements_) emit(out, t, e.first, e.second, implicit);
    return out;
  }

 private:
  static std::uint32_t key(std::uint16_t g, std::uint16_t e) {
    return (static_cast<std::uint32_t>(g) << 16) | e;
  }
  static void emit(std::vector<std::uint8_t>& out, std::uint32_t t, const std::string& vr,
                   const std::vector<std::uint8_t>& v, bool implicit) {
    le(out, t >> 16, 2);
    le(out, t & 0xFFFF, 2);
    if (implicit) {
      le(out, v.size(), 4);
    } else {
      out.push_back(static_cast<std::uint8_t>(vr[0]));
      out.push_back(static_cast<std::uint8_t>(vr[1]));
      if (vr == "OB" || vr == "OW" || vr == "UN" || vr == "SQ" || vr == "UT" || vr == "OF") {
        le(out, 0, 2);
        le(out, v.size(), 4);
      } else {
        le(out, v.size(), 2);
      }
    }
    out.insert(out.end(), v.begin(), v.end());
  }

  std::map<std::uint32_t, std::pair<std::string, std::vector<std::uint8_t>>> elements_;
  std::string syntax_ = "1.2.840.10008.1.2.1";
};

inline std::string ds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string ds3(const Vec3& v) { return ds(v[0]) + "\\" + ds(v[1]) + "\\" + ds(v[2]); }

struct CtGeometry {
  Vec3 row_dir{1, 0, 0};
  Vec3 col_dir{0, 1, 0};
  Vec3 origin{0, 0, 0};
  double spacing_row = 0.7;
  double spacing_col = 0.7;
  double slice_gap = 2.5;
};

/// One signed 16-bit CT slice at slice index `k` of the given geometry.
inline DicomBuilder ct_slice(const std::string& series_uid, const CtGeometry& g, std::size_t rows,
                             std::size_t cols, std::size_t k, const std::vector<std::int16_t>& hu) {
  const Vec3 n{g.row_dir[1] * g.col_dir[2] - g.row_dir[2] * g.col_dir[1],
               g.row_dir[2] * g.col_dir[0] - g.row_dir[0] * g.col_dir[2],
               g.row_dir[0] * g.col_dir[1] - g.row_dir[1] * g.col_dir[0]};
  const double z = static_cast<double>(k) * g.slice_gap;
  const Vec3 ipp{g.origin[0] + z * n[0], g.origin[1] + z * n[1], g.origin[2] + z * n[2]};
  std::vector<std::uint8_t> pixels;
  for (auto v : hu) le(pixels, static_cast<std::uint16_t>(v), 2);
  DicomBuilder b;
  b.str(0x0008, 0x0016, "UI", "1.2.840.10008.5.1.4.1.1.2")
      .str(0x0008, 0x0018, "UI", series_uid + "." + std::to_string(k + 1))
      .str(0x0008, 0x0060, "CS", "CT")
      .str(0x0010, 0x0010, "PN", "Phantom^Synthetic")
      .str(0x0018, 0x0050, "DS", ds(g.slice_gap))
      .str(0x0020, 0x000E, "UI", series_uid)
      .str(0x0020, 0x0013, "IS", std::to_string(k + 1))
      .str(0x0020, 0x0032, "DS", ds3(ipp))
      .str(0x0020, 0x0037, "DS", ds3(g.row_dir) + "\\" + ds3(g.col_dir))
      .us(0x0028, 0x0002, 1)
      .str(0x0028, 0x0004, "CS", "MONOCHROME2")
      .us(0x0028, 0x0010, static_cast<std::uint16_t>(rows))
      .us(0x0028, 0x0011, static_cast<std::uint16_t>(cols))
      .str(0x0028, 0x0030, "DS", ds(g.spacing_row) + "\\" + ds(g.spacing_col))
      .us(0x0028, 0x0100, 16)
      .us(0x0028, 0x0101, 16)
      .us(0x0028, 0x0102, 15)
      .us(0x0028, 0x0103, 1)
      .str(0x0028, 0x1052, "DS", "0")
      .str(0x0028, 0x1053, "DS", "1")
      .raw(0x7FE0, 0x0010, "OW", pixels);
  return b;
}

/// Random orthonormal in-plane directions.
inline CtGeometry random_geometry(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto unit = [](Vec3 v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return Vec3{v[0] / n, v[1] / n, v[2] / n};
  };
  CtGeometry g;
  g.row_dir = unit({u(rng), u(rng), u(rng)});
  Vec3 t = unit({u(rng), u(rng), u(rng)});
  const double d = t[0] * g.row_dir[0] + t[1] * g.row_dir[1] + t[2] * g.row_dir[2];
  g.col_dir = unit({t[0] - d * g.row_dir[0], t[1] - d * g.row_dir[1], t[2] - d * g.row_dir[2]});
  g.origin = {u(rng) * 200, u(rng) * 200, u(rng) * 200};
  std::uniform_real_distribution<double> sp(0.3, 3.0);
  g.spacing_row = sp(rng);
  g.spacing_col = sp(rng);
  g.slice_gap = sp(rng);
  return g;
}

/// Minimal little-endian NIfTI-1 (.nii) with an sform in RAS.
inline std::vector<std::uint8_t> nifti_bytes(std::array<int, 3> dims, int datatype, int bitpix,
                                             const std::vector<std::uint8_t>& voxels,
                                             const std::array<std::array<float, 4>, 3>& srow = {
                                                 {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}}}) {
  std::vector<std::uint8_t> h(352, 0);
  auto put = [&](std::size_t at, std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) h[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  auto putf = [&](std::size_t at, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put(at, bits, 4);
  };
  put(0, 348, 4);
  put(40, 3, 2);
  for (int i = 0; i < 3; ++i) put(42 + 2 * static_cast<std::size_t>(i), static_cast<std::uint64_t>(dims[i]), 2);
  for (int i = 3; i < 7; ++i) put(42 + 2 * static_cast<std::size_t>(i), 1, 2);
  put(70, static_cast<std::uint64_t>(datatype), 2);
  put(72, static_cast<std::uint64_t>(bitpix), 2);
  putf(76, 1.0f);
  for (int i = 0; i < 3; ++i) putf(80 + 4 * static_cast<std::size_t>(i), 1.0f);
  putf(108, 352.0f);
  put(254, 1, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) putf(280 + 16 * i + 4 * j, srow[i][j]);
  }
  std::memcpy(h.data() + 344, "n+1", 4);
  h.insert(h.end(), voxels.begin(), voxels.end());
  return h;
}

}  // namespace mist::testing
