#include "mist/codec.hpp"
#include "mist/error.hpp"

#include <algorithm>
#include <string>

namespace mist {
namespace {

// One lifting step pair of the reversible 5/3 filter over `count` samples
// read from `in` with stride `stride`. Low-pass output goes to out[0, nl),
// high-pass to out[nl, count).
void lift_forward(const std::int32_t* in, std::size_t stride, std::size_t count,
                  std::int32_t* out) {
  if (count == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t nl = (count + 1) / 2;
  const std::size_t nh = count / 2;
  auto x = [&](std::size_t i) { return in[i * stride]; };
  std::int32_t* d = out + nl;
  for (std::size_t i = 0; i < nh; ++i) {
    const std::int32_t right = (2 * i + 2 < count) ? x(2 * i + 2) : x(2 * i);
    d[i] = x(2 * i + 1) - ((x(2 * i) + right) >> 1);
  }
  for (std::size_t i = 0; i < nl; ++i) {
    const std::int32_t dl = d[i > 0 ? i - 1 : 0];
    const std::int32_t dr = d[i < nh ? i : nh - 1];
    out[i] = x(2 * i) + ((dl + dr + 2) >> 2);
  }
}

void lift_inverse(const std::int32_t* in, std::size_t count, std::int32_t* out,
                  std::size_t stride) {
  if (count == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t nl = (count + 1) / 2;
  const std::size_t nh = count / 2;
  const std::int32_t* s = in;
  const std::int32_t* d = in + nl;
  auto x = [&](std::size_t i) -> std::int32_t& { return out[i * stride]; };
  for (std::size_t i = 0; i < nl; ++i) {
    const std::int32_t dl = d[i > 0 ? i - 1 : 0];
    const std::int32_t dr = d[i < nh ? i : nh - 1];
    x(2 * i) = s[i] - ((dl + dr + 2) >> 2);
  }
  for (std::size_t i = 0; i < nh; ++i) {
    const std::int32_t right = (2 * i + 2 < count) ? x(2 * i + 2) : x(2 * i);
    x(2 * i + 1) = d[i] + ((x(2 * i) + right) >> 1);
  }
}

CoefficientPlane sub_plane(const CoefficientPlane& src, std::size_t r0, std::size_t c0,
                           std::size_t rows, std::size_t cols) {
  CoefficientPlane out{rows, cols, std::vector<std::int32_t>(rows * cols)};
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(src.values.begin() + static_cast<std::ptrdiff_t>((r0 + r) * src.cols + c0), cols,
                out.values.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return out;
}

void put_plane(CoefficientPlane& dst, const CoefficientPlane& src, std::size_t r0,
               std::size_t c0) {
  for (std::size_t r = 0; r < src.rows; ++r) {
    std::copy_n(src.values.begin() + static_cast<std::ptrdiff_t>(r * src.cols), src.cols,
                dst.values.begin() + static_cast<std::ptrdiff_t>((r0 + r) * dst.cols + c0));
  }
}

// Rows then columns; result is in quadrant layout (LL | HL / LH | HH).
void forward_level(CoefficientPlane& p) {
  std::vector<std::int32_t> line(std::max(p.rows, p.cols));
  for (std::size_t r = 0; r < p.rows; ++r) {
    std::int32_t* row = p.values.data() + r * p.cols;
    lift_forward(row, 1, p.cols, line.data());
    std::copy_n(line.data(), p.cols, row);
  }
  for (std::size_t c = 0; c < p.cols; ++c) {
    std::int32_t* col = p.values.data() + c;
    lift_forward(col, p.cols, p.rows, line.data());
    for (std::size_t r = 0; r < p.rows; ++r) col[r * p.cols] = line[r];
  }
}

void inverse_level(CoefficientPlane& p) {
  std::vector<std::int32_t> line(std::max(p.rows, p.cols));
  for (std::size_t c = 0; c < p.cols; ++c) {
    std::int32_t* col = p.values.data() + c;
    for (std::size_t r = 0; r < p.rows; ++r) line[r] = col[r * p.cols];
    lift_inverse(line.data(), p.rows, col, p.cols);
  }
  for (std::size_t r = 0; r < p.rows; ++r) {
    std::int32_t* row = p.values.data() + r * p.cols;
    std::copy_n(row, p.cols, line.data());
    lift_inverse(line.data(), p.cols, row, 1);
  }
}

void check_band(const CoefficientPlane& band, std::size_t rows, std::size_t cols,
                const char* name, std::size_t level) {
  if (band.rows != rows || band.cols != cols || band.values.size() != rows * cols) {
    throw Error(ErrorCode::StructuralMismatch,
                std::string(name) + " band of detail level " + std::to_string(level) +
                    " is " + std::to_string(band.rows) + "x" + std::to_string(band.cols) +
                    ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

SubbandPyramid forward_transform(const PixelPlane& plane, int n_levels) {
  if (n_levels < 0 || n_levels > kMaxLevels) {
    throw Error(ErrorCode::InvalidArgument, "level count out of range: " + std::to_string(n_levels));
  }
  plane.validate();
  CoefficientPlane current{plane.rows, plane.cols,
                           std::vector<std::int32_t>(plane.samples.begin(), plane.samples.end())};
  SubbandPyramid pyramid;
  pyramid.details.resize(static_cast<std::size_t>(n_levels));
  for (int level = n_levels - 1; level >= 0; --level) {
    forward_level(current);
    const std::size_t lr = ceil_div(current.rows, 2), hr = current.rows / 2;
    const std::size_t lc = ceil_div(current.cols, 2), hc = current.cols / 2;
    DetailBands& bands = pyramid.details[static_cast<std::size_t>(level)];
    bands.hl = sub_plane(current, 0, lc, lr, hc);
    bands.lh = sub_plane(current, lr, 0, hr, lc);
    bands.hh = sub_plane(current, lr, lc, hr, hc);
    current = sub_plane(current, 0, 0, lr, lc);
  }
  pyramid.ll = std::move(current);
  return pyramid;
}

CoefficientPlane inverse_transform_coefficients(const SubbandPyramid& pyramid) {
  CoefficientPlane current = pyramid.ll;
  if (current.values.size() != current.rows * current.cols || current.rows == 0 ||
      current.cols == 0) {
    throw Error(ErrorCode::StructuralMismatch, "LL band has inconsistent dimensions");
  }
  for (std::size_t i = 0; i < pyramid.details.size(); ++i) {
    const DetailBands& bands = pyramid.details[i];
    const std::size_t rows = current.rows + bands.lh.rows;
    const std::size_t cols = current.cols + bands.hl.cols;
    if (ceil_div(rows, 2) != current.rows || ceil_div(cols, 2) != current.cols) {
      throw Error(ErrorCode::StructuralMismatch,
                  "detail level " + std::to_string(i) + " does not split " +
                      std::to_string(rows) + "x" + std::to_string(cols) + " dyadically");
    }
    check_band(bands.hl, current.rows, cols / 2, "HL", i);
    check_band(bands.lh, rows / 2, current.cols, "LH", i);
    check_band(bands.hh, rows / 2, cols / 2, "HH", i);

    CoefficientPlane next{rows, cols, std::vector<std::int32_t>(rows * cols)};
    put_plane(next, current, 0, 0);
    put_plane(next, bands.hl, 0, current.cols);
    put_plane(next, bands.lh, current.rows, 0);
    put_plane(next, bands.hh, current.rows, current.cols);
    inverse_level(next);
    current = std::move(next);
  }
  return current;
}

PixelPlane inverse_transform(const SubbandPyramid& pyramid, int bit_depth) {
  if (bit_depth < 1 || bit_depth > kMaxBitDepth) {
    throw Error(ErrorCode::UnsupportedDepth, "bit depth " + std::to_string(bit_depth));
  }
  const CoefficientPlane coefficients = inverse_transform_coefficients(pyramid);
  const std::int32_t max_value = (1 << bit_depth) - 1;
  PixelPlane plane;
  plane.rows = coefficients.rows;
  plane.cols = coefficients.cols;
  plane.bit_depth = bit_depth;
  plane.samples.resize(coefficients.values.size());
  std::transform(coefficients.values.begin(), coefficients.values.end(), plane.samples.begin(),
                 [max_value](std::int32_t v) {
                   return static_cast<std::uint16_t>(std::clamp(v, 0, max_value));
                 });
  return plane;
}

}  // namespace mist
