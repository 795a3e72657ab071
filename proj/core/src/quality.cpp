#include "mist/quality.hpp"

#include "mist/codestream_index.hpp"
#include "mist/error.hpp"
#include "mist/store.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mist {
namespace {

constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void require_same_dims(const Image& x, const Image& y) {
  if (x.rows != y.rows || x.cols != y.cols) {
    throw Error(ErrorCode::DimsMismatch, std::to_string(x.rows) + "x" + std::to_string(x.cols) +
                                             " vs " + std::to_string(y.rows) + "x" +
                                             std::to_string(y.cols));
  }
}

// Sums of `q` over every h x w window, by a horizontal then a vertical pass.
std::vector<double> window_sums(const std::vector<double>& q, std::size_t rows, std::size_t cols,
                                std::size_t h, std::size_t w) {
  const std::size_t out_rows = rows - h + 1, out_cols = cols - w + 1;
  std::vector<double> horizontal(rows * out_cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = q.data() + r * cols;
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0;
      for (std::size_t k = 0; k < w; ++k) s += row[c + k];
      horizontal[r * out_cols + c] = s;
    }
  }
  std::vector<double> out(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0;
      for (std::size_t k = 0; k < h; ++k) s += horizontal[(r + k) * out_cols + c];
      out[r * out_cols + c] = s;
    }
  }
  return out;
}

}  // namespace

Image to_image(const PixelPlane& plane) {
  Image img{plane.rows, plane.cols, std::vector<double>(plane.samples.size())};
  for (std::size_t i = 0; i < plane.samples.size(); ++i) {
    img.values[i] = static_cast<double>(plane.signal(i));
  }
  return img;
}

Image rescale01(const Image& image) {
  Image out = image;
  if (image.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(image.values.begin(), image.values.end());
  const double min = *lo, range = *hi - *lo;
  for (auto& v : out.values) v = range > 0 ? (v - min) / range : 0.0;
  return out;
}

Image bilinear_downsample(const Image& image, std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1 || rows > image.rows || cols > image.cols) {
    throw Error(ErrorCode::DimsOutOfRange,
                "cannot resample " + std::to_string(image.rows) + "x" + std::to_string(image.cols) +
                    " to " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (rows == image.rows && cols == image.cols) return image;

  struct Tap {
    std::size_t i0, i1;
    double w;
  };
  auto taps = [](std::size_t src, std::size_t dst) {
    std::vector<Tap> out(dst);
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    for (std::size_t j = 0; j < dst; ++j) {
      double s = (static_cast<double>(j) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(s));
      const std::size_t i1 = std::min(i0 + 1, src - 1);
      out[j] = {i0, i1, s - static_cast<double>(i0)};
    }
    return out;
  };
  const auto ty = taps(image.rows, rows), tx = taps(image.cols, cols);
  Image out{rows, cols, std::vector<double>(rows * cols)};
  for (std::size_t r = 0; r < rows; ++r) {
    const Tap& y = ty[r];
    for (std::size_t c = 0; c < cols; ++c) {
      const Tap& x = tx[c];
      const double top = image.at(y.i0, x.i0) * (1 - x.w) + image.at(y.i0, x.i1) * x.w;
      const double bottom = image.at(y.i1, x.i0) * (1 - x.w) + image.at(y.i1, x.i1) * x.w;
      out.values[r * cols + c] = top * (1 - y.w) + bottom * y.w;
    }
  }
  return out;
}

double ssim(const Image& x, const Image& y) {
  require_same_dims(x, y);
  if (x.values.empty()) throw Error(ErrorCode::DimsMismatch, "empty image");
  const std::size_t rows = x.rows, cols = x.cols;
  std::size_t h = kSsimWindow, w = kSsimWindow;
  if (rows < kSsimWindow || cols < kSsimWindow) {
    h = rows;
    w = cols;
  }
  const std::size_t n = rows * cols;
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x.values[i] * x.values[i];
    yy[i] = y.values[i] * y.values[i];
    xy[i] = x.values[i] * y.values[i];
  }
  const auto sx = window_sums(x.values, rows, cols, h, w);
  const auto sy = window_sums(y.values, rows, cols, h, w);
  const auto sxx = window_sums(xx, rows, cols, h, w);
  const auto syy = window_sums(yy, rows, cols, h, w);
  const auto sxy = window_sums(xy, rows, cols, h, w);

  const double count = static_cast<double>(h * w);
  const double norm = count > 1 ? count - 1 : 1.0;
  const double c1 = kK1 * kK1, c2 = kK2 * kK2;
  double total = 0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    const double mx = sx[i] / count, my = sy[i] / count;
    const double vx = count > 1 ? (sxx[i] - sx[i] * mx) / norm : 0.0;
    const double vy = count > 1 ? (syy[i] - sy[i] * my) / norm : 0.0;
    const double cov = count > 1 ? (sxy[i] - sx[i] * my) / norm : 0.0;
    total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(sx.size());
}

double psnr(const Image& x, const Image& y) {
  require_same_dims(x, y);
  double sum = 0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double d = x.values[i] - y.values[i];
    sum += d * d;
  }
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(x.values.size()) / sum);
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  double sum = 0;
  for (double v : values) {
    if (std::isinf(v)) {
      ++s.infinite;
    } else {
      sum += v;
      ++s.finite;
    }
  }
  if (s.finite == 0) return s;
  s.mean = sum / static_cast<double>(s.finite);
  if (s.finite > 1) {
    double ss = 0;
    for (double v : values) {
      if (!std::isinf(v)) ss += (v - s.mean) * (v - s.mean);
    }
    s.sd = std::sqrt(ss / static_cast<double>(s.finite - 1));
  }
  return s;
}

std::vector<LevelQuality> evaluate_codestream(const PixelPlane& original,
                                              std::span<const std::uint8_t> codestream) {
  const OffsetTable table = build_offset_table(codestream);
  const Image source = to_image(original);
  std::vector<LevelQuality> out;
  for (int level = 1; level <= table.max_level(); ++level) {
    const std::size_t prefix = prefix_length(table, level);
    const Image decoded = to_image(decode(codestream.first(prefix), DecodeLevel::at(level)));
    const Image reference = rescale01(bilinear_downsample(source, decoded.rows, decoded.cols));
    const Image candidate = rescale01(decoded);
    LevelQuality q;
    q.level = level;
    q.rows = decoded.rows;
    q.cols = decoded.cols;
    q.bytes = prefix;
    q.ssim_values.push_back(ssim(reference, candidate));
    q.psnr_values.push_back(psnr(reference, candidate));
    out.push_back(std::move(q));
  }
  return out;
}

QualityReport evaluate_series(const Store& store, const std::string& series_id) {
  const SeriesRecord rec = store.record(series_id);
  QualityReport report;
  report.series_id = series_id;
  report.format = rec.format;
  report.original_bytes = rec.original_bytes;
  report.stored_bytes = rec.stored_bytes();
  report.levels.resize(static_cast<std::size_t>(rec.max_level()));
  for (std::size_t k = 0; k < rec.num_slices; ++k) {
    const auto bytes = store.read_codestream(series_id, k);
    const PixelPlane original = decode(bytes);
    const auto per_level = evaluate_codestream(original, bytes);
    for (std::size_t i = 0; i < per_level.size(); ++i) {
      LevelQuality& dst = report.levels[i];
      dst.level = per_level[i].level;
      dst.rows = per_level[i].rows;
      dst.cols = per_level[i].cols;
      dst.bytes += per_level[i].bytes;
      dst.ssim_values.push_back(per_level[i].ssim_values.front());
      dst.psnr_values.push_back(per_level[i].psnr_values.front());
    }
  }
  return report;
}

QualityReport merge_reports(const std::vector<QualityReport>& reports) {
  QualityReport merged;
  merged.series_id = "all";
  std::size_t depth = 0;
  for (const auto& r : reports) {
    depth = std::max(depth, r.levels.size());
    merged.original_bytes += r.original_bytes;
    merged.stored_bytes += r.stored_bytes;
  }
  if (!reports.empty()) merged.format = reports.front().format;
  merged.levels.resize(depth);
  for (std::size_t i = 0; i < depth; ++i) {
    LevelQuality& dst = merged.levels[i];
    dst.level = static_cast<int>(i + 1);
    for (const auto& r : reports) {
      if (r.levels.empty()) continue;
      const LevelQuality& src = r.levels[std::min(i, r.levels.size() - 1)];
      if (dst.rows == 0) {
        dst.rows = src.rows;
        dst.cols = src.cols;
      }
      dst.bytes += src.bytes;
      dst.ssim_values.insert(dst.ssim_values.end(), src.ssim_values.begin(), src.ssim_values.end());
      dst.psnr_values.insert(dst.psnr_values.end(), src.psnr_values.begin(), src.psnr_values.end());
    }
  }
  return merged;
}

}  // namespace mist
