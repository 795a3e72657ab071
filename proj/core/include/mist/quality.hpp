#pragma once

// SSIM/PSNR and the per-level evaluation protocol: each decoded level is
// compared with the bilinearly downsampled original, both min-max rescaled
// to [0, 1].

#include "mist/codec.hpp"
#include "mist/metadata.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace mist {

class Store;

/// Row-major real-valued image.
struct Image {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Signal values (stored + intercept) as doubles.
Image to_image(const PixelPlane& plane);

/// Min-max rescale to [0, 1]; a constant image maps to all zeros.
Image rescale01(const Image& image);

/// Bilinear resampling with half-pixel-centre alignment. Throws
/// DimsOutOfRange unless 1 <= target <= source in both axes.
Image bilinear_downsample(const Image& image, std::size_t rows, std::size_t cols);

/// Mean SSIM over 7x7 valid windows (one whole-image window when either side
/// is below 7), k1 = 0.01, k2 = 0.03, data range 1, sample covariance.
/// Throws DimsMismatch.
double ssim(const Image& x, const Image& y);

/// 10 log10(MN / sum (x - y)^2); +infinity for identical images.
/// Throws DimsMismatch.
double psnr(const Image& x, const Image& y);

inline constexpr std::size_t kSsimWindow = 7;

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;           // sample standard deviation; 0 for one value
  std::size_t finite = 0;    // values that entered mean/sd
  std::size_t infinite = 0;  // excluded +infinity values
};

/// Mean and sd over the finite values.
MetricSummary summarize(const std::vector<double>& values);

struct LevelQuality {
  int level = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t bytes = 0;  // cumulative prefix bytes over all slices
  std::vector<double> ssim_values;
  std::vector<double> psnr_values;
  MetricSummary ssim() const { return summarize(ssim_values); }
  MetricSummary psnr() const { return summarize(psnr_values); }
};

struct QualityReport {
  std::string series_id;
  FormatKind format = FormatKind::Raster;
  std::uint64_t original_bytes = 0;
  std::uint64_t stored_bytes = 0;
  std::vector<LevelQuality> levels;  // index i holds level i+1
};

/// Per-level metrics of one plane's codestream against the plane itself.
std::vector<LevelQuality> evaluate_codestream(const PixelPlane& original,
                                              std::span<const std::uint8_t> codestream);

/// Evaluates every slice of a stored series at every level. Throws NotFound.
QualityReport evaluate_series(const Store& store, const std::string& series_id);

/// Pools slice values level by level; a shallower series contributes its top
/// level to deeper rows.
QualityReport merge_reports(const std::vector<QualityReport>& reports);

}  // namespace mist
