#include "mist/error.hpp"
#include "mist/quality.hpp"
#include "support/planes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace mist {
namespace {

Image constant(std::size_t rows, std::size_t cols, double v) {
  return {rows, cols, std::vector<double>(rows * cols, v)};
}

Image random_image(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img{rows, cols, std::vector<double>(rows * cols)};
  for (auto& v : img.values) v = u(rng);
  return img;
}

// SSIM of a single window evaluated term by term.
double direct_ssim(const Image& x, const Image& y) {
  const double n = static_cast<double>(x.values.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    mx += x.values[i];
    my += y.values[i];
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0, cov = 0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    vx += (x.values[i] - mx) * (x.values[i] - mx);
    vy += (y.values[i] - my) * (y.values[i] - my);
    cov += (x.values[i] - mx) * (y.values[i] - my);
  }
  vx /= n - 1;
  vy /= n - 1;
  cov /= n - 1;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

TEST(Psnr, ConstantDifferenceOracles) {
  EXPECT_NEAR(psnr(constant(8, 8, 0.0), constant(8, 8, 0.1)), 20.0, 1e-9);
  EXPECT_NEAR(psnr(constant(5, 3, 0.25), constant(5, 3, 0.75)), 20.0 * std::log10(2.0), 1e-9);
}

TEST(Psnr, IdenticalIsInfinite) {
  std::mt19937_64 rng(1);
  const Image x = random_image(rng, 9, 11);
  EXPECT_EQ(psnr(x, x), std::numeric_limits<double>::infinity());
}

TEST(Psnr, DimsMismatchThrows) {
  EXPECT_THROW(psnr(constant(2, 2, 0), constant(2, 3, 0)), Error);
}

TEST(Ssim, SingleWindowMatchesDirectEvaluation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Image x = random_image(rng, 7, 7), y = random_image(rng, 7, 7);
    EXPECT_NEAR(ssim(x, y), direct_ssim(x, y), 1e-12);
  }
  const Image x = random_image(rng, 5, 9), y = random_image(rng, 5, 9);
  EXPECT_NEAR(ssim(x, y), direct_ssim(x, y), 1e-12);
}

TEST(Ssim, IdenticalIsExactlyOne) {
  std::mt19937_64 rng(3);
  const Image x = random_image(rng, 40, 33);
  EXPECT_EQ(ssim(x, x), 1.0);
  EXPECT_EQ(ssim(constant(10, 10, 0.0), constant(10, 10, 0.0)), 1.0);
}

TEST(Ssim, InvertedImageIsNegative) {
  std::mt19937_64 rng(4);
  const Image x = random_image(rng, 32, 32);
  Image y = x;
  for (auto& v : y.values) v = 1.0 - v;
  EXPECT_LT(ssim(x, y), 0.0);
}

TEST(Ssim, MeanOverValidWindows) {
  std::mt19937_64 rng(5);
  const Image x = random_image(rng, 9, 8), y = random_image(rng, 9, 8);
  double total = 0;
  for (std::size_t r = 0; r + 7 <= 9; ++r) {
    for (std::size_t c = 0; c + 7 <= 8; ++c) {
      Image wx{7, 7, {}}, wy{7, 7, {}};
      for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
          wx.values.push_back(x.at(r + i, c + j));
          wy.values.push_back(y.at(r + i, c + j));
        }
      }
      total += direct_ssim(wx, wy);
    }
  }
  EXPECT_NEAR(ssim(x, y), total / 6.0, 1e-12);
}

TEST(Ssim, DimsMismatchThrows) {
  EXPECT_THROW(ssim(constant(8, 8, 0), constant(8, 9, 0)), Error);
}

TEST(Bilinear, RampHandOracle) {
  Image ramp{4, 4, {}};
  for (int i = 0; i < 16; ++i) ramp.values.push_back(i);
  const Image out = bilinear_downsample(ramp, 2, 2);
  EXPECT_EQ(out.values, (std::vector<double>{2.5, 4.5, 10.5, 12.5}));
}

TEST(Bilinear, IdentityAndBounds) {
  std::mt19937_64 rng(6);
  const Image x = random_image(rng, 5, 6);
  EXPECT_EQ(bilinear_downsample(x, 5, 6).values, x.values);
  EXPECT_THROW(bilinear_downsample(x, 6, 6), Error);
  EXPECT_THROW(bilinear_downsample(x, 0, 3), Error);
  const Image one = bilinear_downsample(x, 1, 1);
  EXPECT_EQ(one.values.size(), 1u);
}

TEST(Rescale, MinMaxAndConstant) {
  const Image r = rescale01({1, 3, {2, 4, 6}});
  EXPECT_EQ(r.values, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(rescale01(constant(2, 2, 7)).values, std::vector<double>(4, 0.0));
}

TEST(Summary, FiniteOnlyMeanAndSampleSd) {
  const double inf = std::numeric_limits<double>::infinity();
  const MetricSummary s = summarize({1.0, 3.0, inf, inf});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(2.0));
  EXPECT_EQ(s.finite, 2u);
  EXPECT_EQ(s.infinite, 2u);
  const MetricSummary one = summarize({0.5});
  EXPECT_EQ(one.sd, 0.0);
  const MetricSummary none = summarize({inf});
  EXPECT_EQ(none.finite, 0u);
  EXPECT_EQ(none.infinite, 1u);
}

TEST(Evaluate, TopLevelIsLossless) {
  std::mt19937_64 rng(7);
  const PixelPlane plane = testing::smooth_plane(rng, 300, 260, 12);
  const auto levels = evaluate_codestream(plane, encode(plane).bytes);
  ASSERT_EQ(levels.size(), 3u);
  EXPECT_EQ(levels.back().ssim_values.front(), 1.0);
  EXPECT_TRUE(std::isinf(levels.back().psnr_values.front()));
  EXPECT_EQ(levels.front().rows, 75u);
  EXPECT_EQ(levels.front().cols, 65u);
  EXPECT_LT(levels[0].ssim_values.front(), levels[1].ssim_values.front());
  EXPECT_LT(levels[0].bytes, levels[1].bytes);
}

TEST(Evaluate, MergePoolsByLevel) {
  QualityReport a, b;
  a.levels = {{1, 2, 2, 10, {0.5}, {10}}, {2, 4, 4, 30, {1.0}, {std::numeric_limits<double>::infinity()}}};
  b.levels = {{1, 4, 4, 20, {1.0}, {std::numeric_limits<double>::infinity()}}};
  const QualityReport m = merge_reports({a, b});
  ASSERT_EQ(m.levels.size(), 2u);
  EXPECT_EQ(m.levels[0].bytes, 30u);
  EXPECT_EQ(m.levels[1].bytes, 50u);
  EXPECT_EQ(m.levels[1].ssim_values.size(), 2u);
}

}  // namespace
}  // namespace mist
