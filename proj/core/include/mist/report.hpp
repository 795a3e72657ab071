#pragma once

// Text and CSV rendering of efficiency and quality reports in the
// Format / Decomp. / Size / SSIM / PSNR table shape.

#include "mist/quality.hpp"
#include "mist/store.hpp"

#include <cstdint>
#include <string>

namespace mist {

/// Signed percentage with two decimals, e.g. "-57.50%" or "+3.00%".
std::string format_percent(double percent);

/// "MB" unless `largest` reaches 1e9 bytes, then "GB".
std::string size_unit(std::uint64_t largest);
std::string format_size(std::uint64_t bytes, const std::string& unit);

/// Per-series summary and totals; `per_level` adds the cumulative bytes per
/// decomposition level.
std::string render_efficiency(const EfficiencyReport& report, bool csv = false,
                              bool per_level = true);
std::string render_quality(const QualityReport& report, bool csv = false);

}  // namespace mist
