#include "mist/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace mist {
namespace {

std::string printf_string(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string exact(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return printf_string("%.17g", v);
}

std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

// Left-aligned columns separated by two spaces.
std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], display_width(row[i]));
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(width[i] - display_width(row[i]) + 2, ' ');
    }
    out << line << "\n";
  }
  return out.str();
}

std::string join_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ",";
    line += cells[i];
  }
  return line + "\n";
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string mean_sd(const MetricSummary& s, const char* fmt) {
  return printf_string(fmt, s.mean) + " ± " + printf_string(fmt, s.sd);
}

std::string psnr_cell(const MetricSummary& s) {
  if (s.finite == 0) return s.infinite ? "inf" : "-";
  std::string cell = mean_sd(s, "%.2f");
  if (s.infinite) cell += " (" + std::to_string(s.infinite) + " inf)";
  return cell;
}

std::string sized(std::uint64_t bytes, std::uint64_t reference, const std::string& unit) {
  return format_size(bytes, unit) + " (" +
         format_percent(percent_change(static_cast<double>(bytes), static_cast<double>(reference))) +
         ")";
}

}  // namespace

std::string format_percent(double percent) {
  if (std::abs(percent) < 0.005) percent = 0.0;
  return printf_string(percent < 0 ? "%.2f%%" : "+%.2f%%", percent);
}

std::string size_unit(std::uint64_t largest) { return largest >= 1'000'000'000ull ? "GB" : "MB"; }

std::string format_size(std::uint64_t bytes, const std::string& unit) {
  const double scale = unit == "GB" ? 1e9 : 1e6;
  return printf_string("%.2f", static_cast<double>(bytes) / scale);
}

std::string render_efficiency(const EfficiencyReport& report, bool csv, bool per_level) {
  std::ostringstream out;
  if (csv) {
    out << join_csv({"scope", "format", "decomp", "bytes", "change_percent"});
    auto row = [&](const std::string& scope, const std::string& format, const std::string& decomp,
                   std::uint64_t bytes, std::uint64_t reference) {
      out << join_csv({scope, format, decomp, std::to_string(bytes),
                       decomp == "original"
                           ? std::string("0")
                           : exact(percent_change(double(bytes), double(reference)))});
    };
    for (const auto& s : report.series) {
      const std::string f(to_string(s.format));
      row(s.series_id, f, "original", s.original_bytes, s.original_bytes);
      row(s.series_id, "mist", "stored", s.stored_bytes, s.original_bytes);
      if (!per_level) continue;
      for (std::size_t i = 0; i < s.level_bytes.size(); ++i) {
        row(s.series_id, "mist", std::to_string(i + 1), s.level_bytes[i], s.original_bytes);
      }
    }
    row("all", "all", "original", report.original_bytes, report.original_bytes);
    row("all", "mist", "stored", report.stored_bytes, report.original_bytes);
    for (std::size_t i = 0; per_level && i < report.level_bytes.size(); ++i) {
      row("all", "mist", std::to_string(i + 1), report.level_bytes[i], report.original_bytes);
    }
    return out.str();
  }

  const std::string unit =
      size_unit(std::max(report.original_bytes, report.stored_bytes));
  std::vector<std::vector<std::string>> summary = {
      {"Series", "Format", "Max Decomps.", "Slices", "Original (" + unit + ")", "MIST (" + unit + ")"}};
  std::set<std::string> formats;
  for (const auto& s : report.series) {
    formats.insert(upper(to_string(s.format)));
    summary.push_back({s.series_id.substr(0, 12), upper(to_string(s.format)),
                       std::to_string(s.max_level), std::to_string(s.num_slices),
                       format_size(s.original_bytes, unit), sized(s.stored_bytes, s.original_bytes, unit)});
  }
  std::size_t slices = 0;
  for (const auto& s : report.series) slices += s.num_slices;
  summary.push_back({"All", "", "", std::to_string(slices), format_size(report.original_bytes, unit),
                     sized(report.stored_bytes, report.original_bytes, unit)});
  out << align(summary);
  out << "\nSeries: " << report.series.size() << " encoded. Files: " << report.files_seen
      << " seen, " << report.files_excluded << " excluded";
  if (report.files_seen) {
    out << " (" << printf_string("%.2f", 100.0 * double(report.files_excluded) / double(report.files_seen))
        << "%)";
  }
  out << "\n";
  if (!per_level) return out.str();
  out << "\n";

  std::string source = formats.size() == 1 ? *formats.begin() : "Original";
  if (formats.empty()) source = "Original";
  std::vector<std::vector<std::string>> levels = {
      {"Format", "Decomp.", "Size (" + unit + ")", "SSIM", "PSNR"},
      {source, "-", format_size(report.original_bytes, unit), "-", "-"}};
  for (std::size_t i = 0; i < report.level_bytes.size(); ++i) {
    levels.push_back({i == 0 ? "MIST" : "", std::to_string(i + 1),
                      sized(report.level_bytes[i], report.original_bytes, unit), "-", "-"});
  }
  out << align(levels);
  return out.str();
}

std::string render_quality(const QualityReport& report, bool csv) {
  std::ostringstream out;
  if (csv) {
    out << join_csv({"series", "format", "decomp", "rows", "cols", "bytes", "change_percent",
                     "ssim_mean", "ssim_sd", "psnr_mean", "psnr_sd", "psnr_finite", "psnr_infinite"});
    for (const auto& l : report.levels) {
      const MetricSummary s = l.ssim(), p = l.psnr();
      out << join_csv({report.series_id, std::string(to_string(report.format)), std::to_string(l.level),
                       std::to_string(l.rows), std::to_string(l.cols), std::to_string(l.bytes),
                       exact(percent_change(double(l.bytes), double(report.original_bytes))),
                       exact(s.mean), exact(s.sd), exact(p.mean), exact(p.sd),
                       std::to_string(p.finite), std::to_string(p.infinite)});
    }
    return out.str();
  }
  std::uint64_t largest = report.original_bytes;
  for (const auto& l : report.levels) largest = std::max(largest, l.bytes);
  const std::string unit = size_unit(largest);
  std::vector<std::vector<std::string>> rows = {
      {"Format", "Decomp.", "Size (" + unit + ")", "SSIM", "PSNR"},
      {upper(to_string(report.format)), "-", format_size(report.original_bytes, unit), "-", "-"}};
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const LevelQuality& l = report.levels[i];
    rows.push_back({i == 0 ? "MIST" : "", std::to_string(l.level),
                    sized(l.bytes, report.original_bytes, unit), mean_sd(l.ssim(), "%.2f"),
                    psnr_cell(l.psnr())});
  }
  out << align(rows);
  return out.str();
}

}  // namespace mist
