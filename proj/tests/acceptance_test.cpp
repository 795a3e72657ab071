// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "mist/codec.hpp"
#include "mist/codestream_index.hpp"
#include "mist/error.hpp"
#include "mist/formats.hpp"
#include "mist/hierarchy.hpp"
#include "mist/quality.hpp"
#include "mist/report.hpp"
#include "mist/service.hpp"
#include "mist/store.hpp"
#include "support/corpus.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mist;
namespace fs = std::filesystem;

const fs::path kData = MIST_TEST_DATA_DIR;

struct Outcome {
  bool passed = false;
  std::string detail;
};

// Collects the first few failure descriptions of a criterion.
class Findings {
 public:
  void fail(const std::string& what) {
    ++count_;
    if (count_ <= 3) text_ += (text_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return count_ == 0; }
  Outcome outcome(const std::string& summary) const {
    if (ok()) return {true, summary};
    return {false, std::to_string(count_) + " failure(s): " + text_};
  }

 private:
  std::size_t count_ = 0;
  std::string text_;
};

std::string dims(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

// ---------------------------------------------------------------------------
// Corpora

struct Sample {
  std::string label;
  PixelPlane plane;
};

std::vector<Sample> desk_corpus() {
  std::mt19937_64 rng(20240611);
  std::vector<std::pair<std::size_t, std::size_t>> sizes = {
      {1, 1},     {1, 2},     {2, 1},     {3, 5},      {7, 7},     {63, 65},   {64, 64},
      {65, 63},   {127, 129}, {128, 128}, {255, 257},  {256, 255}, {511, 513}, {512, 512},
      {1, 1024},  {1024, 1},  {17, 900},  {1023, 1001}, {1024, 1024}};
  std::uniform_real_distribution<double> log_side(0.0, std::log2(1024.0));
  while (sizes.size() < 204) {
    const auto r = static_cast<std::size_t>(std::lround(std::exp2(log_side(rng))));
    const auto c = static_cast<std::size_t>(std::lround(std::exp2(log_side(rng))));
    sizes.emplace_back(std::max<std::size_t>(r, 1), std::max<std::size_t>(c, 1));
  }
  const int depths[] = {8, 12, 16};
  std::vector<Sample> out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto [rows, cols] = sizes[i];
    const int depth = depths[i % 3];
    PixelPlane p;
    std::string kind;
    switch (i % 4) {
      case 0: {
        std::uniform_int_distribution<std::uint32_t> v(0, (1u << depth) - 1);
        p = testing::constant_plane(rows, cols, static_cast<std::uint16_t>(v(rng)), depth);
        kind = "constant";
        break;
      }
      case 1: p = testing::ramp_plane(rows, cols, depth); kind = "ramp"; break;
      case 2: p = testing::gaussian_blob_plane(rng, rows, cols, depth); kind = "gaussian"; break;
      default: p = testing::speckle_plane(rng, rows, cols, depth); kind = "speckle"; break;
    }
    if (i % 5 == 0) p.rescale_intercept = -1024;
    out.push_back({kind + " " + dims(rows, cols) + " " + std::to_string(depth) + "-bit", std::move(p)});
  }
  return out;
}

std::vector<Sample> real_slices() {
  std::vector<Sample> out;
  for (const char* name : {"camera.png", "microaneurysms.png", "cell.png"}) {
    DecodedSeries s = read_raster(kData / name);
    out.push_back({name, std::move(s.slices.front())});
  }
  return out;
}

std::vector<Sample> prefix_corpus() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> side(1, 700);
  std::vector<Sample> out;
  for (int i = 0; i < 100; ++i) {
    const std::size_t rows = side(rng), cols = side(rng);
    const int depth = 8 + (i % 9);
    PixelPlane p = (i % 2) ? testing::random_plane(rng, rows, cols, depth)
                           : testing::speckle_plane(rng, rows, cols, depth);
    out.push_back({"plane " + std::to_string(i) + " " + dims(rows, cols), std::move(p)});
  }
  return out;
}

// Band-limited planes with at least three decompositions.
std::vector<PixelPlane> smooth_corpus() {
  std::mt19937_64 rng(314);
  std::uniform_int_distribution<std::size_t> side(512, 640);
  std::vector<PixelPlane> out;
  for (int i = 0; i < 50; ++i) out.push_back(testing::smooth_plane(rng, side(rng), side(rng), 12));
  return out;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome losslessness() {
  auto corpus = desk_corpus();
  const std::size_t synthetic = corpus.size();
  for (auto& s : real_slices()) corpus.push_back(std::move(s));
  Findings f;
  std::size_t lossless_quality = 0;
  for (const auto& [label, plane] : corpus) {
    const Codestream cs = encode(plane);
    const PixelPlane back = decode(cs.bytes);
    if (back.rows != plane.rows || back.cols != plane.cols || back.samples != plane.samples ||
        back.rescale_intercept != plane.rescale_intercept) {
      f.fail(label + " not reconstructed exactly");
      continue;
    }
    const auto levels = evaluate_codestream(plane, cs.bytes);
    const double s = levels.back().ssim_values.front(), p = levels.back().psnr_values.front();
    if (s == 1.0 && std::isinf(p) && p > 0) {
      ++lossless_quality;
    } else {
      f.fail(label + " top level SSIM " + std::to_string(s) + " PSNR " + std::to_string(p));
    }
  }
  return f.outcome(std::to_string(synthetic) + " synthetic + " + std::to_string(corpus.size() - synthetic) +
                   " real planes bit-exact; SSIM 1.0 and PSNR inf at full level for " +
                   std::to_string(lossless_quality) + "/" + std::to_string(corpus.size()));
}

int oracle_levels(std::size_t rows, std::size_t cols, std::size_t alpha = 64) {
  const std::size_t m = std::min(rows, cols);
  int n = 0;
  // Largest n with m / 2^n >= alpha, over the reals.
  while (n < 62 && static_cast<double>(m) / std::exp2(n + 1) >= static_cast<double>(alpha)) ++n;
  return n;
}

Outcome level_count() {
  Findings f;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> side(1, 4096);
  for (int i = 0; i < 500; ++i) {
    const std::size_t r = side(rng), c = side(rng);
    if (decomposition_levels(r, c) != oracle_levels(r, c)) {
      f.fail(dims(r, c) + " gives " + std::to_string(decomposition_levels(r, c)) + ", oracle " +
             std::to_string(oracle_levels(r, c)));
    }
  }
  const std::tuple<std::size_t, std::size_t, int> anchors[] = {{512, 512, 3}, {64, 64, 0}, {2500, 3056, 5}};
  for (const auto& [r, c, n] : anchors) {
    if (decomposition_levels(r, c) != n || oracle_levels(r, c) != n) f.fail("anchor " + dims(r, c));
  }
  return f.outcome("500 random pairs and anchors 512->3, 64->0, 2500x3056->5 match the oracle");
}

Outcome prefix_equivalence() {
  Findings f;
  std::size_t checks = 0;
  for (const auto& [label, plane] : prefix_corpus()) {
    const Codestream cs = encode(plane);
    const OffsetTable table = build_offset_table(cs);
    const std::span<const std::uint8_t> all(cs.bytes);
    for (int level = 1; level <= table.max_level(); ++level) {
      const std::size_t len = prefix_length(table, level);
      const PixelPlane from_prefix = decode(all.first(len), DecodeLevel::at(level));
      const PixelPlane from_full = decode(all, DecodeLevel::at(level));
      if (from_prefix.samples != from_full.samples || from_prefix.rows != from_full.rows ||
          from_prefix.cols != from_full.cols) {
        f.fail(label + " level " + std::to_string(level) + " differs");
      }
      try {
        decode(all.first(len - 1), DecodeLevel::at(level));
        f.fail(label + " level " + std::to_string(level) + " decoded one byte short");
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TruncatedStream) f.fail(label + " short prefix raised " + e.what());
      }
      ++checks;
    }
  }
  return f.outcome("100 planes, " + std::to_string(checks) +
                   " (plane, level) prefixes bit-exact; one byte less raises TruncatedStream");
}

Outcome resolution_law() {
  auto corpus = desk_corpus();
  for (auto& s : prefix_corpus()) corpus.push_back(std::move(s));
  for (auto& s : real_slices()) corpus.push_back(std::move(s));
  Findings f;
  std::size_t checks = 0;
  for (const auto& [label, plane] : corpus) {
    const Codestream cs = encode(plane);
    const int n = cs.header.n_levels;
    for (int level = 1; level <= n + 1; ++level) {
      const PixelPlane p = decode(cs.bytes, DecodeLevel::at(level));
      const std::size_t s = std::size_t{1} << (n + 1 - level);
      if (p.rows != ceil_div(plane.rows, s) || p.cols != ceil_div(plane.cols, s)) {
        f.fail(label + " level " + std::to_string(level) + " is " + dims(p.rows, p.cols));
      }
      ++checks;
    }
  }
  return f.outcome(std::to_string(corpus.size()) + " planes, " + std::to_string(checks) +
                   " levels decode to ceil(dim / 2^(n+1-i))");
}

Outcome quality_monotonicity() {
  const auto corpus = smooth_corpus();
  Findings f;
  std::vector<LevelQuality> pooled;
  int min_levels = 99;
  for (const auto& plane : corpus) {
    const auto levels = evaluate_codestream(plane, encode(plane).bytes);
    min_levels = std::min(min_levels, static_cast<int>(levels.size()) - 1);
    if (pooled.size() < levels.size()) pooled.resize(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
      pooled[i].ssim_values.push_back(levels[i].ssim_values.front());
      pooled[i].psnr_values.push_back(levels[i].psnr_values.front());
    }
  }
  if (min_levels < 3) f.fail("a plane has only " + std::to_string(min_levels) + " decompositions");
  std::string curve;
  double prev_ssim = -2, prev_psnr = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const MetricSummary s = pooled[i].ssim(), p = pooled[i].psnr();
    const double psnr_mean = p.finite ? p.mean : std::numeric_limits<double>::infinity();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sL%zu %.4f/%.2f", i ? ", " : "", i + 1, s.mean, psnr_mean);
    curve += buf;
    if (!(s.mean > prev_ssim)) f.fail("SSIM not increasing at level " + std::to_string(i + 1));
    if (!(psnr_mean >= prev_psnr)) f.fail("PSNR decreases at level " + std::to_string(i + 1));
    prev_ssim = s.mean;
    prev_psnr = psnr_mean;
  }
  return f.outcome(std::to_string(corpus.size()) + " smooth planes (n >= " + std::to_string(min_levels) +
                   "), mean SSIM/PSNR " + curve);
}

Outcome bandwidth_shape() {
  testing::TempDir dir;
  const auto corpus = smooth_corpus();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    testing::write_png(dir / "in" / ("smooth_" + std::to_string(i) + ".png"), corpus[i]);
  }
  Store store = Store::init(dir / "store");
  store.ingest(dir / "in");
  const EfficiencyReport r = store.stats();
  Findings f;
  if (r.series.size() != corpus.size()) f.fail("ingested " + std::to_string(r.series.size()) + " series");
  const double ratio = static_cast<double>(r.level_bytes.front()) / static_cast<double>(r.stored_bytes);
  if (ratio > 0.25) f.fail("level 1 is " + std::to_string(100 * ratio) + "% of stored bytes");
  for (std::size_t i = 1; i < r.level_bytes.size(); ++i) {
    if (r.level_bytes[i] <= r.level_bytes[i - 1]) f.fail("bytes not increasing at level " + std::to_string(i + 1));
  }
  const std::string table = render_efficiency(r);
  const std::regex signed_percent(R"([+-]\d+\.\d\d%)");
  const auto hits = std::distance(std::sregex_iterator(table.begin(), table.end(), signed_percent),
                                  std::sregex_iterator());
  if (table.find("Format") == std::string::npos || table.find("Decomp.") == std::string::npos ||
      table.find("MIST") == std::string::npos || hits < static_cast<long>(r.level_bytes.size())) {
    f.fail("rendered table lacks the Format/Decomp./Size/SSIM/PSNR shape with signed percentages");
  }
  std::string curve;
  for (std::size_t i = 0; i < r.level_bytes.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%.1f%%", i ? " < " : "",
                  100.0 * static_cast<double>(r.level_bytes[i]) / static_cast<double>(r.stored_bytes));
    curve += buf;
  }
  return f.outcome("cumulative bytes by level as share of stored: " + curve);
}

struct ThreeSeries {
  testing::TempDir dir;
  Store store = Store::init(dir / "store");
  std::map<FormatKind, std::string> ids;

  ThreeSeries() {
    testing::write_ct_series(dir / "ct", "1.2.826.0.1.3680043.2", 128, 128, 2);
    testing::write_nifti_volume(dir / "nii" / "vol.nii", 128, 128, 2);
    std::mt19937_64 rng(5);
    testing::write_png(dir / "png" / "slice.png", testing::smooth_plane(rng, 128, 128, 8));
    ids[FormatKind::Dicom] = store.ingest(dir / "ct").series.front().series_id;
    ids[FormatKind::Nifti] = store.ingest(dir / "nii").series.front().series_id;
    ids[FormatKind::Raster] = store.ingest(dir / "png").series.front().series_id;
  }
};

Outcome hierarchy_table() {
  ThreeSeries s;
  Server server(Store::open(s.store.root()));
  const int port = server.start({"127.0.0.1", 0});
  httplib::Client client("127.0.0.1", port);
  Findings f;
  int allowed = 0, rejected = 0;
  const FormatKind kinds[] = {FormatKind::Dicom, FormatKind::Nifti, FormatKind::Raster};
  for (FormatKind src : kinds) {
    for (FormatKind dst : kinds) {
      const bool expect = rank(dst) <= rank(src);
      const std::string pair = std::string(to_string(src)) + "->" + std::string(to_string(dst));
      expect ? ++allowed : ++rejected;
      if (can_convert(src, dst) != expect) f.fail(pair + " can_convert");
      bool library_ok = true;
      try {
        render_payload(s.store, s.ids[src], dst);
      } catch (const Error& e) {
        library_ok = false;
        if (expect || e.code() != ErrorCode::HierarchyViolation) f.fail(pair + " library raised " + e.what());
      }
      if (library_ok != expect) f.fail(pair + " library accepted");
      const auto r = client.Get("/v1/series/" + s.ids[src] + "/image?format=" + std::string(to_string(dst)));
      const int want = expect ? 200 : 409;
      if (!r || r->status != want) f.fail(pair + " HTTP " + (r ? std::to_string(r->status) : "no response"));
    }
  }
  return f.outcome(std::to_string(allowed) + " allowed, " + std::to_string(rejected) +
                   " rejected (nifti->dicom, raster->dicom, raster->nifti) at library and HTTP (409)");
}

Vec3 dicom_world(const testing::CtGeometry& g, double c, double r, std::size_t k) {
  const Vec3 n = cross(g.row_dir, g.col_dir);
  const double z = static_cast<double>(k) * g.slice_gap;
  Vec3 w;
  for (std::size_t i = 0; i < 3; ++i) {
    w[i] = g.origin[i] + z * n[i] + c * g.spacing_col * g.row_dir[i] + r * g.spacing_row * g.col_dir[i];
  }
  return w;
}

Vec3 image_centre(const MetadataDocument& m) {
  return voxel_to_world(*m.affine, (static_cast<double>(m.cols) - 1) / 2,
                        (static_cast<double>(m.rows) - 1) / 2, 0);
}

Outcome geometry_fidelity() {
  Findings f;
  testing::TempDir dir;
  Store store = Store::init(dir / "store");
  std::mt19937_64 rng(99);
  double worst_voxel = 0;
  const std::size_t rows = 12, cols = 9, slices = 3;
  for (int trial = 0; trial < 20; ++trial) {
    const testing::CtGeometry g = testing::random_geometry(rng);
    const fs::path in = dir / ("series" + std::to_string(trial));
    testing::write_ct_series(in, "1.2.826.0.1.3680043.9." + std::to_string(trial), rows, cols, slices, g,
                             static_cast<std::uint64_t>(trial));
    const std::string id = store.ingest(in).series.front().series_id;
    const Payload p = render_payload(store, id, FormatKind::Nifti);
    const DecodedSeries nii = parse_nifti(p.body);
    const Affine& a = *nii.metadata.affine;
    for (std::size_t k = 0; k < slices; ++k) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const Vec3 want = dicom_world(g, double(c), double(r), k);
          const Vec3 got = voxel_to_world(a, double(c), double(r), double(k));
          for (std::size_t i = 0; i < 3; ++i) worst_voxel = std::max(worst_voxel, std::abs(want[i] - got[i]));
        }
      }
    }
  }
  if (worst_voxel >= 1e-3) f.fail("voxel centre error " + std::to_string(worst_voxel) + " mm");

  double worst_centre = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const testing::CtGeometry g = testing::random_geometry(rng);
    MetadataDocument m;
    m.format = FormatKind::Dicom;
    m.rows = 512;
    m.cols = 512;
    m.pixel_spacing_row = g.spacing_row;
    m.pixel_spacing_col = g.spacing_col;
    m.affine = assemble_affine({g.row_dir[0], g.row_dir[1], g.row_dir[2], g.col_dir[0], g.col_dir[1], g.col_dir[2]},
                               g.origin, g.spacing_row, g.spacing_col,
                               scaled(cross(g.row_dir, g.col_dir), g.slice_gap));
    const MetadataDocument half = rescale_geometry(m, 3, 3);
    if (half.pixel_spacing_row != 2 * m.pixel_spacing_row || half.pixel_spacing_col != 2 * m.pixel_spacing_col) {
      f.fail("spacing not doubled exactly");
    }
    for (int axis = 0; axis < 2; ++axis) {
      const Vec3 before = affine_column(*m.affine, axis), after = affine_column(*half.affine, axis);
      for (int i = 0; i < 3; ++i) {
        if (after[static_cast<std::size_t>(i)] != 2 * before[static_cast<std::size_t>(i)]) f.fail("affine column not doubled");
      }
    }
    const Vec3 a = image_centre(m), b = image_centre(half);
    for (std::size_t i = 0; i < 3; ++i) worst_centre = std::max(worst_centre, std::abs(a[i] - b[i]));
  }
  if (worst_centre >= 1e-6) f.fail("image centre moved " + std::to_string(worst_centre) + " mm");

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "20 random DICOM series -> NIfTI: max voxel-centre error %.2e mm; s=2 doubles spacing, "
                "max centre shift %.2e mm",
                worst_voxel, worst_centre);
  return f.outcome(buf);
}

double direct_window_ssim(const Image& x, const Image& y) {
  const double n = static_cast<double>(x.values.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    mx += x.values[i] / n;
    my += y.values[i] / n;
  }
  double vx = 0, vy = 0, cov = 0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    vx += (x.values[i] - mx) * (x.values[i] - mx) / (n - 1);
    vy += (y.values[i] - my) * (y.values[i] - my) / (n - 1);
    cov += (x.values[i] - mx) * (y.values[i] - my) / (n - 1);
  }
  const double c1 = 1e-4, c2 = 9e-4;
  return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

Outcome metric_oracles() {
  Findings f;
  const Image zeros{16, 16, std::vector<double>(256, 0.0)};
  const Image tenth{16, 16, std::vector<double>(256, 0.1)};
  const Image quarter{16, 16, std::vector<double>(256, 0.25)};
  const Image three_quarters{16, 16, std::vector<double>(256, 0.75)};
  const double p1 = psnr(zeros, tenth), p2 = psnr(quarter, three_quarters);
  if (std::abs(p1 - 20.0) > 1e-9) f.fail("psnr(0.1) = " + std::to_string(p1));
  if (std::abs(p2 - 20.0 * std::log10(2.0)) > 1e-9) f.fail("psnr(0.5) = " + std::to_string(p2));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Image x{7, 7, {}}, y{7, 7, {}};
    for (int i = 0; i < 49; ++i) {
      x.values.push_back(u(rng));
      y.values.push_back(trial % 2 ? u(rng) : x.values.back() * 0.8 + 0.1 * u(rng));
    }
    worst = std::max(worst, std::abs(ssim(x, y) - direct_window_ssim(x, y)));
  }
  if (worst > 1e-12) f.fail("single-window SSIM off by " + std::to_string(worst));

  Image ramp{4, 4, {}};
  for (int i = 0; i < 16; ++i) ramp.values.push_back(i);
  const Image half = bilinear_downsample(ramp, 2, 2);
  if (half.values != std::vector<double>{2.5, 4.5, 10.5, 12.5}) f.fail("bilinear 4x4 ramp mismatch");

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "PSNR 20.0 and 20log10(2) dB; single-window SSIM max error %.1e; 4x4 ramp -> {2.5, 4.5, 10.5, 12.5}",
                worst);
  return f.outcome(buf);
}

Outcome exclusion_protocol() {
  testing::TempDir dir;
  const auto fx = testing::write_exclusion_fixtures(dir / "in");
  testing::write_ct_series(dir / "in" / "good", "1.2.826.0.1.3680043.5", 64, 64, 2);
  Store store = Store::init(dir / "store");
  const IngestResult r = store.ingest(dir / "in");
  Findings f;
  const std::map<std::string, ExclusionReason> want = {
      {fx.no_pixels.string(), ExclusionReason::NoPixelData},
      {fx.float_pixels.string(), ExclusionReason::UnsupportedType},
      {fx.wide_range.string(), ExclusionReason::UnsupportedDepth}};
  std::map<std::string, ExclusionReason> got;
  for (const auto& e : r.report.files_excluded) got[e.path] = e.reason;
  for (const auto& [path, reason] : want) {
    const auto it = got.find(path);
    if (it == got.end()) {
      f.fail(fs::path(path).filename().string() + " not excluded");
    } else if (it->second != reason) {
      f.fail(fs::path(path).filename().string() + " excluded as " + std::string(to_string(it->second)));
    }
  }
  if (got.size() != 3) f.fail(std::to_string(got.size()) + " exclusions recorded");
  if (r.series.size() != 1 || r.series.front().num_slices != 2) f.fail("remaining series not ingested");

  const EfficiencyReport stats = store.stats();
  if (stats.files_seen != 5 || stats.files_excluded != 3) {
    f.fail("report counts " + std::to_string(stats.files_seen) + " seen / " +
           std::to_string(stats.files_excluded) + " excluded");
  }
  if (render_efficiency(stats).find("Files: 5 seen, 3 excluded") == std::string::npos) {
    f.fail("rendered report lacks exclusion counts");
  }

  testing::TempDir only_bad;
  testing::write_exclusion_fixtures(only_bad / "in");
  Store empty = Store::init(only_bad / "store");
  try {
    empty.ingest(only_bad / "in");
    f.fail("all-excluded input did not raise NothingIngestable");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NothingIngestable) f.fail(std::string("all-excluded input raised ") + e.what());
  }
  return f.outcome("no pixel data -> NoPixelData, float -> UnsupportedType, >16-bit -> UnsupportedDepth; "
                   "report: 5 seen, 3 excluded");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"losslessness", losslessness},
      {"level-count-oracle", level_count},
      {"prefix-decode-equivalence", prefix_equivalence},
      {"resolution-law", resolution_law},
      {"quality-monotonicity", quality_monotonicity},
      {"bandwidth-reduction-shape", bandwidth_shape},
      {"hierarchy-truth-table", hierarchy_table},
      {"geometry-fidelity", geometry_fidelity},
      {"metric-oracles", metric_oracles},
      {"exclusion-protocol", exclusion_protocol},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-26s %s (%.1fs)\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += o.passed ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
