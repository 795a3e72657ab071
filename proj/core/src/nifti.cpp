#include "bytes.hpp"
#include "mist/error.hpp"
#include "mist/formats.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace mist {
namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

enum Datatype : int {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUint16 = 512,
  kUint32 = 768,
  kInt64 = 1024,
  kUint64 = 1280,
};

bool is_gzip(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  // 16 + MAX_WBITS selects gzip framing.
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw Error(ErrorCode::IoError, "cannot initialise zlib");
  }
  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 16];
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof chunk;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::CorruptData, "gzip stream is corrupt or truncated");
    }
    out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::CorruptData, "gzip stream is truncated");
    }
  }
  inflateEnd(&zs);
  return out;
}

class HeaderView {
 public:
  HeaderView(std::span<const std::uint8_t> bytes, bool big_endian)
      : bytes_(bytes), big_(big_endian) {}

  std::uint64_t raw(std::size_t at, int width) const {
    return big_ ? detail::get_be(bytes_, at, width) : detail::get_le(bytes_, at, width);
  }
  std::int16_t i16(std::size_t at) const { return static_cast<std::int16_t>(raw(at, 2)); }
  std::int32_t i32(std::size_t at) const { return static_cast<std::int32_t>(raw(at, 4)); }
  float f32(std::size_t at) const {
    const auto bits = static_cast<std::uint32_t>(raw(at, 4));
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  std::string text(std::size_t at, std::size_t n) const {
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(at),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(at + n));
    s.resize(std::strlen(s.c_str()));
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  bool big_;
};

int bytes_per_voxel(int datatype) {
  switch (datatype) {
    case kUint8:
    case kInt8:
      return 1;
    case kInt16:
    case kUint16:
      return 2;
    case kInt32:
    case kUint32:
      return 4;
    case kInt64:
    case kUint64:
      return 8;
    default:
      return 0;
  }
}

Affine quaternion_affine(const HeaderView& h) {
  const double b = h.f32(256), c = h.f32(260), d = h.f32(264);
  const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
  double qfac = h.f32(76);
  if (qfac == 0.0) qfac = 1.0;
  const double dx = h.f32(80), dy = h.f32(84), dz = h.f32(88) * (qfac < 0 ? -1.0 : 1.0);
  const double r[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b}};
  Affine m = identity_affine();
  for (int i = 0; i < 3; ++i) {
    m[i][0] = r[i][0] * dx;
    m[i][1] = r[i][1] * dy;
    m[i][2] = r[i][2] * dz;
  }
  m[0][3] = h.f32(268);
  m[1][3] = h.f32(272);
  m[2][3] = h.f32(276);
  return m;
}

// RAS (NIfTI) and LPS (DICOM, our canonical frame) differ by flipping x and y.
Affine flip_xy(Affine m) {
  for (int j = 0; j < 4; ++j) {
    m[0][j] = -m[0][j];
    m[1][j] = -m[1][j];
  }
  return m;
}

struct Quaternion {
  double b, c, d, qfac;
};

Quaternion quaternion_from(const Affine& m) {
  Vec3 cols[3];
  for (int j = 0; j < 3; ++j) {
    cols[j] = normalized(affine_column(m, j));
  }
  double r[3][3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r[i][j] = cols[j][static_cast<std::size_t>(i)];
  }
  const double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                     r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                     r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  double qfac = 1.0;
  if (det < 0) {
    qfac = -1.0;
    for (auto& row : r) row[2] = -row[2];
  }
  double a = r[0][0] + r[1][1] + r[2][2] + 1.0, b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r[2][1] - r[1][2]) / a;
    c = 0.25 * (r[0][2] - r[2][0]) / a;
    d = 0.25 * (r[1][0] - r[0][1]) / a;
  } else {
    const double xd = 1.0 + r[0][0] - (r[1][1] + r[2][2]);
    const double yd = 1.0 + r[1][1] - (r[0][0] + r[2][2]);
    const double zd = 1.0 + r[2][2] - (r[0][0] + r[1][1]);
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r[0][1] + r[1][0]) / b;
      d = 0.25 * (r[0][2] + r[2][0]) / b;
      a = 0.25 * (r[2][1] - r[1][2]) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r[0][1] + r[1][0]) / c;
      d = 0.25 * (r[1][2] + r[2][1]) / c;
      a = 0.25 * (r[0][2] - r[2][0]) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r[0][2] + r[2][0]) / d;
      c = 0.25 * (r[1][2] + r[2][1]) / d;
      a = 0.25 * (r[1][0] - r[0][1]) / d;
    }
    if (a < 0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  return {b, c, d, qfac};
}

}  // namespace

bool looks_like_nifti(std::span<const std::uint8_t> bytes) {
  if (is_gzip(bytes)) return true;
  if (bytes.size() < kHeaderSize) return false;
  const bool le = detail::get_le(bytes, 0, 4) == kHeaderSize;
  const bool be = detail::get_be(bytes, 0, 4) == kHeaderSize;
  return (le || be) && (std::memcmp(bytes.data() + 344, "n+1", 4) == 0 ||
                        std::memcmp(bytes.data() + 344, "ni1", 4) == 0);
}

DecodedSeries parse_nifti(std::span<const std::uint8_t> input, const std::string& name) {
  std::vector<std::uint8_t> inflated;
  std::span<const std::uint8_t> bytes = input;
  if (is_gzip(input)) {
    inflated = gunzip(input);
    bytes = inflated;
  }
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::CorruptData, "NIfTI header truncated");
  bool big_endian;
  if (detail::get_le(bytes, 0, 4) == kHeaderSize) {
    big_endian = false;
  } else if (detail::get_be(bytes, 0, 4) == kHeaderSize) {
    big_endian = true;
  } else {
    throw Error(ErrorCode::CorruptData, "sizeof_hdr is not 348");
  }
  const HeaderView h(bytes, big_endian);
  const std::string magic = h.text(344, 4);
  if (magic != "n+1") {
    throw ExcludedError(ExclusionReason::UnsupportedFormat,
                        magic == "ni1" ? "two-file NIfTI (.hdr/.img) is not supported"
                                       : "not a NIfTI-1 file");
  }

  const int ndim = h.i16(40);
  if (ndim < 2 || ndim > 7) throw Error(ErrorCode::CorruptData, "dim[0] out of range");
  std::size_t dims[3] = {1, 1, 1};
  for (int i = 1; i <= ndim; ++i) {
    const int d = h.i16(40 + 2 * static_cast<std::size_t>(i));
    if (d < 1) throw Error(ErrorCode::CorruptData, "non-positive dimension");
    if (i <= 3) {
      dims[i - 1] = static_cast<std::size_t>(d);
    } else if (d > 1) {
      throw ExcludedError(ExclusionReason::UnsupportedType, "volumes beyond three dimensions");
    }
  }
  const std::size_t cols = dims[0], rows = dims[1], slices = dims[2];

  const int datatype = h.i16(70);
  if (datatype == kFloat32 || datatype == kFloat64) {
    throw ExcludedError(ExclusionReason::UnsupportedType, "floating-point voxel data");
  }
  const int width = bytes_per_voxel(datatype);
  if (width == 0) {
    throw ExcludedError(ExclusionReason::UnsupportedType,
                        "NIfTI datatype " + std::to_string(datatype) + " not supported");
  }
  const float vox_offset = h.f32(108);
  if (!(vox_offset >= static_cast<float>(kHeaderSize))) {
    throw Error(ErrorCode::CorruptData, "vox_offset before end of header");
  }
  const auto offset = static_cast<std::size_t>(vox_offset);
  const std::size_t per_slice = rows * cols;
  const std::size_t count = per_slice * slices;
  if (bytes.size() < offset || (bytes.size() - offset) / static_cast<std::size_t>(width) < count) {
    throw ExcludedError(ExclusionReason::Unreadable, "voxel data shorter than header dimensions");
  }

  const bool is_signed = datatype == kInt8 || datatype == kInt16 || datatype == kInt32 ||
                         datatype == kInt64;
  std::vector<std::int64_t> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = offset + i * static_cast<std::size_t>(width);
    const std::uint64_t raw = h.raw(at, width);
    if (is_signed) {
      const int shift = 64 - 8 * width;
      values[i] = static_cast<std::int64_t>(raw << shift) >> shift;
    } else {
      if (raw > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw ExcludedError(ExclusionReason::UnsupportedDepth, "voxel values exceed 16 bits");
      }
      values[i] = static_cast<std::int64_t>(raw);
    }
  }

  PixelPlane stacked;
  try {
    stacked = compute_rescale(rows * slices, cols, values);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnsupportedDepth) {
      throw ExcludedError(ExclusionReason::UnsupportedDepth, e.what());
    }
    throw;
  }

  DecodedSeries series;
  for (std::size_t k = 0; k < slices; ++k) {
    PixelPlane p;
    p.rows = rows;
    p.cols = cols;
    p.bit_depth = stacked.bit_depth;
    p.rescale_intercept = stacked.rescale_intercept;
    p.samples.assign(stacked.samples.begin() + static_cast<std::ptrdiff_t>(k * per_slice),
                     stacked.samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * per_slice));
    series.slices.push_back(std::move(p));
  }

  Affine ras;
  const int sform = h.i16(254), qform = h.i16(252);
  if (sform > 0) {
    ras = identity_affine();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        ras[i][j] = h.f32(280 + 16 * static_cast<std::size_t>(i) + 4 * static_cast<std::size_t>(j));
      }
    }
  } else if (qform > 0) {
    ras = quaternion_affine(h);
  } else {
    ras = identity_affine();
    for (int i = 0; i < 3; ++i) {
      const double d = h.f32(80 + 4 * static_cast<std::size_t>(i));
      ras[i][i] = d > 0 ? d : 1.0;
    }
  }
  const Affine lps = flip_xy(ras);

  MetadataDocument& m = series.metadata;
  m.format = FormatKind::Nifti;
  m.series_id = name;
  m.rows = rows;
  m.cols = cols;
  m.num_slices = slices;
  m.pixel_spacing_col = norm(affine_column(lps, 0));
  m.pixel_spacing_row = norm(affine_column(lps, 1));
  m.slice_thickness = norm(affine_column(lps, 2));
  m.spacing_between_slices = m.slice_thickness;
  m.affine = lps;
  m.image_position = affine_column(lps, 3);
  const Vec3 rdir = normalized(affine_column(lps, 0)), cdir = normalized(affine_column(lps, 1));
  m.image_orientation = Orientation{rdir[0], rdir[1], rdir[2], cdir[0], cdir[1], cdir[2]};
  const double slope = h.f32(112);
  if (std::isfinite(slope) && slope != 0.0) {
    m.rescale_slope = slope;
    const double inter = h.f32(116);
    m.rescale_intercept = std::isfinite(inter) ? inter : 0.0;
  }
  m.photometric = "MONOCHROME2";
  m.bits_stored = stacked.bit_depth;
  if (const std::string descrip = h.text(148, 80); !descrip.empty()) {
    m.source_tags["descrip"] = descrip;
  }
  m.source_tags["xyzt_units"] = static_cast<int>(h.raw(123, 1));
  return series;
}

DecodedSeries read_nifti(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  for (const char* ext : {".nii.gz", ".nii"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0) {
      name.resize(name.size() - e.size());
      break;
    }
  }
  return parse_nifti(read_file_bytes(path), name);
}

std::vector<std::uint8_t> encode_nifti(const DecodedSeries& series) {
  check_series(series);
  const MetadataDocument& m = series.metadata;
  if (!m.affine) {
    throw Error(ErrorCode::MissingGeometry, "NIfTI output needs an affine the series lacks");
  }
  const PixelPlane& first = series.slices.front();
  if (first.rows > 32767 || first.cols > 32767 || series.slices.size() > 32767) {
    throw Error(ErrorCode::InvalidArgument, "dimensions exceed NIfTI-1 limits");
  }

  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& p : series.slices) {
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
      lo = std::min(lo, p.signal(i));
      hi = std::max(hi, p.signal(i));
    }
  }
  int datatype, width;
  if (lo >= 0 && hi <= 255) {
    datatype = kUint8, width = 1;
  } else if (lo >= 0 && hi <= 65535) {
    datatype = kUint16, width = 2;
  } else if (lo >= -32768 && hi <= 32767) {
    datatype = kInt16, width = 2;
  } else {
    datatype = kInt32, width = 4;
  }

  std::vector<std::uint8_t> out(kVoxOffset, 0);
  std::span<std::uint8_t> hdr(out);
  auto put_f32 = [&](std::size_t at, double v) {
    const auto f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    detail::set_le(hdr, at, bits, 4);
  };
  detail::set_le(hdr, 0, kHeaderSize, 4);
  out[38] = 'r';
  const std::size_t dims[] = {3, first.cols, first.rows, series.slices.size(), 1, 1, 1, 1};
  for (std::size_t i = 0; i < 8; ++i) detail::set_le(hdr, 40 + 2 * i, dims[i], 2);
  detail::set_le(hdr, 70, static_cast<std::uint64_t>(datatype), 2);
  detail::set_le(hdr, 72, static_cast<std::uint64_t>(width * 8), 2);

  const Affine ras = flip_xy(*m.affine);
  const Quaternion q = quaternion_from(ras);
  put_f32(76, q.qfac);
  for (int j = 0; j < 3; ++j) put_f32(80 + 4 * static_cast<std::size_t>(j), norm(affine_column(ras, j)));
  put_f32(108, static_cast<double>(kVoxOffset));
  put_f32(112, m.rescale_slope);
  put_f32(116, m.rescale_intercept);
  out[123] = 2;  // millimetres
  if (m.source_tags.is_object() && m.source_tags.contains("descrip") &&
      m.source_tags["descrip"].is_string()) {
    const std::string d = m.source_tags["descrip"].get<std::string>().substr(0, 79);
    std::copy(d.begin(), d.end(), out.begin() + 148);
  }
  detail::set_le(hdr, 252, 1, 2);
  detail::set_le(hdr, 254, 1, 2);
  put_f32(256, q.b);
  put_f32(260, q.c);
  put_f32(264, q.d);
  put_f32(268, ras[0][3]);
  put_f32(272, ras[1][3]);
  put_f32(276, ras[2][3]);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) put_f32(280 + 16 * i + 4 * j, ras[i][j]);
  }
  std::memcpy(out.data() + 344, "n+1", 4);

  out.reserve(out.size() + first.samples.size() * series.slices.size() * static_cast<std::size_t>(width));
  for (const auto& p : series.slices) {
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
      detail::put_le(out, static_cast<std::uint64_t>(p.signal(i)), width);
    }
  }
  return out;
}

}  // namespace mist
