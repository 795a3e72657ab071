#include "mist/metadata.hpp"

#include "mist/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace mist {

int rank(FormatKind kind) noexcept { return static_cast<int>(kind); }

std::string_view to_string(FormatKind kind) noexcept {
  switch (kind) {
    case FormatKind::Dicom: return "dicom";
    case FormatKind::Nifti: return "nifti";
    case FormatKind::Raster: return "raster";
  }
  return "raster";
}

FormatKind format_from_string(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "dicom" || lower == "dcm") return FormatKind::Dicom;
  if (lower == "nifti" || lower == "nii") return FormatKind::Nifti;
  if (lower == "raster" || lower == "png") return FormatKind::Raster;
  throw Error(ErrorCode::InvalidArgument, "unknown format '" + std::string(text) + "'");
}

namespace {

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& value) {
  if (value) j[key] = *value;
}

template <typename T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& value) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    value.reset();
  } else {
    value = it->get<T>();
  }
}

}  // namespace

void to_json(nlohmann::json& j, const MetadataDocument& m) {
  j = nlohmann::json{
      {"format", to_string(m.format)},
      {"series_id", m.series_id},
      {"modality", m.modality},
      {"rows", m.rows},
      {"cols", m.cols},
      {"num_slices", m.num_slices},
      {"pixel_spacing_row", m.pixel_spacing_row},
      {"pixel_spacing_col", m.pixel_spacing_col},
      {"rescale_intercept", m.rescale_intercept},
      {"rescale_slope", m.rescale_slope},
      {"photometric", m.photometric},
      {"bits_stored", m.bits_stored},
      {"source_tags", m.source_tags},
  };
  put_optional(j, "slice_thickness", m.slice_thickness);
  put_optional(j, "spacing_between_slices", m.spacing_between_slices);
  put_optional(j, "image_position", m.image_position);
  put_optional(j, "image_orientation", m.image_orientation);
  put_optional(j, "affine", m.affine);
}

void from_json(const nlohmann::json& j, MetadataDocument& m) {
  m.format = format_from_string(j.at("format").get<std::string>());
  j.at("series_id").get_to(m.series_id);
  m.modality = j.value("modality", "");
  j.at("rows").get_to(m.rows);
  j.at("cols").get_to(m.cols);
  j.at("num_slices").get_to(m.num_slices);
  m.pixel_spacing_row = j.value("pixel_spacing_row", 1.0);
  m.pixel_spacing_col = j.value("pixel_spacing_col", 1.0);
  m.rescale_intercept = j.value("rescale_intercept", 0.0);
  m.rescale_slope = j.value("rescale_slope", 1.0);
  m.photometric = j.value("photometric", "MONOCHROME2");
  m.bits_stored = j.value("bits_stored", 16);
  m.source_tags = j.value("source_tags", nlohmann::json::object());
  get_optional(j, "slice_thickness", m.slice_thickness);
  get_optional(j, "spacing_between_slices", m.spacing_between_slices);
  get_optional(j, "image_position", m.image_position);
  get_optional(j, "image_orientation", m.image_orientation);
  get_optional(j, "affine", m.affine);
  if (m.rows < 1 || m.cols < 1 || m.num_slices < 1 || !(m.pixel_spacing_row > 0) ||
      !(m.pixel_spacing_col > 0)) {
    throw Error(ErrorCode::InvalidArgument, "metadata dimensions or spacings out of range");
  }
}

Affine identity_affine() {
  Affine a{};
  for (int i = 0; i < 4; ++i) a[i][i] = 1.0;
  return a;
}

Vec3 voxel_to_world(const Affine& a, double col, double row, double slice) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = a[i][0] * col + a[i][1] * row + a[i][2] * slice + a[i][3];
  return out;
}

Vec3 affine_column(const Affine& a, int index) { return {a[0][index], a[1][index], a[2][index]}; }

void set_affine_column(Affine& a, int index, const Vec3& v) {
  for (int i = 0; i < 3; ++i) a[i][index] = v[i];
}

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 scaled(const Vec3& v, double s) { return {v[0] * s, v[1] * s, v[2] * s}; }

Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return n > 0 ? scaled(v, 1.0 / n) : v;
}

Affine assemble_affine(const Orientation& o, const Vec3& position, double spacing_row,
                       double spacing_col, const Vec3& slice_step) {
  Affine a = identity_affine();
  set_affine_column(a, 0, scaled({o[0], o[1], o[2]}, spacing_col));
  set_affine_column(a, 1, scaled({o[3], o[4], o[5]}, spacing_row));
  set_affine_column(a, 2, slice_step);
  set_affine_column(a, 3, position);
  return a;
}

bool geometry_consistent(const MetadataDocument& meta, double relative) {
  if (!meta.affine) return true;
  const Affine& a = *meta.affine;
  auto close = [relative](double x, double y) {
    return std::fabs(x - y) <= relative * std::max({1.0, std::fabs(x), std::fabs(y)});
  };
  const Vec3 c0 = affine_column(a, 0), c1 = affine_column(a, 1);
  if (!close(norm(c0), meta.pixel_spacing_col) || !close(norm(c1), meta.pixel_spacing_row)) {
    return false;
  }
  if (meta.image_position) {
    for (int i = 0; i < 3; ++i) {
      if (!close((*meta.image_position)[i], a[i][3])) return false;
    }
  }
  if (meta.image_orientation) {
    const Vec3 r = normalized(c0), c = normalized(c1);
    for (int i = 0; i < 3; ++i) {
      if (!close((*meta.image_orientation)[i], r[i]) ||
          !close((*meta.image_orientation)[i + 3], c[i])) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace mist
