#pragma once

// Format-agnostic metadata record, persisted as metadata.json next to the
// pixel codestreams.

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace mist {

/// Hierarchy rank increases with metadata richness: Raster < Nifti < Dicom.
enum class FormatKind { Raster = 0, Nifti = 1, Dicom = 2 };

int rank(FormatKind kind) noexcept;
std::string_view to_string(FormatKind kind) noexcept;
/// Accepts "dicom", "nifti", "raster" (and "png"), case-insensitively.
FormatKind format_from_string(std::string_view text);

using Vec3 = std::array<double, 3>;
using Orientation = std::array<double, 6>;

/// Maps (column index, row index, slice index, 1) to patient coordinates in
/// millimetres, DICOM LPS convention. Row-major 4x4.
using Affine = std::array<std::array<double, 4>, 4>;

struct MetadataDocument {
  FormatKind format = FormatKind::Raster;
  std::string series_id;
  std::string modality;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t num_slices = 1;
  double pixel_spacing_row = 1.0;  // distance between rows, mm
  double pixel_spacing_col = 1.0;  // distance between columns, mm
  std::optional<double> slice_thickness;
  std::optional<double> spacing_between_slices;
  std::optional<Vec3> image_position;
  std::optional<Orientation> image_orientation;  // row direction, then column direction
  double rescale_intercept = 0.0;
  double rescale_slope = 1.0;
  std::string photometric = "MONOCHROME2";
  int bits_stored = 16;
  std::optional<Affine> affine;
  nlohmann::json source_tags = nlohmann::json::object();

  friend bool operator==(const MetadataDocument&, const MetadataDocument&) = default;
};

void to_json(nlohmann::json& j, const MetadataDocument& m);
void from_json(const nlohmann::json& j, MetadataDocument& m);

Affine identity_affine();
Vec3 voxel_to_world(const Affine& affine, double col, double row, double slice);
Vec3 affine_column(const Affine& affine, int index);
void set_affine_column(Affine& affine, int index, const Vec3& v);

double norm(const Vec3& v);
Vec3 cross(const Vec3& a, const Vec3& b);
Vec3 scaled(const Vec3& v, double s);
Vec3 normalized(const Vec3& v);

/// Affine from DICOM-style geometry. `slice_step` is the world offset between
/// consecutive slices.
Affine assemble_affine(const Orientation& orientation, const Vec3& position,
                       double spacing_row, double spacing_col, const Vec3& slice_step);

/// True when position, orientation, and spacings agree with the affine within
/// `relative` tolerance, or when either side is absent.
bool geometry_consistent(const MetadataDocument& meta, double relative = 1e-6);

}  // namespace mist
