#pragma once

// Readers and writers for DICOM Part 10 (uncompressed little endian), NIfTI-1,
// and grayscale PNG.

#include "mist/codec.hpp"
#include "mist/metadata.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mist {

struct DecodedSeries {
  MetadataDocument metadata;
  std::vector<PixelPlane> slices;
};

/// Throws InvalidArgument unless all slices share dims and depth and agree
/// with the metadata.
void check_series(const DecodedSeries& series);

// DICOM ---------------------------------------------------------------------

/// One single-frame DICOM file, parsed down to what series assembly needs.
struct DicomInstance {
  std::filesystem::path path;
  std::string series_uid;
  std::string sop_instance_uid;
  std::optional<int> instance_number;
  std::string modality;
  std::string photometric = "MONOCHROME2";
  std::size_t rows = 0;
  std::size_t cols = 0;
  int bits_stored = 16;
  std::optional<std::array<double, 2>> pixel_spacing;  // row, column
  std::optional<double> slice_thickness;
  std::optional<double> spacing_between_slices;
  std::optional<Vec3> image_position;
  std::optional<Orientation> image_orientation;
  double rescale_intercept = 0.0;
  double rescale_slope = 1.0;
  PixelPlane plane;
  /// Primitive-valued tags in DICOM JSON form: {"GGGGEEEE": {"vr", "Value"}}.
  nlohmann::json tags = nlohmann::json::object();
};

/// True when the bytes carry a Part 10 preamble ("DICM" at offset 128).
bool looks_like_dicom(std::span<const std::uint8_t> bytes);

/// Throws ExcludedError for files that parse but cannot be ingested, and
/// Error(CorruptData) for files that are not valid DICOM.
DicomInstance parse_dicom(std::span<const std::uint8_t> bytes,
                          const std::filesystem::path& origin = {});
DicomInstance read_dicom_file(const std::filesystem::path& path);

/// Orders instances along the slice normal (ties by InstanceNumber, then
/// path) and builds the series metadata. Throws MixedSeries when instances
/// disagree on series UID, dims, or depth.
DecodedSeries assemble_dicom_series(std::vector<DicomInstance> instances);

DecodedSeries read_dicom_series(std::span<const std::filesystem::path> files);

/// One Part 10 file (explicit VR little endian) for slice `index`.
std::vector<std::uint8_t> encode_dicom_slice(const DecodedSeries& series, std::size_t index);

// NIfTI ---------------------------------------------------------------------

bool looks_like_nifti(std::span<const std::uint8_t> bytes);

/// Accepts .nii and gzip-compressed .nii.gz content. Signed or wide integer
/// volumes are shifted into unsigned storage with one intercept for the
/// whole volume.
DecodedSeries parse_nifti(std::span<const std::uint8_t> bytes, const std::string& name = "volume");
DecodedSeries read_nifti(const std::filesystem::path& path);

/// Uncompressed single-file NIfTI-1 (.nii) volume.
std::vector<std::uint8_t> encode_nifti(const DecodedSeries& series);

// Raster --------------------------------------------------------------------

bool looks_like_png(std::span<const std::uint8_t> bytes);

/// 1/2/4/8/16-bit grayscale PNG. Colour or alpha input is UnsupportedType.
DecodedSeries parse_png(std::span<const std::uint8_t> bytes, const std::string& name = "image");
DecodedSeries read_raster(const std::filesystem::path& path);

/// Grayscale PNG, 8-bit when the plane fits in 8 bits, otherwise 16-bit.
std::vector<std::uint8_t> encode_png(const PixelPlane& plane);

// Conversion ----------------------------------------------------------------

struct ExportedFile {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

/// Renders the series in `target`, enforcing the hierarchy.
/// Throws HierarchyViolation or MissingGeometry.
std::vector<ExportedFile> export_series(const DecodedSeries& series, FormatKind target);

/// Writes export_series output under `destination` (created if needed).
std::vector<std::filesystem::path> write_series(const DecodedSeries& series, FormatKind target,
                                                const std::filesystem::path& destination);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mist
