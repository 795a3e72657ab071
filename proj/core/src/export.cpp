#include "mist/error.hpp"
#include "mist/formats.hpp"
#include "mist/hierarchy.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

namespace mist {
namespace {

std::string slice_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%06zu.%s", index, ext);
  return buf;
}

}  // namespace

void check_series(const DecodedSeries& series) {
  if (series.slices.empty()) throw Error(ErrorCode::InvalidArgument, "series has no slices");
  const PixelPlane& first = series.slices.front();
  for (std::size_t k = 0; k < series.slices.size(); ++k) {
    const PixelPlane& p = series.slices[k];
    p.validate();
    if (p.rows != first.rows || p.cols != first.cols || p.bit_depth != first.bit_depth) {
      throw Error(ErrorCode::InvalidArgument,
                  "slice " + std::to_string(k) + " differs in dims or bit depth");
    }
  }
  const MetadataDocument& m = series.metadata;
  if (m.rows != first.rows || m.cols != first.cols || m.num_slices != series.slices.size()) {
    throw Error(ErrorCode::InvalidArgument, "metadata dims disagree with slices");
  }
}

std::vector<ExportedFile> export_series(const DecodedSeries& series, FormatKind target) {
  check_series(series);
  DecodedSeries mapped{map_tags(series.metadata, target), series.slices};
  std::vector<ExportedFile> out;
  switch (target) {
    case FormatKind::Dicom:
      for (std::size_t k = 0; k < mapped.slices.size(); ++k) {
        out.push_back({slice_name(k, "dcm"), encode_dicom_slice(mapped, k)});
      }
      break;
    case FormatKind::Nifti:
      out.push_back({"volume.nii", encode_nifti(mapped)});
      break;
    case FormatKind::Raster:
      if (mapped.slices.size() == 1) {
        out.push_back({"image.png", encode_png(mapped.slices.front())});
      } else {
        for (std::size_t k = 0; k < mapped.slices.size(); ++k) {
          out.push_back({slice_name(k, "png"), encode_png(mapped.slices[k])});
        }
      }
      break;
  }
  return out;
}

std::vector<std::filesystem::path> write_series(const DecodedSeries& series, FormatKind target,
                                                const std::filesystem::path& destination) {
  const auto files = export_series(series, target);
  std::filesystem::create_directories(destination);
  std::vector<std::filesystem::path> written;
  for (const auto& f : files) {
    written.push_back(destination / f.name);
    write_file_bytes(written.back(), f.bytes);
  }
  return written;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace mist
