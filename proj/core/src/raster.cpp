#include "mist/error.hpp"
#include "mist/formats.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <string>

namespace mist {
namespace {

// libpng reports errors through longjmp, so the functions that call it keep
// only trivially destructible locals and hand results back through out-params.

struct MemoryInput {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

struct PngInfo {
  png_uint_32 width;
  png_uint_32 height;
  int bit_depth;
  int color_type;
  int interlace;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* in = static_cast<MemoryInput*>(png_get_io_ptr(png));
  if (in->size - in->pos < length) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, in->data + in->pos, length);
  in->pos += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

void error_callback(png_structp png, png_const_charp message) {
  auto* buffer = static_cast<char*>(png_get_error_ptr(png));
  std::strncpy(buffer, message, 255);
  buffer[255] = '\0';
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

// Returns false on a libpng error (message in `error`).
bool read_header(png_structp png, png_infop info, PngInfo* out) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  out->interlace = png_get_interlace_type(png, info);
  return true;
}

bool read_rows(png_structp png, png_infop info, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  const int depth = png_get_bit_depth(png, info);
  if (depth < 8) png_set_packing(png);
  if (depth == 16) png_set_swap(png);  // host little endian order
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

bool write_image(png_structp png, png_infop info, png_uint_32 width, png_uint_32 height, int depth,
                 png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_IHDR(png, info, width, height, depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

bool looks_like_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

DecodedSeries parse_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (!looks_like_png(bytes)) throw Error(ErrorCode::CorruptData, "missing PNG signature");
  char message[256] = "libpng error";
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, message, error_callback,
                                           warning_callback);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::IoError, "cannot allocate libpng state");
  }
  MemoryInput input{bytes.data(), bytes.size(), 0};
  png_set_read_fn(png, &input, read_callback);

  PngInfo header{};
  if (!read_header(png, info, &header)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptData, std::string("PNG: ") + message);
  }
  if (header.color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ExcludedError(ExclusionReason::UnsupportedType,
                        "PNG colour type " + std::to_string(header.color_type) +
                            " is not single-channel grayscale");
  }
  const std::size_t rows = header.height, cols = header.width;
  const std::size_t bpp = header.bit_depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> pixels(rows * cols * bpp);
  std::vector<png_bytep> row_ptrs(rows);
  for (std::size_t r = 0; r < rows; ++r) row_ptrs[r] = pixels.data() + r * cols * bpp;
  const bool ok = read_rows(png, info, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw Error(ErrorCode::CorruptData, std::string("PNG: ") + message);

  PixelPlane plane;
  plane.rows = rows;
  plane.cols = cols;
  plane.bit_depth = header.bit_depth;
  plane.samples.resize(rows * cols);
  for (std::size_t i = 0; i < plane.samples.size(); ++i) {
    plane.samples[i] = bpp == 2 ? static_cast<std::uint16_t>(pixels[2 * i] | (pixels[2 * i + 1] << 8))
                                : pixels[i];
  }

  DecodedSeries series;
  MetadataDocument& m = series.metadata;
  m.format = FormatKind::Raster;
  m.series_id = name;
  m.rows = rows;
  m.cols = cols;
  m.num_slices = 1;
  m.photometric = "MONOCHROME2";
  m.bits_stored = header.bit_depth;
  series.slices.push_back(std::move(plane));
  return series;
}

DecodedSeries read_raster(const std::filesystem::path& path) {
  return parse_png(read_file_bytes(path), path.stem().string());
}

std::vector<std::uint8_t> encode_png(const PixelPlane& plane) {
  plane.validate();
  const int depth = plane.bit_depth <= 8 ? 8 : 16;
  const std::size_t bpp = depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> pixels(plane.rows * plane.cols * bpp);
  for (std::size_t i = 0; i < plane.samples.size(); ++i) {
    if (bpp == 2) {
      pixels[2 * i] = static_cast<std::uint8_t>(plane.samples[i] & 0xFF);
      pixels[2 * i + 1] = static_cast<std::uint8_t>(plane.samples[i] >> 8);
    } else {
      pixels[i] = static_cast<std::uint8_t>(plane.samples[i]);
    }
  }
  std::vector<png_bytep> row_ptrs(plane.rows);
  for (std::size_t r = 0; r < plane.rows; ++r) row_ptrs[r] = pixels.data() + r * plane.cols * bpp;

  char message[256] = "libpng error";
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, message, error_callback,
                                            warning_callback);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::IoError, "cannot allocate libpng state");
  }
  std::vector<std::uint8_t> out;
  png_set_write_fn(png, &out, write_callback, flush_callback);
  const bool ok = write_image(png, info, static_cast<png_uint_32>(plane.cols),
                              static_cast<png_uint_32>(plane.rows), depth, row_ptrs.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) throw Error(ErrorCode::IoError, std::string("PNG: ") + message);
  return out;
}

}  // namespace mist
