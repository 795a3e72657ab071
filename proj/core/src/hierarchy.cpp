#include "mist/hierarchy.hpp"

#include "mist/codec.hpp"
#include "mist/error.hpp"

#include <string>

namespace mist {

bool can_convert(FormatKind src, FormatKind dst) noexcept { return rank(src) >= rank(dst); }

void require_convertible(FormatKind src, FormatKind dst) {
  if (!can_convert(src, dst)) {
    throw Error(ErrorCode::HierarchyViolation,
                std::string("cannot convert ") + std::string(to_string(src)) + " up to " +
                    std::string(to_string(dst)) +
                    ": series are only converted down the hierarchy dicom > nifti > raster");
  }
}

MetadataDocument map_tags(const MetadataDocument& meta, FormatKind dst) {
  require_convertible(meta.format, dst);
  MetadataDocument out = meta;
  out.format = dst;
  if (dst == FormatKind::Raster) {
    if (out.affine) out.source_tags["affine"] = *out.affine;
    if (out.image_position) out.source_tags["image_position"] = *out.image_position;
    if (out.image_orientation) out.source_tags["image_orientation"] = *out.image_orientation;
    out.affine.reset();
    out.image_position.reset();
    out.image_orientation.reset();
    return out;
  }
  if (!out.affine && out.image_position && out.image_orientation) {
    const Orientation& o = *out.image_orientation;
    const Vec3 normal = cross({o[0], o[1], o[2]}, {o[3], o[4], o[5]});
    const double step =
        out.spacing_between_slices.value_or(out.slice_thickness.value_or(1.0));
    out.affine = assemble_affine(o, *out.image_position, out.pixel_spacing_row,
                                 out.pixel_spacing_col, scaled(normal, step));
  }
  return out;
}

MetadataDocument scale_geometry(const MetadataDocument& meta, std::size_t factor) {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "scale factor must be positive");
  MetadataDocument out = meta;
  if (factor == 1) return out;
  const double s = static_cast<double>(factor);
  const double half_growth = (s - 1.0) / 2.0;
  out.rows = ceil_div(meta.rows, factor);
  out.cols = ceil_div(meta.cols, factor);
  out.pixel_spacing_row = meta.pixel_spacing_row * s;
  out.pixel_spacing_col = meta.pixel_spacing_col * s;

  if (meta.affine) {
    Affine a = *meta.affine;
    const Vec3 c0 = affine_column(a, 0), c1 = affine_column(a, 1);
    for (int i = 0; i < 3; ++i) a[i][3] += half_growth * (c0[i] + c1[i]);
    set_affine_column(a, 0, scaled(c0, s));
    set_affine_column(a, 1, scaled(c1, s));
    out.affine = a;
    if (meta.image_position) out.image_position = affine_column(a, 3);
  } else if (meta.image_position && meta.image_orientation) {
    const Orientation& o = *meta.image_orientation;
    Vec3 p = *meta.image_position;
    for (int i = 0; i < 3; ++i) {
      p[i] += half_growth * (o[i] * meta.pixel_spacing_col + o[i + 3] * meta.pixel_spacing_row);
    }
    out.image_position = p;
  }
  return out;
}

MetadataDocument rescale_geometry(const MetadataDocument& meta, int n_levels, int level) {
  if (n_levels < 0 || level < 1 || level > n_levels + 1) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(level) + " outside [1, " +
                                                std::to_string(n_levels + 1) + "]");
  }
  return scale_geometry(meta, std::size_t{1} << (n_levels + 1 - level));
}

}  // namespace mist
