#pragma once

// Convert-down rules between formats and geometry rescaling for
// sub-resolution delivery.

#include "mist/metadata.hpp"

namespace mist {

/// True iff `dst` does not need metadata that `src` cannot provide
/// (DICOM > NIfTI > raster).
bool can_convert(FormatKind src, FormatKind dst) noexcept;

/// Throws HierarchyViolation with a message naming the rule.
void require_convertible(FormatKind src, FormatKind dst);

/// Re-targets a document at `dst`. Canonical keys are kept; geometry that
/// `dst` cannot represent moves into source_tags.
MetadataDocument map_tags(const MetadataDocument& meta, FormatKind dst);

/// Geometry of the level-`level` image of an n-level pyramid. Level n+1 is
/// the identity. Throws LevelOutOfRange.
MetadataDocument rescale_geometry(const MetadataDocument& meta, int n_levels, int level);

/// Downscales the in-plane grid by an integer factor: spacings grow by
/// `factor`, dims shrink by ceil-division, and the origin shifts so that each
/// coarse voxel centre sits at the centre of the fine voxels it covers.
MetadataDocument scale_geometry(const MetadataDocument& meta, std::size_t factor);

}  // namespace mist
