#pragma once

#include <vector>

#include "cranio/geometry/roi.hpp"
#include "cranio/voxelgrid/sparse_grid.hpp"

namespace cranio {

/// Spatially varying outward offset of the target surface. The weight is 1
/// away from every marker and ramps to 0 inside the marker balls.
struct OffsetField {
    double base_offset = 1.0;
    std::vector<RoiSphere> border_markers;
    double falloff = 5.0;

    /// clamp(distance to the nearest marker ball / falloff, 0, 1); 1 without markers.
    double weight(const Vec3& p) const;
    void validate() const;
};

/// Per-voxel fraction of input grids that are active; values are k / M.
SparseGrid accumulate_ratio(const std::vector<SparseGrid>& grids);

/// Integer per-voxel count of active inputs.
SparseGrid accumulate_count(const std::vector<SparseGrid>& grids);

/// Active iff ratio > threshold (strict).
SparseGrid threshold_extract(const SparseGrid& ratio, double threshold);

/// out = target - o * w; the band is kept and values are clamped to it.
SparseGrid offset_surface(const SparseGrid& target, const OffsetField& field);

/// recon AND NOT (target_offset < 0).
SparseGrid subtract(const SparseGrid& recon, const SparseGrid& target_offset);

}  // namespace cranio
