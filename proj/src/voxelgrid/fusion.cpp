#include "cranio/voxelgrid/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cranio/common/error.hpp"

namespace cranio {

double OffsetField::weight(const Vec3& p) const {
    if (border_markers.empty()) return 1.0;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& m : border_markers) nearest = std::min(nearest, std::max(0.0, (p - m.center).norm() - m.radius));
    return std::clamp(nearest / falloff, 0.0, 1.0);
}

void OffsetField::validate() const {
    if (!(base_offset >= 0.0) || !std::isfinite(base_offset))
        throw Error(errc::kInvalidArgument, "offset must be a finite value >= 0");
    if (!(falloff > 0.0) || !std::isfinite(falloff)) throw Error(errc::kInvalidArgument, "offset falloff must be > 0");
    for (const auto& m : border_markers)
        if (!(m.radius > 0.0) || !m.center.allFinite())
            throw Error(errc::kInvalidArgument, "border marker radius must be > 0");
}

SparseGrid accumulate_count(const std::vector<SparseGrid>& grids) {
    if (grids.empty()) throw Error(errc::kInvalidArgument, "accumulate needs at least one grid");
    const Lattice& lattice = grids.front().lattice();
    SparseGrid count(GridKind::Count, lattice);
    for (const auto& g : grids) {
        if (g.voxel_size() != lattice.voxel_size)
            throw Error(errc::kLatticeMismatch, "accumulate: mismatched voxel sizes");
        require_same_lattice(grids.front(), g, "accumulate");
        auto& out = count.mutable_chunks();
        for (const auto& [key, chunk] : g.chunks()) {
            auto it = out.find(key);
            if (it == out.end()) it = out.emplace(key, SparseGrid::Chunk(SparseGrid::kChunkVoxels, 0.0f)).first;
            for (int i = 0; i < SparseGrid::kChunkVoxels; ++i)
                if (g.is_active_value(chunk[static_cast<std::size_t>(i)])) it->second[static_cast<std::size_t>(i)] += 1.0f;
        }
    }
    count.prune();
    return count;
}

SparseGrid accumulate_ratio(const std::vector<SparseGrid>& grids) {
    SparseGrid count = accumulate_count(grids);
    SparseGrid ratio(GridKind::Ratio, count.lattice());
    const double m = static_cast<double>(grids.size());
    for (const auto& [key, chunk] : count.chunks()) {
        SparseGrid::Chunk values(SparseGrid::kChunkVoxels);
        for (int i = 0; i < SparseGrid::kChunkVoxels; ++i)
            values[static_cast<std::size_t>(i)] = static_cast<float>(chunk[static_cast<std::size_t>(i)] / m);
        ratio.mutable_chunks().emplace(key, std::move(values));
    }
    return ratio;
}

SparseGrid threshold_extract(const SparseGrid& ratio, double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0))
        throw Error(errc::kInvalidArgument, "threshold must lie in [0, 1)");
    // Ratios are stored in single precision; compare like with like so that an
    // exact k/M threshold stays exclusive.
    const float t = static_cast<float>(threshold);
    SparseGrid out(GridKind::Occupancy, ratio.lattice());
    ratio.for_each_stored([&](const Coord& c, float v) {
        if (v > t) out.set(c, 1.0f);
    });
    return out;
}

SparseGrid offset_surface(const SparseGrid& target, const OffsetField& field) {
    if (target.kind() != GridKind::Sdf) throw Error(errc::kInvalidArgument, "offset_surface expects an SDF grid");
    field.validate();
    if (field.base_offset >= target.band())
        throw Error(errc::kInvalidArgument, "offset " + std::to_string(field.base_offset) +
                                                " mm exceeds the representable band of " + std::to_string(target.band()) +
                                                " mm");
    SparseGrid out(GridKind::Sdf, target.lattice(), target.band());
    if (field.base_offset == 0.0) return target;
    const float band = static_cast<float>(target.band());
    target.for_each_stored([&](const Coord& c, float v) {
        const double w = field.weight(target.lattice().center(c));
        const float shifted = static_cast<float>(v - field.base_offset * w);
        out.set(c, std::clamp(shifted, -band, band));
    });
    out.prune();
    return out;
}

SparseGrid subtract(const SparseGrid& recon, const SparseGrid& target_offset) {
    if (target_offset.kind() != GridKind::Sdf) throw Error(errc::kInvalidArgument, "subtract expects an SDF target");
    require_same_lattice(recon, target_offset, "subtract");
    SparseGrid out(GridKind::Occupancy, recon.lattice());
    GridReader target(target_offset);
    recon.for_each_stored([&](const Coord& c, float v) {
        if (recon.is_active_value(v) && target.get(c) >= 0.0f) out.set(c, 1.0f);
    });
    return out;
}

}  // namespace cranio
