#include "cranio/voxelgrid/sparse_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cranio/common/error.hpp"

namespace cranio {

const char* to_string(GridKind kind) {
    switch (kind) {
        case GridKind::Occupancy: return "occupancy";
        case GridKind::Count: return "count";
        case GridKind::Ratio: return "ratio";
        case GridKind::Sdf: return "sdf";
    }
    return "unknown";
}

Coord Lattice::nearest(const Vec3& p) const {
    const Vec3 q = (p - origin) / voxel_size;
    return {static_cast<std::int32_t>(std::lround(q.x())), static_cast<std::int32_t>(std::lround(q.y())),
            static_cast<std::int32_t>(std::lround(q.z()))};
}

SparseGrid::SparseGrid(GridKind kind, Lattice lattice, double band)
    : kind_(kind), lattice_(lattice), band_(band) {
    if (!(lattice.voxel_size > 0.0)) throw Error(errc::kInvalidArgument, "voxel size must be positive");
    if (kind == GridKind::Sdf) {
        if (!(band > 0.0)) throw Error(errc::kInvalidArgument, "SDF band width must be positive");
        background_ = static_cast<float>(band);
    }
}

float SparseGrid::get(const Coord& c) const {
    auto it = chunks_.find(chunk_of(c));
    if (it == chunks_.end()) return background_;
    return it->second[static_cast<std::size_t>(local_index(c))];
}

void SparseGrid::set(const Coord& c, float value) {
    const Coord key = chunk_of(c);
    auto it = chunks_.find(key);
    if (it == chunks_.end()) {
        if (value == background_) return;
        it = chunks_.emplace(key, Chunk(kChunkVoxels, background_)).first;
    }
    it->second[static_cast<std::size_t>(local_index(c))] = value;
}

std::size_t SparseGrid::active_count() const {
    std::size_t n = 0;
    for (const auto& [key, chunk] : chunks_)
        for (float v : chunk) n += is_active_value(v);
    return n;
}

std::vector<Coord> SparseGrid::active_voxels() const {
    std::vector<Coord> out;
    for (const auto& [key, chunk] : chunks_)
        for (int local = 0; local < kChunkVoxels; ++local)
            if (is_active_value(chunk[static_cast<std::size_t>(local)])) out.push_back(voxel_of(key, local));
    std::sort(out.begin(), out.end());
    return out;
}

void SparseGrid::prune() {
    for (auto it = chunks_.begin(); it != chunks_.end();) {
        const bool all_bg = std::all_of(it->second.begin(), it->second.end(), [&](float v) { return v == background_; });
        it = all_bg ? chunks_.erase(it) : std::next(it);
    }
}

bool SparseGrid::operator==(const SparseGrid& other) const {
    if (kind_ != other.kind_ || !(lattice_ == other.lattice_) || band_ != other.band_) return false;
    // Compare logical content: an all-background chunk equals an absent one.
    auto equal_one_way = [](const SparseGrid& a, const SparseGrid& b) {
        for (const auto& [key, chunk] : a.chunks_) {
            auto it = b.chunks_.find(key);
            for (int i = 0; i < kChunkVoxels; ++i) {
                const float bv = it == b.chunks_.end() ? b.background_ : it->second[static_cast<std::size_t>(i)];
                if (chunk[static_cast<std::size_t>(i)] != bv) return false;
            }
        }
        return true;
    };
    return equal_one_way(*this, other) && equal_one_way(other, *this);
}

VoxelBounds stored_bounds(const SparseGrid& grid) {
    VoxelBounds b;
    bool any = false;
    grid.for_each_stored([&](const Coord& c, float) {
        if (!any) {
            b.min = b.max = c;
            any = true;
            return;
        }
        for (int a = 0; a < 3; ++a) {
            b.min[a] = std::min(b.min[a], c[a]);
            b.max[a] = std::max(b.max[a], c[a]);
        }
    });
    return b;
}

void require_same_lattice(const SparseGrid& a, const SparseGrid& b, const char* operation) {
    if (!(a.lattice() == b.lattice()))
        throw Error(errc::kLatticeMismatch, std::string(operation) + ": lattice mismatch (voxel size or origin differ)");
}

}  // namespace cranio
