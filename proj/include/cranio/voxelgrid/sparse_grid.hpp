#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

enum class GridKind : std::uint8_t { Occupancy = 0, Count = 1, Ratio = 2, Sdf = 3 };

const char* to_string(GridKind kind);

using Coord = std::array<std::int32_t, 3>;

/// Uniform voxel lattice: voxel (i, j, k) is centred at origin + h * (i, j, k).
struct Lattice {
    double voxel_size = 0.5;
    Vec3 origin = Vec3::Zero();

    Vec3 center(const Coord& c) const {
        return origin + voxel_size * Vec3(c[0], c[1], c[2]);
    }
    /// Voxel whose centre is nearest to p.
    Coord nearest(const Vec3& p) const;
    bool operator==(const Lattice& o) const { return voxel_size == o.voxel_size && origin == o.origin; }
};

/// Chunked sparse voxel grid with dense 16^3 blocks of float values.
///
/// Absent voxels read as background(): 0 for Occupancy/Count/Ratio and
/// +band for Sdf. Sdf grids store every voxel below +band, so solid interiors
/// are present and clamped to -band; exterior beyond the band is background.
class SparseGrid {
public:
    static constexpr int kChunkBits = 4;
    static constexpr int kChunkDim = 1 << kChunkBits;
    static constexpr int kChunkVoxels = kChunkDim * kChunkDim * kChunkDim;

    using Chunk = std::vector<float>;
    using ChunkMap = std::map<Coord, Chunk>;

    SparseGrid() = default;
    SparseGrid(GridKind kind, Lattice lattice, double band = 0.0);

    GridKind kind() const { return kind_; }
    const Lattice& lattice() const { return lattice_; }
    double voxel_size() const { return lattice_.voxel_size; }
    double band() const { return band_; }
    float background() const { return background_; }

    float get(const Coord& c) const;
    void set(const Coord& c, float value);

    const ChunkMap& chunks() const { return chunks_; }
    ChunkMap& mutable_chunks() { return chunks_; }
    std::size_t chunk_count() const { return chunks_.size(); }

    /// Voxels counted as solid: value != 0 (Occupancy/Count/Ratio) or < 0 (Sdf).
    std::size_t active_count() const;
    bool is_active_value(float v) const { return kind_ == GridKind::Sdf ? v < 0.0f : v != 0.0f; }
    bool is_active(const Coord& c) const { return is_active_value(get(c)); }

    /// Calls f(coord, value) for every voxel in every allocated chunk whose
    /// value differs from background, in chunk-map order.
    template <class F>
    void for_each_stored(F&& f) const {
        for (const auto& [key, chunk] : chunks_) {
            for (int local = 0; local < kChunkVoxels; ++local) {
                const float v = chunk[static_cast<std::size_t>(local)];
                if (v == background_) continue;
                f(voxel_of(key, local), v);
            }
        }
    }

    /// Sorted list of active voxels.
    std::vector<Coord> active_voxels() const;

    /// Drops chunks that hold only background values.
    void prune();

    static Coord chunk_of(const Coord& c) {
        return {c[0] >> kChunkBits, c[1] >> kChunkBits, c[2] >> kChunkBits};
    }
    static int local_index(const Coord& c) {
        constexpr int mask = kChunkDim - 1;
        return (c[0] & mask) | ((c[1] & mask) << kChunkBits) | ((c[2] & mask) << (2 * kChunkBits));
    }
    static Coord voxel_of(const Coord& chunk, int local) {
        constexpr int mask = kChunkDim - 1;
        return {(chunk[0] << kChunkBits) | (local & mask), (chunk[1] << kChunkBits) | ((local >> kChunkBits) & mask),
                (chunk[2] << kChunkBits) | ((local >> (2 * kChunkBits)) & mask)};
    }

    bool operator==(const SparseGrid& other) const;

private:
    GridKind kind_ = GridKind::Occupancy;
    Lattice lattice_;
    double band_ = 0.0;
    float background_ = 0.0f;
    ChunkMap chunks_;
};

/// Read accessor that caches the last chunk it touched. Not thread-safe;
/// create one per thread.
class GridReader {
public:
    explicit GridReader(const SparseGrid& grid) : grid_(&grid) {}

    float get(const Coord& c) {
        const Coord key = SparseGrid::chunk_of(c);
        if (!cached_ || key != key_) {
            key_ = key;
            cached_ = true;
            auto it = grid_->chunks().find(key);
            chunk_ = it == grid_->chunks().end() ? nullptr : &it->second;
        }
        return chunk_ ? (*chunk_)[static_cast<std::size_t>(SparseGrid::local_index(c))] : grid_->background();
    }

private:
    const SparseGrid* grid_;
    const SparseGrid::Chunk* chunk_ = nullptr;
    Coord key_{};
    bool cached_ = false;
};

/// Inclusive voxel bounds of the stored (non-background) voxels; empty grids
/// return min > max.
struct VoxelBounds {
    Coord min{1, 1, 1};
    Coord max{0, 0, 0};
    bool empty() const { return min[0] > max[0]; }
};
VoxelBounds stored_bounds(const SparseGrid& grid);

/// Throws lattice_mismatch unless both grids share voxel size and origin.
void require_same_lattice(const SparseGrid& a, const SparseGrid& b, const char* operation);

}  // namespace cranio
