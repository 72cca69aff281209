#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cranio/voxelgrid/sparse_grid.hpp"

namespace cranio {

enum class SmoothKind { Gaussian, Mean, Median };

const char* to_string(SmoothKind kind);
SmoothKind smooth_kind_from_string(const std::string& name);

/// Splits active voxels into 6-connected islands, largest first; equal sizes
/// are ordered by their lexicographically smallest voxel.
std::vector<SparseGrid> op_segment(const SparseGrid& grid);

/// First min(n, size) grids.
std::vector<SparseGrid> op_filter(const std::vector<SparseGrid>& grids, std::size_t first_n);

/// Separable level-set smoothing along x, then y, then z, repeated
/// `iterations` times. The kernel spans 2 * width_voxels + 1 taps; Gaussian
/// uses sigma = width_voxels / 2. Median is applied per axis. Occupancy
/// inputs are converted to an SDF, smoothed and re-thresholded at zero.
SparseGrid op_smooth(const SparseGrid& grid, SmoothKind kind, int width_voxels, int iterations);

/// Voxel-wise union. Occupancy grids are OR-ed, SDF grids take the minimum;
/// mixed lists are reduced to occupancy.
SparseGrid merge_union(const std::vector<SparseGrid>& grids, const Lattice& lattice);

struct GridOperator {
    enum class Type { Segment, Filter, Smooth };

    Type type = Type::Segment;
    std::size_t first_n = 1;
    SmoothKind smooth = SmoothKind::Gaussian;
    int width = 1;
    int iterations = 1;

    static GridOperator segment() { return {Type::Segment}; }
    static GridOperator filter(std::size_t n) {
        GridOperator op{Type::Filter};
        op.first_n = n;
        return op;
    }
    static GridOperator smoothing(SmoothKind kind, int width, int iterations) {
        GridOperator op{Type::Smooth};
        op.smooth = kind;
        op.width = width;
        op.iterations = iterations;
        return op;
    }
    bool operator==(const GridOperator&) const = default;
};

/// Runs an operator chain; each step maps a list of grids to a list.
std::vector<SparseGrid> apply_operators(std::vector<SparseGrid> grids, const std::vector<GridOperator>& chain);

}  // namespace cranio
