#pragma once

#include "cranio/geometry/mesh.hpp"
#include "cranio/voxelgrid/sparse_grid.hpp"

namespace cranio {

/// Marching-cubes triangulation of the iso level set, one cell per lattice
/// cube between voxel centres. Edge vertices are linearly interpolated and
/// shared between neighbouring cells, so closed level sets give watertight,
/// outward-wound meshes.
///
/// SDF grids are inside below `iso`; occupancy grids are meshed through the
/// +-h/2 step field (iso should be 0); ratio and count grids are inside above
/// `iso`. An empty level set yields an empty mesh.
TriMesh extract_mesh(const SparseGrid& grid, double iso = 0.0);

}  // namespace cranio
