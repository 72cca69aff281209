#pragma once

#include "cranio/geometry/mesh.hpp"
#include "cranio/geometry/nrrd.hpp"
#include "cranio/voxelgrid/sparse_grid.hpp"

namespace cranio {

/// Narrow-band signed distance of a closed mesh sampled at voxel centres.
///
/// Magnitudes are exact point-to-triangle distances clamped to `band`; signs
/// come from a +x ray-parity scan, which also fills the deep interior with
/// -band. The lattice extent covers the mesh bounds grown by the band.
/// Throws open_mesh if any edge is used by an odd number of triangles.
SparseGrid mesh_to_sdf(const TriMesh& mesh, const Lattice& lattice, double band);
inline SparseGrid mesh_to_sdf(const TriMesh& mesh, double voxel_size, double band) {
    return mesh_to_sdf(mesh, Lattice{voxel_size, Vec3::Zero()}, band);
}

/// Same inside test as mesh_to_sdf without distance evaluation; identical to
/// sdf_to_occupancy(mesh_to_sdf(mesh, lattice, band)) for any band.
SparseGrid mesh_to_occupancy(const TriMesh& mesh, const Lattice& lattice);

SparseGrid sdf_to_occupancy(const SparseGrid& sdf);

/// Voxel active iff label > 0. Spacing must equal `voxel_size` on every axis
/// (no resampling).
SparseGrid labels_to_occupancy(const LabelVolume& volume, double voxel_size);

/// Signed distance estimate from a binary grid: distance between voxel
/// centres of opposite state, less half a voxel, clamped to `band`.
SparseGrid occupancy_to_sdf(const SparseGrid& occupancy, double band);

/// +-h/2 step field whose zero level set runs half-way between active and
/// inactive voxel centres.
SparseGrid occupancy_pseudo_sdf(const SparseGrid& occupancy);

}  // namespace cranio
