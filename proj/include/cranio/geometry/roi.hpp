#pragma once

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// User-placed selection sphere (also used for offset border markers).
struct RoiSphere {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;

    bool contains(const Vec3& p) const { return (p - center).squaredNorm() <= radius * radius; }
    bool operator==(const RoiSphere&) const = default;
};

/// Keeps exactly the triangles whose three vertices lie inside `roi`;
/// unreferenced vertices are dropped. The result may be empty.
TriMesh clip_by_sphere(const TriMesh& mesh, const RoiSphere& roi);

/// Per-vertex membership of clip_by_sphere for vertex positions `positions`
/// (which may be a transformed copy of mesh.vertices).
std::vector<char> clip_vertex_mask(const std::vector<Vec3>& positions, const std::vector<Triangle>& triangles,
                                   const RoiSphere& roi);

}  // namespace cranio
