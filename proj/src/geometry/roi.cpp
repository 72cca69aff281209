#include "cranio/geometry/roi.hpp"

namespace cranio {

std::vector<char> clip_vertex_mask(const std::vector<Vec3>& positions, const std::vector<Triangle>& triangles,
                                   const RoiSphere& roi) {
    std::vector<char> inside(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) inside[i] = roi.contains(positions[i]);
    std::vector<char> kept(positions.size(), 0);
    for (const auto& t : triangles) {
        if (inside[t[0]] && inside[t[1]] && inside[t[2]]) kept[t[0]] = kept[t[1]] = kept[t[2]] = 1;
    }
    return kept;
}

TriMesh clip_by_sphere(const TriMesh& mesh, const RoiSphere& roi) {
    TriMesh kept;
    kept.vertices = mesh.vertices;
    kept.normals = mesh.normals;
    for (const auto& t : mesh.triangles) {
        if (roi.contains(mesh.vertices[t[0]]) && roi.contains(mesh.vertices[t[1]]) && roi.contains(mesh.vertices[t[2]]))
            kept.triangles.push_back(t);
    }
    return compact(kept);
}

}  // namespace cranio
