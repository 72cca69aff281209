#pragma once

#include <cstdint>
#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// Bounding-volume hierarchy over triangles for exact closest-point queries.
/// Immutable after construction; concurrent queries are safe.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriMesh& mesh);

    /// Squared distance from p to the closest triangle; +inf for empty meshes.
    double distance_sq(const Vec3& p) const;

private:
    struct Node {
        Aabb box;
        std::uint32_t begin, end;  // leaf triangle range
        std::uint32_t left, right;
        bool leaf;
    };
    std::uint32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::uint32_t node, const Vec3& p, double& best) const;

    std::vector<std::array<Vec3, 3>> tris_;
    std::vector<Vec3> centroids_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

/// Per subject vertex: exact distance to the reference surface, negative
/// when the vertex lies inside the reference. `h` sets the cell size of the
/// inside-test index only. Throws open_mesh for an open reference and
/// empty_geometry for an empty subject.
std::vector<double> signed_distances(const TriMesh& subject, const TriMesh& reference, double h = 1.0);

/// Per point: exact distance to the surface (no closedness needed).
std::vector<double> unsigned_distances(const std::vector<Vec3>& points, const TriMesh& surface);

}  // namespace cranio
