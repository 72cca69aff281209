#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cranio {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle surface in millimetre world coordinates.
///
/// `normals` is either empty or holds one unit vector per vertex.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<Vec3> normals;

    bool empty() const { return vertices.empty(); }
    bool has_normals() const { return !normals.empty() && normals.size() == vertices.size(); }
};

struct Aabb {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    bool valid() const { return (min.array() <= max.array()).all(); }
    void extend(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
};

/// Throws cranio::Error(invalid_argument) naming the first violated invariant.
void validate(const TriMesh& mesh);

Aabb bounds(const TriMesh& mesh);

/// Area-weighted vertex normals, accumulated in triangle order. Vertices that
/// touch no triangle of positive area get +z.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);
TriMesh with_normals(TriMesh mesh);

/// Drops vertices no triangle references, preserving the relative order of
/// the survivors. Normals follow their vertices.
TriMesh compact(const TriMesh& mesh);

/// Number of undirected edges used by an odd number of triangles. Zero for
/// closed surfaces.
std::size_t boundary_edge_count(const TriMesh& mesh);

/// True if every undirected edge is shared by exactly two triangles.
bool is_watertight(const TriMesh& mesh);

/// Enclosed volume via the divergence theorem; positive for outward winding.
double signed_volume(const TriMesh& mesh);

/// Concatenates meshes, offsetting indices.
TriMesh merge(const std::vector<TriMesh>& parts);

}  // namespace cranio
