#include "cranio/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include <Eigen/Geometry>

#include "cranio/common/error.hpp"

namespace cranio {

void validate(const TriMesh& mesh) {
    const auto n = mesh.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!mesh.vertices[i].allFinite())
            throw Error(errc::kInvalidArgument, "vertex " + std::to_string(i) + " is not finite");
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (auto idx : mesh.triangles[t]) {
            if (idx >= n)
                throw Error(errc::kInvalidArgument,
                            "triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                                " of " + std::to_string(n));
        }
    }
    if (!mesh.normals.empty()) {
        if (mesh.normals.size() != n) throw Error(errc::kInvalidArgument, "normal count != vertex count");
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(mesh.normals[i].norm() - 1.0) > 1e-6)
                throw Error(errc::kInvalidArgument, "normal " + std::to_string(i) + " is not unit length");
        }
    }
}

Aabb bounds(const TriMesh& mesh) {
    Aabb box;
    for (const auto& v : mesh.vertices) box.extend(v);
    return box;
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
    std::vector<Vec3> acc(mesh.vertices.size(), Vec3::Zero());
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        // |cross| is twice the area, so this is area weighting.
        const Vec3 n = (b - a).cross(c - a);
        for (auto idx : t) acc[idx] += n;
    }
    for (auto& n : acc) {
        const double len = n.norm();
        n = len > 0.0 && std::isfinite(len) ? Vec3(n / len) : Vec3::UnitZ();
    }
    return acc;
}

TriMesh with_normals(TriMesh mesh) {
    mesh.normals = vertex_normals(mesh);
    return mesh;
}

TriMesh compact(const TriMesh& mesh) {
    constexpr auto kUnused = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> remap(mesh.vertices.size(), kUnused);
    for (const auto& t : mesh.triangles)
        for (auto idx : t) remap[idx] = 0;
    TriMesh out;
    const bool normals = mesh.has_normals();
    for (std::size_t i = 0; i < remap.size(); ++i) {
        if (remap[i] == kUnused) continue;
        remap[i] = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[i]);
        if (normals) out.normals.push_back(mesh.normals[i]);
    }
    out.triangles.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) out.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    return out;
}

namespace {

std::unordered_map<std::uint64_t, int> edge_use_counts(const TriMesh& mesh) {
    std::unordered_map<std::uint64_t, int> counts;
    counts.reserve(mesh.triangles.size() * 3 / 2 + 1);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            std::uint64_t a = t[e];
            std::uint64_t b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++counts[(a << 32) | b];
        }
    }
    return counts;
}

}  // namespace

std::size_t boundary_edge_count(const TriMesh& mesh) {
    std::size_t odd = 0;
    for (const auto& [key, count] : edge_use_counts(mesh)) odd += (count % 2 != 0);
    return odd;
}

bool is_watertight(const TriMesh& mesh) {
    if (mesh.triangles.empty()) return false;
    const auto counts = edge_use_counts(mesh);
    return std::all_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second == 2; });
}

double signed_volume(const TriMesh& mesh) {
    double six_v = 0.0;
    for (const auto& t : mesh.triangles)
        six_v += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]]));
    return six_v / 6.0;
}

TriMesh merge(const std::vector<TriMesh>& parts) {
    TriMesh out;
    const bool normals = !parts.empty() && std::all_of(parts.begin(), parts.end(), [](const TriMesh& m) {
        return m.has_normals() || m.vertices.empty();
    });
    for (const auto& part : parts) {
        const auto offset = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.insert(out.vertices.end(), part.vertices.begin(), part.vertices.end());
        if (normals) out.normals.insert(out.normals.end(), part.normals.begin(), part.normals.end());
        for (const auto& t : part.triangles) out.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    }
    return out;
}

}  // namespace cranio
