#include "cranio/metrics/surface_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cranio/common/error.hpp"
#include "cranio/common/parallel.hpp"
#include "cranio/geometry/ray_parity.hpp"
#include "cranio/geometry/triangle_distance.hpp"

namespace cranio {

namespace {

constexpr std::uint32_t kLeafTriangles = 4;

double box_distance_sq(const Aabb& b, const Vec3& p) {
    const Vec3 d = (b.min - p).cwiseMax(p - b.max).cwiseMax(0.0);
    return d.squaredNorm();
}

}  // namespace

TriangleBvh::TriangleBvh(const TriMesh& mesh) {
    tris_.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]});
        centroids_.push_back((tris_.back()[0] + tris_.back()[1] + tris_.back()[2]) / 3.0);
    }
    order_.resize(tris_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!tris_.empty()) build(0, static_cast<std::uint32_t>(tris_.size()));
}

std::uint32_t TriangleBvh::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) {
        for (const auto& v : tris_[order_[i]]) box.extend(v);
    }
    nodes_.push_back({box, begin, end, 0, 0, true});
    if (end - begin <= kLeafTriangles) return id;

    Aabb cbox;
    for (std::uint32_t i = begin; i < end; ++i) cbox.extend(centroids_[order_[i]]);
    int axis = 0;
    (cbox.max - cbox.min).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centroids_[a][axis], cb = centroids_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].leaf = false;
    return id;
}

double TriangleBvh::distance_sq(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    if (!nodes_.empty()) search(0, p, best);
    return best;
}

void TriangleBvh::search(std::uint32_t node_id, const Vec3& p, double& best) const {
    const Node& node = nodes_[node_id];
    if (node.leaf) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const auto& t = tris_[order_[i]];
            best = std::min(best, point_triangle_distance_sq(p, t[0], t[1], t[2]));
        }
        return;
    }
    const double dl = box_distance_sq(nodes_[node.left].box, p);
    const double dr = box_distance_sq(nodes_[node.right].box, p);
    const std::uint32_t first = dl <= dr ? node.left : node.right;
    const std::uint32_t second = dl <= dr ? node.right : node.left;
    if (std::min(dl, dr) <= best) search(first, p, best);
    if (std::max(dl, dr) <= best) search(second, p, best);
}

std::vector<double> unsigned_distances(const std::vector<Vec3>& points, const TriMesh& surface) {
    if (surface.triangles.empty()) throw Error(errc::kEmptyGeometry, "distance query against an empty surface");
    const TriangleBvh bvh(surface);
    std::vector<double> out(points.size());
    parallel_for(points.size(), [&](std::size_t i) { out[i] = std::sqrt(bvh.distance_sq(points[i])); });
    return out;
}

std::vector<double> signed_distances(const TriMesh& subject, const TriMesh& reference, double h) {
    if (subject.vertices.empty()) throw Error(errc::kEmptyGeometry, "signed_distances: empty subject mesh");
    if (reference.triangles.empty()) throw Error(errc::kEmptyGeometry, "signed_distances: empty reference mesh");
    const std::size_t open = boundary_edge_count(reference);
    if (open != 0)
        throw Error(errc::kOpenMesh,
                    "signed_distances: reference mesh is open (" + std::to_string(open) + " boundary edges)");
    const TriangleBvh bvh(reference);
    const RayParityIndex parity(reference, h);
    std::vector<double> out(subject.vertices.size());
    parallel_for(out.size(), [&](std::size_t i) {
        const Vec3& v = subject.vertices[i];
        const double d = std::sqrt(bvh.distance_sq(v));
        out[i] = d > 0.0 && parity.inside(v) ? -d : d;
    });
    return out;
}

}  // namespace cranio
