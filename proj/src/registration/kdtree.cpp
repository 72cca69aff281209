#include "cranio/registration/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace cranio {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({begin, end, kNone, kNone, -1, 0.0});
    if (end - begin <= kLeafSize) return id;

    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
    int axis = 0;
    (box.max - box.min).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    return id;
}

KdTree::Hit KdTree::nearest(const Vec3& query, double max_distance_sq) const {
    Hit best;
    best.distance_sq = max_distance_sq;
    if (!nodes_.empty()) search(0, query, best);
    if (best.index == kNone) best.distance_sq = std::numeric_limits<double>::infinity();
    return best;
}

void KdTree::search(std::uint32_t node_id, const Vec3& q, Hit& best) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = order_[i];
            const double d = (points_[idx] - q).squaredNorm();
            if (d < best.distance_sq || (d == best.distance_sq && idx < best.index)) {
                best.distance_sq = d;
                best.index = idx;
            }
        }
        return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t near = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far = diff < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff <= best.distance_sq) search(far, q, best);
}

}  // namespace cranio
