#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// Static 3D kd-tree over a point set. Immutable after construction, so
/// concurrent queries are safe.
class KdTree {
public:
    static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

    KdTree() = default;
    explicit KdTree(std::vector<Vec3> points);

    struct Hit {
        std::uint32_t index = kNone;
        double distance_sq = std::numeric_limits<double>::infinity();
        bool found() const { return index != kNone; }
    };

    /// Nearest point with squared distance <= max_distance_sq; equal
    /// distances resolve to the lower index.
    Hit nearest(const Vec3& query, double max_distance_sq = std::numeric_limits<double>::infinity()) const;

    const std::vector<Vec3>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin, end;  // range in order_ for leaves
        std::uint32_t left, right;
        int axis;  // -1 for leaves
        double split;
    };
    std::uint32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::uint32_t node, const Vec3& q, Hit& best) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace cranio
