#pragma once

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// Closest point to p on triangle (a, b, c), including degenerate triangles.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

inline double point_triangle_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    return (closest_point_on_triangle(p, a, b, c) - p).squaredNorm();
}

}  // namespace cranio
