#pragma once

#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// Crossings of axis-parallel rays (direction +x) with a closed triangle mesh.
///
/// Points landing exactly on a projected edge or vertex are assigned to a
/// single triangle by a half-open rule evaluated on canonically ordered edges,
/// so shared edges are never counted twice or missed. The mesh is copied, the
/// index is immutable after construction and safe for concurrent queries.
class RayParityIndex {
public:
    RayParityIndex(const TriMesh& mesh, double cell_size);

    /// Sorted x coordinates where the line {(t, y, z)} pierces the surface.
    void crossings(double y, double z, std::vector<double>& out) const;

    /// Odd number of crossings beyond p.x.
    bool inside(const Vec3& p) const;

private:
    struct Projected {
        double y[3];
        double z[3];
        double x[3];
    };

    std::vector<Projected> triangles_;
    std::vector<std::vector<std::uint32_t>> bins_;
    double cell_ = 1.0;
    double y0_ = 0.0, z0_ = 0.0;
    long ny_ = 0, nz_ = 0;
};

}  // namespace cranio
