#pragma once

#include <functional>
#include <optional>

#include "cranio/geometry/mesh.hpp"
#include "cranio/geometry/rigid_transform.hpp"
#include "cranio/geometry/roi.hpp"
#include "cranio/registration/rigid_estimation.hpp"

namespace cranio {

struct IcpSettings {
    IcpObjective objective = IcpObjective::Symmetric;
    int max_iterations = 50;
    double mse_threshold = 1e-4;        // mm^2
    double mse_delta_threshold = 1e-7;  // mm^2
    double max_correspondence_distance = 10.0;
    double normal_compat_min_cos = 0.5;
    /// Keep a pair only when each vertex is the other's nearest neighbour.
    bool reciprocal_correspondences = true;

    /// Throws invalid_argument naming the offending field.
    void validate() const;
    bool operator==(const IcpSettings&) const = default;
};

struct AlignmentResult {
    /// Maps the full moving mesh onto the fixed mesh.
    RigidTransform transform;
    /// Mean squared inlier correspondence distance at the final pose (mm^2).
    double fitness_mse = 0.0;
    int iterations = 0;
    bool converged = false;
    std::size_t inliers = 0;
};

/// Called after every iteration with the accumulated transform and the MSE
/// measured at that transform.
using IcpObserver = std::function<void(int iteration, const RigidTransform& transform, double mse)>;

/// Nearest-vertex ICP of moving onto fixed. With an ROI, both meshes are
/// clipped once at their input poses. Throws empty_geometry ("ROI excludes all geometry") when either
/// clipped mesh is empty at the start. A rank-deficient step ends the loop
/// unconverged. Without any inlier, fitness_mse is
/// max_correspondence_distance^2.
AlignmentResult icp_align(const TriMesh& moving, const TriMesh& fixed, const std::optional<RoiSphere>& roi,
                          const IcpSettings& settings, const IcpObserver& observer = {});

}  // namespace cranio
