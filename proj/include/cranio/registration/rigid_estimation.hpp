#pragma once

#include <string>
#include <vector>

#include "cranio/geometry/rigid_transform.hpp"

namespace cranio {

enum class IcpObjective { PointToPoint, PointToPlane, Symmetric };

const char* to_string(IcpObjective objective);
IcpObjective icp_objective_from_string(const std::string& name);

/// One source/target pair. Normals are unit length; source_normal is only
/// read by the Symmetric objective and falls back to target_normal when zero.
struct Correspondence {
    Vec3 source;
    Vec3 target;
    Vec3 target_normal = Vec3::Zero();
    Vec3 source_normal = Vec3::Zero();
};

/// Least-squares rigid step mapping sources onto targets.
///
/// PointToPoint is the closed-form SVD fit with reflection correction.
/// PointToPlane linearizes the rotation and re-projects it with Rodrigues'
/// formula. Symmetric minimizes ((p - q) . (n_p + n_q))^2 with half of the
/// rotation applied to each side, then folds both halves into one transform.
/// Throws degenerate_correspondences when the system is rank deficient.
RigidTransform estimate_rigid(const std::vector<Correspondence>& pairs, IcpObjective objective);

}  // namespace cranio
