#pragma once

#include <Eigen/Core>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// Proper rigid motion x -> R x + t.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation = Vec3::Zero());
    /// Rotation vector (axis * angle) via Rodrigues' formula.
    static RigidTransform from_rotation_vector(const Vec3& omega, const Vec3& translation = Vec3::Zero());
    static RigidTransform translate(const Vec3& t) { return {Eigen::Matrix3d::Identity(), t}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 apply_direction(const Vec3& d) const { return rotation * d; }

    /// (this * other)(x) == this(other(x))
    RigidTransform operator*(const RigidTransform& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }
    RigidTransform inverse() const {
        const Eigen::Matrix3d rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    /// Rotation angle in radians.
    double angle() const;
    bool is_proper(double tol = 1e-9) const;
};

/// Projects an arbitrary 3x3 onto the nearest proper rotation (SVD, det +1).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

TriMesh transform_mesh(const TriMesh& mesh, const RigidTransform& t);

}  // namespace cranio
