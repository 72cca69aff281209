#include "cranio/geometry/rigid_transform.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace cranio {

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation) {
    return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), translation};
}

RigidTransform RigidTransform::from_rotation_vector(const Vec3& omega, const Vec3& translation) {
    const double angle = omega.norm();
    if (angle == 0.0) return translate(translation);
    return from_axis_angle(omega / angle, angle, translation);
}

double RigidTransform::angle() const {
    const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

bool RigidTransform::is_proper(double tol) const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

TriMesh transform_mesh(const TriMesh& mesh, const RigidTransform& t) {
    TriMesh out;
    out.triangles = mesh.triangles;
    out.vertices.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices) out.vertices.push_back(t.apply(v));
    out.normals.reserve(mesh.normals.size());
    for (const auto& n : mesh.normals) out.normals.push_back(t.apply_direction(n));
    return out;
}

}  // namespace cranio
