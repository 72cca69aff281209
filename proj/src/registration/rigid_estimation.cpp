#include "cranio/registration/rigid_estimation.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "cranio/common/error.hpp"

namespace cranio {

namespace {

// Relative eigenvalue floor below which a system counts as rank deficient.
constexpr double kRankTolerance = 1e-12;

[[noreturn]] void degenerate(const char* what) {
    throw Error(errc::kDegenerate, std::string("degenerate correspondences: ") + what);
}

RigidTransform point_to_point(const std::vector<Correspondence>& pairs) {
    const double n = static_cast<double>(pairs.size());
    Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
    for (const auto& c : pairs) {
        cs += c.source;
        ct += c.target;
    }
    cs /= n;
    ct /= n;
    Eigen::Matrix3d spread = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
    for (const auto& c : pairs) {
        const Vec3 a = c.source - cs, b = c.target - ct;
        spread += a * a.transpose();
        cross += b * a.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(spread);
    const Vec3 ev = eig.eigenvalues();  // ascending
    if (!(ev[2] > 0.0) || ev[1] <= kRankTolerance * ev[2]) degenerate("source points are collinear or coincident");

    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Eigen::Matrix3d r = svd.matrixU() * d * svd.matrixV().transpose();
    return {r, ct - r * cs};
}

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

Vec6 solve_normal_equations(const Mat6& ata, const Vec6& atb) {
    const Eigen::SelfAdjointEigenSolver<Mat6> eig(ata);
    const auto& ev = eig.eigenvalues();
    if (!(ev[5] > 0.0) || ev[0] <= kRankTolerance * ev[5]) degenerate("linear system is rank deficient");
    return eig.eigenvectors() * ((eig.eigenvectors().transpose() * atb).array() / ev.array()).matrix();
}

Vec3 centroid_of_pairs(const std::vector<Correspondence>& pairs) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : pairs) c += p.source + p.target;
    return c / (2.0 * static_cast<double>(pairs.size()));
}

RigidTransform point_to_plane(const std::vector<Correspondence>& pairs) {
    const Vec3 c = centroid_of_pairs(pairs);
    Mat6 ata = Mat6::Zero();
    Vec6 atb = Vec6::Zero();
    for (const auto& pr : pairs) {
        const Vec3 p = pr.source - c, q = pr.target - c;
        const Vec3& n = pr.target_normal;
        Vec6 row;
        row << p.cross(n), n;
        const double b = (p - q).dot(n);
        ata += row * row.transpose();
        atb -= row * b;
    }
    const Vec6 x = solve_normal_equations(ata, atb);
    const RigidTransform step = RigidTransform::from_rotation_vector(x.head<3>(), x.tail<3>());
    // x -> c + R (x - c) + t
    return RigidTransform::translate(c) * step * RigidTransform::translate(-c);
}

RigidTransform symmetric(const std::vector<Correspondence>& pairs) {
    const Vec3 c = centroid_of_pairs(pairs);
    Mat6 ata = Mat6::Zero();
    Vec6 atb = Vec6::Zero();
    for (const auto& pr : pairs) {
        const Vec3 p = pr.source - c, q = pr.target - c;
        const Vec3 np = pr.source_normal.squaredNorm() > 0.0 ? pr.source_normal : pr.target_normal;
        const Vec3 n = np + pr.target_normal;
        Vec6 row;
        row << (p + q).cross(n), n;
        const double b = (p - q).dot(n);
        ata += row * row.transpose();
        atb -= row * b;
    }
    const Vec6 x = solve_normal_equations(ata, atb);
    const Vec3 a = x.head<3>();
    const Vec3 t = x.tail<3>();
    const double len = a.norm();
    const double theta = std::atan(len);
    const RigidTransform half =
        len > 0.0 ? RigidTransform::from_axis_angle(a / len, theta) : RigidTransform::identity();
    // trans(c) rot trans(t cos theta) rot trans(-c)
    return RigidTransform::translate(c) * half * RigidTransform::translate(t * std::cos(theta)) * half *
           RigidTransform::translate(-c);
}

}  // namespace

const char* to_string(IcpObjective objective) {
    switch (objective) {
        case IcpObjective::PointToPoint: return "point_to_point";
        case IcpObjective::PointToPlane: return "point_to_plane";
        case IcpObjective::Symmetric: return "symmetric";
    }
    return "unknown";
}

IcpObjective icp_objective_from_string(const std::string& name) {
    if (name == "point_to_point") return IcpObjective::PointToPoint;
    if (name == "point_to_plane") return IcpObjective::PointToPlane;
    if (name == "symmetric") return IcpObjective::Symmetric;
    throw Error(errc::kInvalidArgument, "unknown ICP objective '" + name + "'");
}

RigidTransform estimate_rigid(const std::vector<Correspondence>& pairs, IcpObjective objective) {
    if (pairs.size() < 3) degenerate("fewer than 3 pairs");
    RigidTransform t;
    switch (objective) {
        case IcpObjective::PointToPoint: t = point_to_point(pairs); break;
        case IcpObjective::PointToPlane: t = point_to_plane(pairs); break;
        case IcpObjective::Symmetric: t = symmetric(pairs); break;
    }
    if (!t.rotation.allFinite() || !t.translation.allFinite()) degenerate("non-finite solution");
    return t;
}

}  // namespace cranio
