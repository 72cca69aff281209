#include "cranio/geometry/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cranio/common/error.hpp"
#include "cranio/voxelgrid/marching_cubes.hpp"
#include "cranio/voxelgrid/sparse_grid.hpp"

namespace cranio {

Vec3 SeededRandom::unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

RigidTransform SeededRandom::rigid(double max_angle_rad, double max_translation) {
    const Vec3 axis = unit_vector();
    const double angle = uniform(0.0, max_angle_rad);
    const Vec3 dir = unit_vector();
    const double len = uniform(0.0, max_translation);
    return RigidTransform::from_axis_angle(axis, angle, dir * len);
}

namespace {

// First-order distance estimate to an axis-aligned ellipsoid, negative inside.
double ellipsoid_distance(const Vec3& p, const Vec3& r) {
    const double k0 = p.cwiseQuotient(r).norm();
    const double k1 = p.cwiseQuotient(r.cwiseProduct(r)).norm();
    if (k1 < 1e-12) return -r.minCoeff();
    return k0 * (k0 - 1.0) / k1;
}

struct ShellField {
    Vec3 outer;
    Vec3 inner;
    double cut;
    double operator()(const Vec3& p) const {
        return std::max({ellipsoid_distance(p, outer), -ellipsoid_distance(p, inner), cut - p.z()});
    }
};

enum class Part { Intact, Target, Defect };

TriMesh mesh_field(const ShellField& shell, const RoiSphere* defect, Part part, double h) {
    const double band = 2.0 * h;
    SparseGrid grid(GridKind::Sdf, Lattice{h, Vec3::Zero()}, band);
    const Vec3 lo(-shell.outer.x() - band, -shell.outer.y() - band, shell.cut - band);
    const Vec3 hi = shell.outer + Vec3::Constant(band);
    const Coord c0{static_cast<int>(std::floor(lo.x() / h)), static_cast<int>(std::floor(lo.y() / h)),
                   static_cast<int>(std::floor(lo.z() / h))};
    const Coord c1{static_cast<int>(std::ceil(hi.x() / h)), static_cast<int>(std::ceil(hi.y() / h)),
                   static_cast<int>(std::ceil(hi.z() / h))};
    for (int k = c0[2]; k <= c1[2]; ++k) {
        for (int j = c0[1]; j <= c1[1]; ++j) {
            for (int i = c0[0]; i <= c1[0]; ++i) {
                const Vec3 p = grid.lattice().center({i, j, k});
                double f = shell(p);
                if (part != Part::Intact) {
                    const double ball = (p - defect->center).norm() - defect->radius;
                    f = part == Part::Target ? std::max(f, -ball) : std::max(f, ball);
                }
                if (f < band) grid.set({i, j, k}, static_cast<float>(std::max(f, -band)));
            }
        }
    }
    return extract_mesh(grid, 0.0);
}

void check_params(const SyntheticParams& p) {
    for (int a = 0; a < 3; ++a) {
        if (!(p.inner_radii[a] > 0.0) || !(p.inner_radii[a] < p.outer_radii[a]))
            throw Error(errc::kInvalidArgument, "synthetic shell: inner radius must be positive and below outer radius");
    }
    if (!(p.mesh_resolution > 0.0)) throw Error(errc::kInvalidArgument, "synthetic shell: mesh_resolution must be > 0");
    if (!(p.defect_radius > 0.0)) throw Error(errc::kInvalidArgument, "synthetic shell: defect_radius must be > 0");
    if (p.defect_direction.norm() == 0.0)
        throw Error(errc::kInvalidArgument, "synthetic shell: defect_direction must be nonzero");
}

Vec3 mid_wall_point(const SyntheticParams& p) {
    const Vec3 u = p.defect_direction.normalized();
    const double t_outer = 1.0 / u.cwiseQuotient(p.outer_radii).norm();
    const double t_inner = 1.0 / u.cwiseQuotient(p.inner_radii).norm();
    return u * (0.5 * (t_outer + t_inner));
}

}  // namespace

TriMesh make_shell(const SyntheticParams& params, const Vec3& radius_scale) {
    check_params(params);
    const ShellField shell{params.outer_radii.cwiseProduct(radius_scale), params.inner_radii.cwiseProduct(radius_scale),
                           params.cut_height};
    return with_normals(mesh_field(shell, nullptr, Part::Intact, params.mesh_resolution));
}

SyntheticCase make_synthetic_case(const SyntheticParams& params) {
    check_params(params);
    SyntheticCase out;
    out.defect = RoiSphere{mid_wall_point(params), params.defect_radius};
    out.roi = RoiSphere{out.defect.center, params.defect_radius + params.roi_margin};

    const ShellField shell{params.outer_radii, params.inner_radii, params.cut_height};
    const double h = params.mesh_resolution;
    out.intact = with_normals(mesh_field(shell, nullptr, Part::Intact, h));
    out.target = with_normals(mesh_field(shell, &out.defect, Part::Target, h));
    out.ground_truth_implant = with_normals(mesh_field(shell, &out.defect, Part::Defect, h));

    SeededRandom rng(params.seed);
    const double max_angle = params.max_rotation_deg * std::numbers::pi / 180.0;
    for (std::size_t t = 0; t < params.template_count; ++t) {
        Vec3 scale;
        for (int a = 0; a < 3; ++a) scale[a] = 1.0 + rng.uniform(-1.0, 1.0) * params.radius_jitter;
        const RigidTransform pose = rng.rigid(max_angle, params.max_translation);
        const bool unscaled = scale == Vec3::Ones();
        TriMesh shape = unscaled ? out.intact : make_shell(params, scale);
        out.templates.push_back(transform_mesh(shape, pose));
        out.template_poses.push_back(pose);
        out.template_scales.push_back(scale);
    }
    return out;
}

}  // namespace cranio
