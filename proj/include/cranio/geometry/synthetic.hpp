#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cranio/geometry/mesh.hpp"
#include "cranio/geometry/rigid_transform.hpp"
#include "cranio/geometry/roi.hpp"

namespace cranio {

/// Ellipsoidal dome shell standing in for a skull cap. The shell is the
/// region between two centred ellipsoids above the plane z = cut_height; the
/// defect is a ball centred half-way through the wall along defect_direction.
struct SyntheticParams {
    Vec3 outer_radii{50.0, 45.0, 40.0};
    Vec3 inner_radii{45.0, 40.0, 35.0};
    double cut_height = -5.0;
    Vec3 defect_direction{0.45, 0.2, 0.87};
    double defect_radius = 15.0;
    /// ROI radius = defect_radius + roi_margin.
    double roi_margin = 10.0;

    std::size_t template_count = 5;
    double max_rotation_deg = 3.0;
    double max_translation = 2.0;
    /// Per-axis relative radius scatter of the templates, uniform in +-jitter.
    double radius_jitter = 0.02;

    /// Lattice spacing used to mesh the implicit shells.
    double mesh_resolution = 1.0;
    std::uint64_t seed = 1;
};

struct SyntheticCase {
    TriMesh target;
    std::vector<TriMesh> templates;
    TriMesh ground_truth_implant;
    TriMesh intact;
    RoiSphere roi;
    RoiSphere defect;
    /// Pose applied to each template after jittering its radii.
    std::vector<RigidTransform> template_poses;
    std::vector<Vec3> template_scales;
};

/// Deterministic for fixed params. Throws invalid_argument when an inner
/// radius is not below the matching outer radius.
SyntheticCase make_synthetic_case(const SyntheticParams& params);

/// Just the intact shell, optionally with scaled radii.
TriMesh make_shell(const SyntheticParams& params, const Vec3& radius_scale = Vec3::Ones());

/// Portable seeded draws: std::mt19937_64 output is fixed by the standard,
/// the conversions to doubles below are too.
class SeededRandom {
public:
    explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
    /// [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    Vec3 unit_vector();
    /// Rotation about a random axis by an angle in [0, max_angle_rad] and a
    /// translation of length in [0, max_translation].
    RigidTransform rigid(double max_angle_rad, double max_translation);

private:
    std::mt19937_64 engine_;
};

}  // namespace cranio
