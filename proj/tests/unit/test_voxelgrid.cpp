#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"

#include "cranio/geometry/rigid_transform.hpp"
#include "cranio/geometry/synthetic.hpp"
#include "cranio/voxelgrid/fusion.hpp"
#include "cranio/voxelgrid/grid_io.hpp"
#include "cranio/voxelgrid/marching_cubes.hpp"
#include "cranio/voxelgrid/operators.hpp"
#include "cranio/voxelgrid/sdf.hpp"
#include "cranio/voxelgrid/sparse_grid.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cranio;
using testutil::error_code;

namespace {

SparseGrid occupancy_of(const std::vector<Coord>& voxels, const Lattice& lattice = {}) {
    SparseGrid g(GridKind::Occupancy, lattice);
    for (const Coord& c : voxels) g.set(c, 1.0f);
    return g;
}

std::vector<Coord> cube_voxels(const Coord& lo, int n) {
    std::vector<Coord> out;
    oracle::Box{lo, {lo[0] + n - 1, lo[1] + n - 1, lo[2] + n - 1}}.for_each([&](const Coord& c) { out.push_back(c); });
    return out;
}

// Mean radius of the zero isosurface.
double iso_radius(const SparseGrid& sdf, const Vec3& c) {
    const TriMesh m = extract_mesh(sdf, 0.0);
    double sum = 0.0;
    for (const Vec3& v : m.vertices) sum += (v - c).norm();
    return sum / static_cast<double>(m.vertices.size());
}

double max_iso_deviation(const SparseGrid& sdf, const Vec3& c, double r) {
    double d = 0.0;
    for (const Vec3& v : extract_mesh(sdf, 0.0).vertices) d = std::max(d, std::abs((v - c).norm() - r));
    return d;
}

}  // namespace

TEST_CASE("sparse grid storage and background") {
    SparseGrid occ(GridKind::Occupancy, Lattice{0.5, Vec3::Zero()});
    CHECK(occ.get({100, -3, 7}) == 0.0f);
    occ.set({-1, -17, 40}, 1.0f);
    CHECK(occ.get({-1, -17, 40}) == 1.0f);
    CHECK(occ.active_count() == 1);
    CHECK(occ.active_voxels() == std::vector<Coord>{{-1, -17, 40}});

    SparseGrid sdf(GridKind::Sdf, Lattice{}, 1.5);
    CHECK(sdf.background() == 1.5f);
    CHECK(!sdf.is_active({0, 0, 0}));
    sdf.set({0, 0, 0}, -0.25f);
    CHECK(sdf.is_active({0, 0, 0}));
    sdf.set({0, 0, 0}, 1.5f);
    sdf.prune();
    CHECK(sdf.chunk_count() == 0);

    CHECK(error_code([] { SparseGrid(GridKind::Sdf, Lattice{}, 0.0); }) == errc::kInvalidArgument);
    CHECK(error_code([] { SparseGrid(GridKind::Occupancy, Lattice{0.0, Vec3::Zero()}); }) == errc::kInvalidArgument);
}

TEST_CASE("lattice nearest voxel") {
    const Lattice l{0.5, Vec3(0.1, 0.0, -0.2)};
    CHECK(l.nearest(Vec3(0.1, 0.0, -0.2)) == Coord{0, 0, 0});
    CHECK(l.nearest(Vec3(0.6, -0.51, 0.3)) == Coord{1, -1, 1});
    CHECK((l.center({2, -3, 4}) - Vec3(1.1, -1.5, 1.8)).norm() < 1e-12);
}

TEST_CASE("mesh_to_sdf of a sphere matches the analytic distance") {
    const Vec3 c(0.1, -0.2, 0.05);
    const TriMesh sphere = oracle::icosphere(10.0, 5, c);
    const double h = 0.5, band = 1.5;
    const SparseGrid sdf = mesh_to_sdf(sphere, Lattice{h, Vec3::Zero()}, band);
    CHECK(sdf.get(sdf.lattice().nearest(c)) == doctest::Approx(-band));
    double worst = 0.0;
    sdf.for_each_stored([&](const Coord& v, float value) {
        const double d = (sdf.lattice().center(v) - c).norm() - 10.0;
        if (std::abs(d) < band - 0.1) worst = std::max(worst, std::abs(value - d));
        CHECK(std::abs(value) <= band);
    });
    CHECK(worst <= 0.25);
}

TEST_CASE("mesh_to_sdf rejects open meshes and narrow bands") {
    TriMesh plane;
    plane.vertices = {{0, 0, 0}, {5, 0, 0}, {5, 5, 0}, {0, 5, 0}};
    plane.triangles = {{0, 1, 2}, {0, 2, 3}};
    CHECK(error_code([&] { mesh_to_sdf(plane, Lattice{0.5, Vec3::Zero()}, 1.0); }) == errc::kOpenMesh);
    CHECK(testutil::error_message([&] { mesh_to_occupancy(plane, Lattice{}); }).find("boundary edges") !=
          std::string::npos);
    const TriMesh s = oracle::icosphere(2.0, 1);
    CHECK(error_code([&] { mesh_to_sdf(s, Lattice{0.5, Vec3::Zero()}, 0.9); }) == errc::kInvalidArgument);
}

TEST_CASE("sdf_to_occupancy volume and disjoint union") {
    const TriMesh sphere = oracle::icosphere(10.0, 5);
    const Lattice lattice{1.0, Vec3::Zero()};
    const SparseGrid occ = sdf_to_occupancy(mesh_to_sdf(sphere, lattice, 2.0));
    const double expected = 4.0 / 3.0 * std::numbers::pi * 1000.0;
    CHECK(std::abs(static_cast<double>(occ.active_count()) - expected) <= 0.05 * expected);
    CHECK(mesh_to_occupancy(sphere, lattice) == occ);

    SparseGrid positive(GridKind::Sdf, lattice, 2.0);
    positive.set({0, 0, 0}, 1.0f);
    CHECK(sdf_to_occupancy(positive).active_count() == 0);

    const TriMesh far = transform_mesh(sphere, RigidTransform::translate(Vec3(40, 0, 0)));
    const TriMesh both = merge({sphere, far});
    CHECK(mesh_to_occupancy(both, lattice).active_count() ==
          mesh_to_occupancy(sphere, lattice).active_count() + mesh_to_occupancy(far, lattice).active_count());
}

TEST_CASE("labels_to_occupancy") {
    LabelVolume v;
    v.sizes = {2, 2, 2};
    v.spacing = Vec3::Constant(0.5);
    v.origin = Vec3(1, 2, 3);
    v.labels.assign(8, 1.0f);
    const SparseGrid g = labels_to_occupancy(v, 0.5);
    CHECK(g.active_count() == 8);
    CHECK(g.lattice().origin == v.origin);
    v.labels.assign(8, 0.0f);
    CHECK(labels_to_occupancy(v, 0.5).active_count() == 0);

    v.sizes = {4, 4, 4};
    v.labels.assign(64, 0.0f);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) v.labels[static_cast<std::size_t>(i + 4 * (j + 4 * k))] = (i + j + k) % 2;
    CHECK(labels_to_occupancy(v, 0.5).active_count() == 32);

    v.spacing = Vec3(0.5, 0.5, 0.7);
    CHECK(error_code([&] { labels_to_occupancy(v, 0.5); }) == errc::kUnsupported);
}

TEST_CASE("accumulate_ratio and threshold_extract examples") {
    const Coord v{1, 2, 3};
    const SparseGrid a = occupancy_of({v}), b = occupancy_of({v}), c = occupancy_of({{0, 0, 0}});
    const SparseGrid g = accumulate_ratio({a, b, c});
    CHECK(g.kind() == GridKind::Ratio);
    CHECK(g.get(v) == static_cast<float>(2.0 / 3.0));
    CHECK(g.get({0, 0, 0}) == static_cast<float>(1.0 / 3.0));
    CHECK(!threshold_extract(g, 2.0 / 3.0).is_active(v));
    CHECK(threshold_extract(g, 0.5).is_active(v));
    const SparseGrid t0 = threshold_extract(g, 0.0);
    CHECK(t0.active_count() == 2);

    const SparseGrid same = accumulate_ratio({a, a, a});
    CHECK(threshold_extract(same, 0.0) == a);
    CHECK(same.get(v) == 1.0f);

    SparseGrid other(GridKind::Occupancy, Lattice{1.0, Vec3::Zero()});
    CHECK(error_code([&] { accumulate_ratio({a, other}); }) == errc::kLatticeMismatch);
    CHECK(error_code([&] { accumulate_ratio({}); }) == errc::kInvalidArgument);
    CHECK(error_code([&] { threshold_extract(g, 1.0); }) == errc::kInvalidArgument);
}

TEST_CASE("fusion matches dense oracles and thresholds are monotone") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        SeededRandom rng(s);
        oracle::Box box{{0, 0, 0}, {7, 7, 7}};
        std::vector<SparseGrid> grids;
        for (int i = 0; i < 5; ++i) grids.push_back(oracle::random_occupancy(rng, box, 0.5));
        const SparseGrid g = accumulate_ratio(grids);
        const SparseGrid counts = accumulate_count(grids);
        std::size_t previous = std::numeric_limits<std::size_t>::max();
        for (double t : {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 0.99}) {
            const SparseGrid r = threshold_extract(g, t);
            CHECK(r.active_count() <= previous);
            previous = r.active_count();
        }
        const SparseGrid r = threshold_extract(g, 0.5);
        box.for_each([&](const Coord& c) {
            int k = 0;
            for (const auto& in : grids) k += in.is_active(c);
            CHECK(counts.get(c) == static_cast<float>(k));
            CHECK(g.get(c) == static_cast<float>(k / 5.0));
            CHECK(r.is_active(c) == (k / 5.0 > 0.5));
        });
    }
}

TEST_CASE("offset_surface") {
    const Vec3 c(0.05, 0.1, -0.15);
    const double h = 0.5;
    const SparseGrid sdf = oracle::sphere_sdf(Lattice{h, Vec3::Zero()}, c, 10.0, 2.5);
    CHECK(offset_surface(sdf, OffsetField{0.0, {}, 5.0}) == sdf);
    const SparseGrid grown = offset_surface(sdf, OffsetField{1.0, {}, 5.0});
    CHECK(std::abs(iso_radius(grown, c) - 11.0) <= h / 2);
    CHECK(max_iso_deviation(grown, c, 11.0) <= h / 2);

    OffsetField f{1.0, {RoiSphere{Vec3(3, 0, 0), 2.0}}, 5.0};
    CHECK(f.weight(Vec3(3, 0, 0)) == 0.0);
    CHECK(f.weight(Vec3(4.5, 0, 0)) == 0.0);
    CHECK(f.weight(Vec3(10, 0, 0)) == doctest::Approx(1.0));
    CHECK(f.weight(Vec3(7.5, 0, 0)) == doctest::Approx(0.5));
    CHECK(OffsetField{}.weight(Vec3(1, 2, 3)) == 1.0);

    CHECK(error_code([&] { offset_surface(sdf, OffsetField{2.5, {}, 5.0}); }) == errc::kInvalidArgument);
    CHECK(error_code([&] { offset_surface(sdf, OffsetField{-1.0, {}, 5.0}); }) == errc::kInvalidArgument);
    CHECK(error_code([&] { offset_surface(sdf, OffsetField{1.0, {}, 0.0}); }) == errc::kInvalidArgument);
}

TEST_CASE("subtract") {
    const Lattice l{0.5, Vec3::Zero()};
    const SparseGrid target = oracle::sphere_sdf(l, Vec3::Zero(), 5.0, 1.5);
    const SparseGrid inner = sdf_to_occupancy(oracle::sphere_sdf(l, Vec3::Zero(), 3.0, 1.5));
    CHECK(subtract(inner, target).active_count() == 0);
    const SparseGrid empty_target(GridKind::Sdf, l, 1.5);
    CHECK(subtract(inner, empty_target) == inner);

    const SparseGrid big = sdf_to_occupancy(oracle::sphere_sdf(l, Vec3(2, 0, 0), 5.0, 1.5));
    const SparseGrid cut = subtract(big, target);
    std::size_t overlap = 0;
    cut.for_each_stored([&](const Coord& c, float) { overlap += target.get(c) < 0.0f; });
    CHECK(overlap == 0);
    CHECK(cut.active_count() > 0);

    const SparseGrid shifted(GridKind::Sdf, Lattice{0.5, Vec3(0.1, 0, 0)}, 1.5);
    CHECK(error_code([&] { subtract(inner, shifted); }) == errc::kLatticeMismatch);
}

TEST_CASE("op_segment ordering and partition") {
    std::vector<Coord> voxels = cube_voxels({10, 10, 10}, 2);
    const auto big = cube_voxels({0, 0, 0}, 3);
    voxels.insert(voxels.end(), big.begin(), big.end());
    const auto parts = op_segment(occupancy_of(voxels));
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].active_count() == 27);
    CHECK(parts[1].active_count() == 8);

    const SparseGrid ball = sdf_to_occupancy(oracle::sphere_sdf(Lattice{}, Vec3::Zero(), 4.0, 2.0));
    CHECK(op_segment(ball).size() == 1);

    // Diagonal neighbours stay apart under 6-connectivity.
    CHECK(op_segment(occupancy_of({{0, 0, 0}, {1, 1, 0}})).size() == 2);
    // Equal sizes: the component holding the smaller voxel comes first.
    const auto tie = op_segment(occupancy_of({{5, 0, 0}, {0, 3, 0}}));
    REQUIRE(tie.size() == 2);
    CHECK(tie[0].is_active({0, 3, 0}));

    for (std::uint64_t s = 0; s < 20; ++s) {
        SeededRandom rng(100 + s);
        const oracle::Box box = oracle::random_box(rng, 16);
        const SparseGrid g = oracle::random_occupancy(rng, box, 0.35);
        const auto out = op_segment(g);
        std::set<Coord> seen;
        std::size_t total = 0, last = std::numeric_limits<std::size_t>::max();
        for (const auto& part : out) {
            const auto act = part.active_voxels();
            CHECK(act.size() <= last);
            last = act.size();
            total += act.size();
            seen.insert(act.begin(), act.end());
        }
        CHECK(total == seen.size());
        CHECK(std::vector<Coord>(seen.begin(), seen.end()) == g.active_voxels());
        const auto want = oracle::components(g.active_voxels());
        REQUIRE(want.size() == out.size());
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].active_voxels() == want[i]);
    }
}

TEST_CASE("op_filter") {
    const auto parts = op_segment(occupancy_of({{0, 0, 0}, {0, 0, 1}, {5, 5, 5}}));
    const auto first = op_filter(parts, 1);
    REQUIRE(first.size() == 1);
    CHECK(first[0].active_count() == 2);
    CHECK(op_filter(parts, 5).size() == parts.size());
    CHECK(op_filter(parts, 0).empty());
}

TEST_CASE("op_smooth") {
    const Lattice l{0.5, Vec3::Zero()};
    const SparseGrid sphere = oracle::sphere_sdf(l, Vec3::Zero(), 10.0, 2.0);
    CHECK(op_smooth(sphere, SmoothKind::Gaussian, 2, 0) == sphere);

    SparseGrid flat(GridKind::Sdf, l, 2.0);
    oracle::Box{{-4, -4, -4}, {4, 4, 4}}.for_each([&](const Coord& c) { flat.set(c, 1.0f); });
    flat.set({0, 0, 0}, -1.0f);
    const SparseGrid smoothed = op_smooth(flat, SmoothKind::Mean, 1, 1);
    CHECK(std::abs(smoothed.get({0, 0, 0}) - 1.0f) < 2.0f);
    CHECK(smoothed.get({0, 0, 0}) > -1.0f);

    for (SmoothKind k : {SmoothKind::Gaussian, SmoothKind::Mean, SmoothKind::Median}) {
        const SparseGrid s = op_smooth(sphere, k, 1, 2);
        CHECK(s.kind() == GridKind::Sdf);
        CHECK(max_iso_deviation(s, Vec3::Zero(), 10.0) <= 0.5);
        s.for_each_stored([&](const Coord&, float v) { CHECK(std::abs(v) <= 2.0f); });
    }

    const SparseGrid ball = sdf_to_occupancy(sphere);
    const SparseGrid smooth_ball = op_smooth(ball, SmoothKind::Gaussian, 1, 1);
    CHECK(smooth_ball.kind() == GridKind::Occupancy);
    const double a = static_cast<double>(ball.active_count());
    CHECK(std::abs(static_cast<double>(smooth_ball.active_count()) - a) < 0.05 * a);

    CHECK(error_code([&] { op_smooth(sphere, SmoothKind::Mean, 0, 1); }) == errc::kInvalidArgument);
    CHECK(smooth_kind_from_string("median") == SmoothKind::Median);
    CHECK(error_code([] { smooth_kind_from_string("bilateral"); }) == errc::kInvalidArgument);
}

TEST_CASE("operator chain and merge") {
    const Lattice l{1.0, Vec3::Zero()};
    std::vector<Coord> voxels = cube_voxels({0, 0, 0}, 3);
    voxels.push_back({10, 10, 10});
    const SparseGrid g = occupancy_of(voxels, l);
    const auto out = apply_operators({g}, {GridOperator::segment(), GridOperator::filter(1)});
    REQUIRE(out.size() == 1);
    CHECK(out[0].active_count() == 27);
    CHECK(apply_operators({g}, {}).front() == g);
    CHECK(merge_union(op_segment(g), l) == g);
    CHECK(merge_union({}, l).active_count() == 0);
}

TEST_CASE("marching cubes") {
    const Vec3 c(0.13, -0.21, 0.07);
    const SparseGrid sdf = oracle::sphere_sdf(Lattice{0.5, Vec3::Zero()}, c, 10.0, 1.5);
    const TriMesh m = extract_mesh(sdf, 0.0);
    CHECK(is_watertight(m));
    CHECK(signed_volume(m) > 0.0);
    CHECK(max_iso_deviation(sdf, c, 10.0) <= 0.5);

    SparseGrid positive(GridKind::Sdf, Lattice{}, 1.0);
    positive.set({0, 0, 0}, 0.5f);
    CHECK(extract_mesh(positive).empty());
    CHECK(extract_mesh(SparseGrid(GridKind::Occupancy, Lattice{})).empty());

    const double h = 0.5;
    SparseGrid single(GridKind::Occupancy, Lattice{h, Vec3::Zero()});
    single.set({3, -2, 1}, 1.0f);
    const TriMesh cube = extract_mesh(single);
    CHECK(is_watertight(cube));
    CHECK(cube.triangles.size() == 8);
    // Octahedron with vertices half a voxel from the centre.
    CHECK(signed_volume(cube) == doctest::Approx(h * h * h / 6.0).epsilon(1e-9));
    CHECK(error_code([&] { extract_mesh(sdf, 2.0); }) == errc::kInvalidArgument);
}

TEST_CASE("random occupancies mesh to closed outward surfaces") {
    for (std::uint64_t s = 0; s < 40; ++s) {
        SeededRandom rng(700 + s);
        const SparseGrid g = oracle::random_occupancy(rng, oracle::random_box(rng, 8), 0.5);
        const TriMesh m = extract_mesh(g);
        if (g.active_count() == 0) continue;
        CHECK(is_watertight(m));
        CHECK(signed_volume(m) > 0.0);
    }
}

TEST_CASE("sdf round trip through the isosurface") {
    const Lattice l{0.5, Vec3::Zero()};
    const SparseGrid source = oracle::sphere_sdf(l, Vec3(0.2, 0.1, 0.0), 6.0, 1.5);
    const auto src = sdf_to_occupancy(source).active_voxels();
    const auto back = mesh_to_occupancy(extract_mesh(source), l).active_voxels();
    CHECK(oracle::subset(back, oracle::dilate(src)));
    CHECK(oracle::subset(src, oracle::dilate(back)));
}

TEST_CASE("occupancy_to_sdf") {
    const Lattice l{1.0, Vec3::Zero()};
    const SparseGrid g = occupancy_of(cube_voxels({0, 0, 0}, 5), l);
    const SparseGrid sdf = occupancy_to_sdf(g, 3.0);
    CHECK(sdf_to_occupancy(sdf) == g);
    CHECK(sdf.get({2, 2, 2}) < sdf.get({0, 2, 2}));
    CHECK(sdf.get({-1, 2, 2}) == doctest::Approx(0.5));
}

TEST_CASE("grid files round trip bit-exactly") {
    testutil::TempDir dir("grid");
    SeededRandom rng(4);
    const oracle::Box box = oracle::random_box(rng, 16);
    for (const SparseGrid& g : {oracle::random_sdf(rng, box, 2.0, Lattice{0.5, Vec3(0.1, 0.2, 0.3)}),
                                accumulate_ratio({oracle::random_occupancy(rng, box, 0.4),
                                                  oracle::random_occupancy(rng, box, 0.6)})}) {
        const auto bytes = encode_grid(g);
        CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CIGD");
        CHECK(bytes.size() == 4 + 4 + 1 + 8 + 24 + 8 + 8 + g.chunk_count() * (12 + 4096 * 4));
        const SparseGrid back = decode_grid(bytes);
        CHECK(back == g);
        CHECK(encode_grid(back) == bytes);
        save_grid(g, dir / "g.cigd");
        CHECK(load_grid(dir / "g.cigd") == g);
    }
    auto bytes = encode_grid(oracle::random_sdf(rng, box, 2.0));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK(error_code([&] { decode_grid(bad); }) == errc::kMalformed);
    bad = bytes;
    bad[4] = 9;
    CHECK(error_code([&] { decode_grid(bad); }) == errc::kUnsupported);
    bytes.resize(bytes.size() - 10);
    CHECK(error_code([&] { decode_grid(bytes); }) == errc::kMalformed);
}
