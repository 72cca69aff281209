#include "cranio/voxelgrid/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cranio/common/error.hpp"
#include "cranio/geometry/ray_parity.hpp"
#include "cranio/geometry/triangle_distance.hpp"

namespace cranio {

namespace {

// Dense working block over an inclusive voxel box.
template <class T>
struct Block {
    Coord lo{};
    std::array<std::int64_t, 3> dim{0, 0, 0};
    std::vector<T> data;

    Block(const Coord& lo_, const Coord& hi, T fill) : lo(lo_) {
        for (int a = 0; a < 3; ++a) dim[a] = std::max<std::int64_t>(0, std::int64_t{hi[a]} - lo[a] + 1);
        data.assign(static_cast<std::size_t>(dim[0] * dim[1] * dim[2]), fill);
    }
    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i + dim[0] * (j + dim[1] * k));
    }
    bool contains(const Coord& c) const {
        for (int a = 0; a < 3; ++a)
            if (c[a] < lo[a] || c[a] >= lo[a] + dim[a]) return false;
        return true;
    }
    T& at(const Coord& c) { return data[index(c[0] - lo[0], c[1] - lo[1], c[2] - lo[2])]; }
    Coord coord(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return {static_cast<std::int32_t>(lo[0] + i), static_cast<std::int32_t>(lo[1] + j),
                static_cast<std::int32_t>(lo[2] + k)};
    }
};

void require_closed(const TriMesh& mesh) {
    const auto open = boundary_edge_count(mesh);
    if (open > 0)
        throw Error(errc::kOpenMesh, "open mesh: " + std::to_string(open) +
                                         " boundary edges make the inside/outside sign ambiguous");
}

std::pair<Coord, Coord> index_range(const Aabb& box, const Lattice& lattice, double pad) {
    Coord lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = static_cast<std::int32_t>(std::floor((box.min[a] - pad - lattice.origin[a]) / lattice.voxel_size));
        hi[a] = static_cast<std::int32_t>(std::ceil((box.max[a] + pad - lattice.origin[a]) / lattice.voxel_size));
    }
    return {lo, hi};
}

// Parity fill of `block`: marks voxel centres inside the mesh.
void parity_fill(const TriMesh& mesh, const Lattice& lattice, Block<std::uint8_t>& block) {
    const RayParityIndex rays(mesh, lattice.voxel_size);
    std::vector<double> xs;
    for (std::int64_t k = 0; k < block.dim[2]; ++k) {
        for (std::int64_t j = 0; j < block.dim[1]; ++j) {
            const Vec3 row = lattice.center(block.coord(0, j, k));
            rays.crossings(row.y(), row.z(), xs);
            if (xs.size() % 2 != 0)
                throw Error(errc::kOpenMesh, "open mesh: ray at y=" + std::to_string(row.y()) + " z=" +
                                                 std::to_string(row.z()) + " crosses the surface an odd number of times");
            std::size_t next = 0;
            bool inside = false;
            for (std::int64_t i = 0; i < block.dim[0]; ++i) {
                const double x = row.x() + static_cast<double>(i) * lattice.voxel_size;
                while (next < xs.size() && xs[next] < x) {
                    inside = !inside;
                    ++next;
                }
                block.data[block.index(i, j, k)] = inside;
            }
        }
    }
}

}  // namespace

SparseGrid mesh_to_sdf(const TriMesh& mesh, const Lattice& lattice, double band) {
    const double h = lattice.voxel_size;
    if (!(h > 0.0)) throw Error(errc::kInvalidArgument, "voxel size must be positive");
    if (band < 2.0 * h) throw Error(errc::kInvalidArgument, "band width must be at least two voxels");
    SparseGrid grid(GridKind::Sdf, lattice, band);
    if (mesh.triangles.empty()) return grid;
    require_closed(mesh);

    const auto [lo, hi] = index_range(bounds(mesh), lattice, band);
    Block<std::uint8_t> inside(lo, hi, 0);
    parity_fill(mesh, lattice, inside);

    const float inf = std::numeric_limits<float>::infinity();
    Block<float> dist2(lo, hi, inf);
    const double band2 = band * band;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        Aabb box;
        box.extend(a);
        box.extend(b);
        box.extend(c);
        auto [tlo, thi] = index_range(box, lattice, band);
        for (int ax = 0; ax < 3; ++ax) {
            tlo[ax] = std::max(tlo[ax], lo[ax]);
            thi[ax] = std::min(thi[ax], hi[ax]);
        }
        Vec3 n = (b - a).cross(c - a);
        const double nlen = n.norm();
        const bool planar = nlen > 0.0;
        if (planar) n /= nlen;
        for (std::int32_t k = tlo[2]; k <= thi[2]; ++k)
            for (std::int32_t j = tlo[1]; j <= thi[1]; ++j)
                for (std::int32_t i = tlo[0]; i <= thi[0]; ++i) {
                    const Coord v{i, j, k};
                    const Vec3 p = lattice.center(v);
                    if (planar) {
                        const double plane = (p - a).dot(n);
                        if (plane * plane > band2) continue;
                    }
                    const double d2 = point_triangle_distance_sq(p, a, b, c);
                    float& slot = dist2.at(v);
                    if (d2 < slot) slot = static_cast<float>(d2);
                }
    }

    const float fband = static_cast<float>(band);
    for (std::int64_t k = 0; k < inside.dim[2]; ++k)
        for (std::int64_t j = 0; j < inside.dim[1]; ++j)
            for (std::int64_t i = 0; i < inside.dim[0]; ++i) {
                const auto idx = inside.index(i, j, k);
                const float d = std::min(std::sqrt(dist2.data[idx]), fband);
                if (inside.data[idx]) grid.set(inside.coord(i, j, k), -std::max(d, std::numeric_limits<float>::min()));
                else if (d < fband) grid.set(inside.coord(i, j, k), d);
            }
    return grid;
}

SparseGrid mesh_to_occupancy(const TriMesh& mesh, const Lattice& lattice) {
    SparseGrid grid(GridKind::Occupancy, lattice);
    if (mesh.triangles.empty()) return grid;
    require_closed(mesh);
    const auto [lo, hi] = index_range(bounds(mesh), lattice, 0.0);
    Block<std::uint8_t> inside(lo, hi, 0);
    parity_fill(mesh, lattice, inside);
    for (std::int64_t k = 0; k < inside.dim[2]; ++k)
        for (std::int64_t j = 0; j < inside.dim[1]; ++j)
            for (std::int64_t i = 0; i < inside.dim[0]; ++i)
                if (inside.data[inside.index(i, j, k)]) grid.set(inside.coord(i, j, k), 1.0f);
    return grid;
}

SparseGrid sdf_to_occupancy(const SparseGrid& sdf) {
    if (sdf.kind() != GridKind::Sdf) throw Error(errc::kInvalidArgument, "sdf_to_occupancy expects an SDF grid");
    SparseGrid out(GridKind::Occupancy, sdf.lattice());
    sdf.for_each_stored([&](const Coord& c, float v) {
        if (v < 0.0f) out.set(c, 1.0f);
    });
    return out;
}

SparseGrid labels_to_occupancy(const LabelVolume& volume, double voxel_size) {
    for (int a = 0; a < 3; ++a) {
        if (std::abs(volume.spacing[a] - voxel_size) > 1e-6)
            throw Error(errc::kUnsupported, "unsupported anisotropic spacing: axis " + std::to_string(a) + " is " +
                                                std::to_string(volume.spacing[a]) + " mm, lattice is " +
                                                std::to_string(voxel_size) + " mm");
    }
    SparseGrid grid(GridKind::Occupancy, Lattice{voxel_size, volume.origin});
    for (std::int64_t k = 0; k < volume.sizes[2]; ++k)
        for (std::int64_t j = 0; j < volume.sizes[1]; ++j)
            for (std::int64_t i = 0; i < volume.sizes[0]; ++i)
                if (volume.at(i, j, k) > 0.0f)
                    grid.set({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), static_cast<std::int32_t>(k)}, 1.0f);
    return grid;
}

SparseGrid occupancy_pseudo_sdf(const SparseGrid& occupancy) {
    const double half = 0.5 * occupancy.voxel_size();
    SparseGrid out(GridKind::Sdf, occupancy.lattice(), half);
    occupancy.for_each_stored([&](const Coord& c, float v) {
        if (v != 0.0f) out.set(c, static_cast<float>(-half));
    });
    return out;
}

SparseGrid occupancy_to_sdf(const SparseGrid& occupancy, double band) {
    const double h = occupancy.voxel_size();
    SparseGrid out(GridKind::Sdf, occupancy.lattice(), band);
    const VoxelBounds vb = stored_bounds(occupancy);
    if (vb.empty()) return out;

    const int reach = static_cast<int>(std::ceil(band / h)) + 1;
    Coord lo = vb.min, hi = vb.max;
    for (int a = 0; a < 3; ++a) {
        lo[a] -= reach;
        hi[a] += reach;
    }
    Block<std::uint8_t> state(lo, hi, 0);
    occupancy.for_each_stored([&](const Coord& c, float v) {
        if (v != 0.0f) state.at(c) = 1;
    });

    // Nearest voxel of opposite state is always a face-boundary voxel, so
    // scattering from boundary voxels over the reach window is exact there.
    std::vector<std::array<int, 4>> offsets;
    for (int dz = -reach; dz <= reach; ++dz)
        for (int dy = -reach; dy <= reach; ++dy)
            for (int dx = -reach; dx <= reach; ++dx) {
                const int r2 = dx * dx + dy * dy + dz * dz;
                if (r2 > 0 && r2 <= reach * reach) offsets.push_back({dx, dy, dz, r2});
            }
    const int inf = std::numeric_limits<int>::max();
    Block<int> best(lo, hi, inf);
    static const int kFace[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (std::int64_t k = 1; k + 1 < state.dim[2]; ++k)
        for (std::int64_t j = 1; j + 1 < state.dim[1]; ++j)
            for (std::int64_t i = 1; i + 1 < state.dim[0]; ++i) {
                const auto s = state.data[state.index(i, j, k)];
                bool boundary = false;
                for (const auto& f : kFace)
                    if (state.data[state.index(i + f[0], j + f[1], k + f[2])] != s) boundary = true;
                if (!boundary) continue;
                for (const auto& o : offsets) {
                    const std::int64_t ui = i + o[0], uj = j + o[1], uk = k + o[2];
                    if (ui < 0 || uj < 0 || uk < 0 || ui >= state.dim[0] || uj >= state.dim[1] || uk >= state.dim[2])
                        continue;
                    const auto idx = state.index(ui, uj, uk);
                    if (state.data[idx] != s && o[3] < best.data[idx]) best.data[idx] = o[3];
                }
            }
    const float fband = static_cast<float>(band);
    for (std::int64_t k = 0; k < state.dim[2]; ++k)
        for (std::int64_t j = 0; j < state.dim[1]; ++j)
            for (std::int64_t i = 0; i < state.dim[0]; ++i) {
                const auto idx = state.index(i, j, k);
                const int r2 = best.data[idx];
                const float d = r2 == inf ? fband
                                          : std::min(fband, static_cast<float>(std::sqrt(double(r2)) * h - 0.5 * h));
                if (state.data[idx]) out.set(state.coord(i, j, k), -d);
                else if (d < fband) out.set(state.coord(i, j, k), d);
            }
    return out;
}

}  // namespace cranio
