#include "cranio/voxelgrid/marching_cubes.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "cranio/common/error.hpp"
#include "cranio/voxelgrid/sdf.hpp"

namespace cranio {

namespace {

#include "mc_tables.inc"

// Corner offsets in table order.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Keeps interpolated vertices off lattice points so that distinct edges never
// produce coincident vertices.
constexpr double kEdgeClamp = 1e-4;

std::uint64_t edge_key(const Coord& lower, int axis) {
    constexpr std::uint64_t bias = 1u << 19;
    return ((static_cast<std::uint64_t>(lower[0]) + bias) & 0xFFFFF) |
           (((static_cast<std::uint64_t>(lower[1]) + bias) & 0xFFFFF) << 20) |
           (((static_cast<std::uint64_t>(lower[2]) + bias) & 0xFFFFF) << 40) | (static_cast<std::uint64_t>(axis) << 60);
}

}  // namespace

TriMesh extract_mesh(const SparseGrid& input, double iso) {
    SparseGrid pseudo;
    const SparseGrid* grid = &input;
    double sign = 1.0;  // sample = sign * (value - iso), inside when negative
    switch (input.kind()) {
        case GridKind::Sdf:
            if (!(std::abs(iso) < input.band()))
                throw Error(errc::kInvalidArgument, "iso value must lie strictly inside the SDF band");
            break;
        case GridKind::Occupancy:
            pseudo = occupancy_pseudo_sdf(input);
            grid = &pseudo;
            break;
        case GridKind::Count:
        case GridKind::Ratio: sign = -1.0; break;
    }

    std::set<Coord> candidates;
    for (const auto& [key, chunk] : grid->chunks())
        for (int d = 0; d < 8; ++d) candidates.insert({key[0] - (d & 1), key[1] - ((d >> 1) & 1), key[2] - ((d >> 2) & 1)});

    const Lattice& lattice = grid->lattice();
    TriMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    GridReader reader(*grid);
    constexpr int kN = SparseGrid::kChunkDim + 1;
    std::vector<double> block(kN * kN * kN);
    auto at = [&](int i, int j, int k) -> double& { return block[static_cast<std::size_t>(i + kN * (j + kN * k))]; };

    for (const auto& key : candidates) {
        const Coord base{key[0] * SparseGrid::kChunkDim, key[1] * SparseGrid::kChunkDim, key[2] * SparseGrid::kChunkDim};
        bool any_in = false, any_out = false;
        for (int k = 0; k < kN; ++k)
            for (int j = 0; j < kN; ++j)
                for (int i = 0; i < kN; ++i) {
                    const double s = sign * (reader.get({base[0] + i, base[1] + j, base[2] + k}) - iso);
                    at(i, j, k) = s;
                    (s < 0.0 ? any_in : any_out) = true;
                }
        if (!any_in || !any_out) continue;

        for (int k = 0; k < SparseGrid::kChunkDim; ++k)
            for (int j = 0; j < SparseGrid::kChunkDim; ++j)
                for (int i = 0; i < SparseGrid::kChunkDim; ++i) {
                    double s[8];
                    int cube = 0;
                    for (int c = 0; c < 8; ++c) {
                        s[c] = at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
                        if (s[c] < 0.0) cube |= 1 << c;
                    }
                    const int mask = kEdgeTable[cube];
                    if (mask == 0) continue;
                    std::uint32_t vid[12];
                    for (int e = 0; e < 12; ++e) {
                        if (!(mask & (1 << e))) continue;
                        int a = kEdgeCorners[e][0], b = kEdgeCorners[e][1];
                        // Lower lattice endpoint first so the key and the
                        // interpolation are the same from every cell.
                        if (kCorner[b][0] + kCorner[b][1] + kCorner[b][2] < kCorner[a][0] + kCorner[a][1] + kCorner[a][2])
                            std::swap(a, b);
                        const Coord ca{base[0] + i + kCorner[a][0], base[1] + j + kCorner[a][1], base[2] + k + kCorner[a][2]};
                        int axis = 0;
                        while (kCorner[a][axis] == kCorner[b][axis]) ++axis;
                        const auto ekey = edge_key(ca, axis);
                        auto [it, inserted] = edge_vertex.emplace(ekey, static_cast<std::uint32_t>(mesh.vertices.size()));
                        if (inserted) {
                            const double t = std::clamp(s[a] / (s[a] - s[b]), kEdgeClamp, 1.0 - kEdgeClamp);
                            Vec3 p = lattice.center(ca);
                            p[axis] += t * lattice.voxel_size;
                            mesh.vertices.push_back(p);
                        }
                        vid[e] = it->second;
                    }
                    for (int t = 0; kTriTable[cube][t] != -1; t += 3)
                        mesh.triangles.push_back({vid[kTriTable[cube][t]], vid[kTriTable[cube][t + 2]],
                                                  vid[kTriTable[cube][t + 1]]});
                }
    }
    return mesh;
}

}  // namespace cranio
