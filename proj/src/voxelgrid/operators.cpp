#include "cranio/voxelgrid/operators.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>

#include "cranio/common/error.hpp"
#include "cranio/voxelgrid/sdf.hpp"

namespace cranio {

const char* to_string(SmoothKind kind) {
    switch (kind) {
        case SmoothKind::Gaussian: return "gaussian";
        case SmoothKind::Mean: return "mean";
        case SmoothKind::Median: return "median";
    }
    return "unknown";
}

SmoothKind smooth_kind_from_string(const std::string& name) {
    if (name == "gaussian") return SmoothKind::Gaussian;
    if (name == "mean") return SmoothKind::Mean;
    if (name == "median") return SmoothKind::Median;
    throw Error(errc::kInvalidArgument, "unknown smoothing kind '" + name + "'");
}

namespace {

std::uint64_t pack(const Coord& c) {
    constexpr std::uint64_t bias = 1u << 20;
    return ((static_cast<std::uint64_t>(c[0]) + bias) & 0x1FFFFF) |
           (((static_cast<std::uint64_t>(c[1]) + bias) & 0x1FFFFF) << 21) |
           (((static_cast<std::uint64_t>(c[2]) + bias) & 0x1FFFFF) << 42);
}

}  // namespace

std::vector<SparseGrid> op_segment(const SparseGrid& grid) {
    const auto voxels = grid.active_voxels();
    std::unordered_map<std::uint64_t, bool> visited;
    visited.reserve(voxels.size() * 2);
    for (const auto& v : voxels) visited.emplace(pack(v), false);

    static const int kFace[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::vector<std::vector<Coord>> components;
    std::deque<Coord> queue;
    for (const auto& seed : voxels) {
        auto& seen = visited[pack(seed)];
        if (seen) continue;
        seen = true;
        std::vector<Coord> members;
        queue.push_back(seed);
        while (!queue.empty()) {
            const Coord c = queue.front();
            queue.pop_front();
            members.push_back(c);
            for (const auto& f : kFace) {
                const Coord n{c[0] + f[0], c[1] + f[1], c[2] + f[2]};
                auto it = visited.find(pack(n));
                if (it == visited.end() || it->second) continue;
                it->second = true;
                queue.push_back(n);
            }
        }
        components.push_back(std::move(members));
    }
    // Seeds are visited in ascending voxel order, so each component's seed is
    // its smallest voxel and a stable sort by size keeps the tie rule.
    std::stable_sort(components.begin(), components.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });

    std::vector<SparseGrid> out;
    out.reserve(components.size());
    for (const auto& members : components) {
        SparseGrid g(GridKind::Occupancy, grid.lattice());
        for (const auto& c : members) g.set(c, 1.0f);
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<SparseGrid> op_filter(const std::vector<SparseGrid>& grids, std::size_t first_n) {
    const auto n = std::min(first_n, grids.size());
    return {grids.begin(), grids.begin() + static_cast<std::ptrdiff_t>(n)};
}

namespace {

SparseGrid smooth_axis(const SparseGrid& g, int axis, const std::vector<double>& weights, SmoothKind kind, int width) {
    SparseGrid out(GridKind::Sdf, g.lattice(), g.band());
    const float band = static_cast<float>(g.band());
    const int chunk_reach = (width + SparseGrid::kChunkDim - 1) / SparseGrid::kChunkDim;
    std::set<Coord> keys;
    for (const auto& [key, chunk] : g.chunks()) {
        for (int d = -chunk_reach; d <= chunk_reach; ++d) {
            Coord k = key;
            k[axis] += d;
            keys.insert(k);
        }
    }
    GridReader reader(g);
    std::vector<float> window(static_cast<std::size_t>(2 * width + 1));
    for (const auto& key : keys) {
        for (int local = 0; local < SparseGrid::kChunkVoxels; ++local) {
            const Coord c = SparseGrid::voxel_of(key, local);
            for (int t = -width; t <= width; ++t) {
                Coord n = c;
                n[axis] += t;
                window[static_cast<std::size_t>(t + width)] = reader.get(n);
            }
            float value;
            if (kind == SmoothKind::Median) {
                auto mid = window.begin() + width;
                std::nth_element(window.begin(), mid, window.end());
                value = *mid;
            } else {
                double acc = 0.0;
                for (std::size_t t = 0; t < window.size(); ++t) acc += weights[t] * window[t];
                value = static_cast<float>(acc);
            }
            value = std::clamp(value, -band, band);
            if (value < band) out.set(c, value);
        }
    }
    out.prune();
    return out;
}

}  // namespace

SparseGrid op_smooth(const SparseGrid& grid, SmoothKind kind, int width_voxels, int iterations) {
    if (width_voxels < 1) throw Error(errc::kInvalidArgument, "smoothing width must be at least 1 voxel");
    if (iterations < 0) throw Error(errc::kInvalidArgument, "smoothing iterations must be >= 0");
    if (iterations == 0) return grid;
    if (grid.kind() != GridKind::Sdf) {
        const double band = std::max(3, width_voxels + 2) * grid.voxel_size();
        SparseGrid smoothed = op_smooth(occupancy_to_sdf(grid, band), kind, width_voxels, iterations);
        return sdf_to_occupancy(smoothed);
    }

    std::vector<double> weights(static_cast<std::size_t>(2 * width_voxels + 1));
    if (kind == SmoothKind::Mean) {
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
    } else if (kind == SmoothKind::Gaussian) {
        const double sigma = width_voxels / 2.0;
        double sum = 0.0;
        for (int t = -width_voxels; t <= width_voxels; ++t) {
            const double w = std::exp(-0.5 * t * t / (sigma * sigma));
            weights[static_cast<std::size_t>(t + width_voxels)] = w;
            sum += w;
        }
        for (auto& w : weights) w /= sum;
    }
    SparseGrid current = grid;
    for (int it = 0; it < iterations; ++it)
        for (int axis = 0; axis < 3; ++axis) current = smooth_axis(current, axis, weights, kind, width_voxels);
    return current;
}

SparseGrid merge_union(const std::vector<SparseGrid>& grids, const Lattice& lattice) {
    const bool all_sdf = !grids.empty() && std::all_of(grids.begin(), grids.end(),
                                                       [](const SparseGrid& g) { return g.kind() == GridKind::Sdf; });
    if (all_sdf) {
        double band = 0.0;
        for (const auto& g : grids) band = std::max(band, g.band());
        SparseGrid out(GridKind::Sdf, lattice, band);
        for (const auto& g : grids) {
            require_same_lattice(out, g, "merge");
            // min() over fields that use a smaller background is safe: their
            // absent voxels are outside in both.
            g.for_each_stored([&](const Coord& c, float v) { out.set(c, std::min(out.get(c), v)); });
        }
        return out;
    }
    SparseGrid out(GridKind::Occupancy, lattice);
    for (const auto& g : grids) {
        require_same_lattice(out, g, "merge");
        g.for_each_stored([&](const Coord& c, float v) {
            if (g.is_active_value(v)) out.set(c, 1.0f);
        });
    }
    return out;
}

std::vector<SparseGrid> apply_operators(std::vector<SparseGrid> grids, const std::vector<GridOperator>& chain) {
    for (const auto& op : chain) {
        switch (op.type) {
            case GridOperator::Type::Segment: {
                std::vector<SparseGrid> islands;
                for (const auto& g : grids) {
                    auto parts = op_segment(g);
                    for (auto& p : parts) islands.push_back(std::move(p));
                }
                std::stable_sort(islands.begin(), islands.end(), [](const SparseGrid& a, const SparseGrid& b) {
                    return a.active_count() > b.active_count();
                });
                grids = std::move(islands);
                break;
            }
            case GridOperator::Type::Filter: grids = op_filter(grids, op.first_n); break;
            case GridOperator::Type::Smooth:
                for (auto& g : grids) g = op_smooth(g, op.smooth, op.width, op.iterations);
                break;
        }
    }
    return grids;
}

}  // namespace cranio
