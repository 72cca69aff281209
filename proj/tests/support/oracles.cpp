#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>

#include "cranio/registration/gasd.hpp"

namespace oracle {

namespace {

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (a + t * ab - p).norm();
}

}  // namespace

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 n = (b - a).cross(c - a);
    const double n2 = n.squaredNorm();
    if (n2 > 0.0) {
        const double s = (p - a).dot(n) / n2;
        const Vec3 q = p - s * n;
        const double d0 = (b - a).cross(q - a).dot(n);
        const double d1 = (c - b).cross(q - b).dot(n);
        const double d2 = (a - c).cross(q - c).dot(n);
        if (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) return std::abs(s) * std::sqrt(n2);
    }
    return std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
}

double point_mesh_distance(const Vec3& p, const TriMesh& mesh) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles)
        best = std::min(best, point_triangle_distance(p, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]));
    return best;
}

double winding_number(const Vec3& p, const TriMesh& mesh) {
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3 a = mesh.vertices[t[0]] - p;
        const Vec3 b = mesh.vertices[t[1]] - p;
        const Vec3 c = mesh.vertices[t[2]] - p;
        const double la = a.norm(), lb = b.norm(), lc = c.norm();
        const double num = a.dot(b.cross(c));
        const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        total += 2.0 * std::atan2(num, den);
    }
    return total / (4.0 * std::numbers::pi);
}

std::vector<double> signed_distances(const TriMesh& subject, const TriMesh& reference) {
    std::vector<double> out;
    out.reserve(subject.vertices.size());
    for (const Vec3& v : subject.vertices) {
        const double d = point_mesh_distance(v, reference);
        out.push_back(winding_number(v, reference) > 0.5 ? -d : d);
    }
    return out;
}

Box random_box(cranio::SeededRandom& rng, int max_dim) {
    Box b;
    for (int a = 0; a < 3; ++a) {
        const int dim = 1 + static_cast<int>(rng.uniform() * max_dim);
        b.lo[a] = static_cast<int>(std::floor(rng.uniform(-24.0, 24.0)));
        b.hi[a] = b.lo[a] + std::min(dim, max_dim) - 1;
    }
    return b;
}

SparseGrid random_occupancy(cranio::SeededRandom& rng, const Box& box, double p, const cranio::Lattice& lattice) {
    SparseGrid g(cranio::GridKind::Occupancy, lattice);
    box.for_each([&](const Coord& c) {
        if (rng.uniform() < p) g.set(c, 1.0f);
    });
    return g;
}

SparseGrid random_sdf(cranio::SeededRandom& rng, const Box& box, double band, const cranio::Lattice& lattice) {
    SparseGrid g(cranio::GridKind::Sdf, lattice, band);
    box.for_each([&](const Coord& c) { g.set(c, static_cast<float>(rng.uniform(-band, band))); });
    return g;
}

bool stored_within(const SparseGrid& g, const Box& box) {
    bool ok = true;
    g.for_each_stored([&](const Coord& c, float) { ok = ok && box.contains(c); });
    return ok;
}

std::vector<Coord> active_in(const SparseGrid& g, const Box& box) {
    std::vector<Coord> out;
    box.for_each([&](const Coord& c) {
        if (g.is_active(c)) out.push_back(c);
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<Coord>> components(const std::vector<Coord>& active) {
    std::set<Coord> left(active.begin(), active.end());
    std::vector<std::vector<Coord>> out;
    while (!left.empty()) {
        std::vector<Coord> comp;
        std::queue<Coord> todo;
        todo.push(*left.begin());
        left.erase(left.begin());
        while (!todo.empty()) {
            const Coord c = todo.front();
            todo.pop();
            comp.push_back(c);
            for (int a = 0; a < 3; ++a) {
                for (int s : {-1, 1}) {
                    Coord n = c;
                    n[a] += s;
                    auto it = left.find(n);
                    if (it == left.end()) continue;
                    left.erase(it);
                    todo.push(n);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });
    return out;
}

std::vector<Coord> dilate(const std::vector<Coord>& s) {
    std::set<Coord> out;
    for (const Coord& c : s)
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) out.insert({c[0] + dx, c[1] + dy, c[2] + dz});
    return {out.begin(), out.end()};
}

bool subset(const std::vector<Coord>& a, const std::vector<Coord>& b) {
    const std::set<Coord> sb(b.begin(), b.end());
    return std::all_of(a.begin(), a.end(), [&](const Coord& c) { return sb.count(c) > 0; });
}

SparseGrid sphere_sdf(const cranio::Lattice& lattice, const Vec3& center, double radius, double band) {
    SparseGrid g(cranio::GridKind::Sdf, lattice, band);
    const double h = lattice.voxel_size;
    Coord lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = static_cast<int>(std::floor((center[a] - radius - band - lattice.origin[a]) / h)) - 1;
        hi[a] = static_cast<int>(std::ceil((center[a] + radius + band - lattice.origin[a]) / h)) + 1;
    }
    Box{lo, hi}.for_each([&](const Coord& c) {
        const double d = (lattice.center(c) - center).norm() - radius;
        if (d < band) g.set(c, static_cast<float>(std::max(d, -band)));
    });
    return g;
}

TriMesh box_mesh(const Vec3& lo, const Vec3& hi) {
    TriMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
    m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                   {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return m;
}

TriMesh icosphere(double radius, int levels, const Vec3& center) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    std::vector<cranio::Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < levels; ++l) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]) / 2.0);
            const auto idx = static_cast<std::uint32_t>(v.size() - 1);
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<cranio::Triangle> next;
        for (const auto& tri : f) {
            const std::uint32_t a = midpoint(tri[0], tri[1]);
            const std::uint32_t b = midpoint(tri[1], tri[2]);
            const std::uint32_t c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    TriMesh m;
    for (const Vec3& p : v) m.vertices.push_back(center + radius * p.normalized());
    m.triangles = std::move(f);
    return m;
}

cranio::CaseContext fixture_context(const cranio::SyntheticCase& c, const std::string& prefix) {
    cranio::CaseContext ctx;
    ctx.target.id = prefix + "000";
    ctx.target_mesh = cranio::with_normals(c.target);
    ctx.ground_truth = c.ground_truth_implant;
    for (std::size_t i = 0; i < c.templates.size(); ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%03zu", i + 1);
        ctx.library_ids.push_back(prefix + buf);
        ctx.library_meshes.push_back(cranio::with_normals(c.templates[i]));
        ctx.library_descriptors.push_back(cranio::gasd_descriptor(c.templates[i]));
    }
    return ctx;
}

double rms_vertex_error(const std::vector<Vec3>& vertices, const cranio::RigidTransform& t) {
    double sum = 0.0;
    for (const Vec3& v : vertices) sum += (t.apply(v) - v).squaredNorm();
    return std::sqrt(sum / static_cast<double>(vertices.size()));
}

}  // namespace oracle
