#include "cranio/geometry/ray_parity.hpp"

#include <algorithm>
#include <cmath>

#include "cranio/common/error.hpp"

namespace cranio {

namespace {

struct P2 {
    double y, z;
};

bool lex_less(const P2& a, const P2& b) { return a.y < b.y || (a.y == b.y && a.z < b.z); }

double edge_fn(const P2& u, const P2& v, const P2& p) { return (v.y - u.y) * (p.z - u.z) - (v.z - u.z) * (p.y - u.y); }

// Returns true and the crossing depth when the ray through p pierces the
// projected triangle under the half-open tie rule.
bool pierce(const double ty[3], const double tz[3], const double tx[3], const P2& p, double& x_out) {
    const P2 v[3] = {{ty[0], tz[0]}, {ty[1], tz[1]}, {ty[2], tz[2]}};
    double e[3];
    for (int i = 0; i < 3; ++i) {
        P2 u = v[(i + 1) % 3];
        P2 w = v[(i + 2) % 3];
        const P2& opposite = v[i];
        if (lex_less(w, u)) std::swap(u, w);
        const double side = edge_fn(u, w, opposite);
        if (side == 0.0) return false;  // edge-on in projection
        const double ep = edge_fn(u, w, p);
        if (ep == 0.0) {
            if (side < 0.0) return false;
        } else if ((ep > 0.0) != (side > 0.0)) {
            return false;
        }
        e[i] = ep * (side > 0.0 ? 1.0 : -1.0) / std::abs(side);
    }
    // e[i] is now the barycentric weight of vertex i.
    const double sum = e[0] + e[1] + e[2];
    x_out = sum > 0.0 ? (e[0] * tx[0] + e[1] * tx[1] + e[2] * tx[2]) / sum : tx[0];
    return true;
}

}  // namespace

RayParityIndex::RayParityIndex(const TriMesh& mesh, double cell_size) : cell_(cell_size) {
    if (!(cell_size > 0.0)) throw Error(errc::kInvalidArgument, "ray index cell size must be positive");
    triangles_.reserve(mesh.triangles.size());
    double ymin = std::numeric_limits<double>::infinity(), zmin = ymin;
    double ymax = -ymin, zmax = -ymin;
    for (const auto& t : mesh.triangles) {
        Projected pr{};
        for (int i = 0; i < 3; ++i) {
            const Vec3& v = mesh.vertices[t[i]];
            pr.x[i] = v.x();
            pr.y[i] = v.y();
            pr.z[i] = v.z();
            ymin = std::min(ymin, v.y());
            ymax = std::max(ymax, v.y());
            zmin = std::min(zmin, v.z());
            zmax = std::max(zmax, v.z());
        }
        triangles_.push_back(pr);
    }
    if (triangles_.empty()) return;
    y0_ = ymin;
    z0_ = zmin;
    ny_ = static_cast<long>(std::floor((ymax - ymin) / cell_)) + 1;
    nz_ = static_cast<long>(std::floor((zmax - zmin) / cell_)) + 1;
    bins_.resize(static_cast<std::size_t>(ny_ * nz_));
    for (std::uint32_t idx = 0; idx < triangles_.size(); ++idx) {
        const auto& pr = triangles_[idx];
        const double ty0 = std::min({pr.y[0], pr.y[1], pr.y[2]});
        const double ty1 = std::max({pr.y[0], pr.y[1], pr.y[2]});
        const double tz0 = std::min({pr.z[0], pr.z[1], pr.z[2]});
        const double tz1 = std::max({pr.z[0], pr.z[1], pr.z[2]});
        const long j0 = static_cast<long>(std::floor((ty0 - y0_) / cell_));
        const long j1 = std::min(ny_ - 1, static_cast<long>(std::floor((ty1 - y0_) / cell_)));
        const long k0 = static_cast<long>(std::floor((tz0 - z0_) / cell_));
        const long k1 = std::min(nz_ - 1, static_cast<long>(std::floor((tz1 - z0_) / cell_)));
        for (long k = k0; k <= k1; ++k)
            for (long j = j0; j <= j1; ++j) bins_[static_cast<std::size_t>(j + ny_ * k)].push_back(idx);
    }
}

void RayParityIndex::crossings(double y, double z, std::vector<double>& out) const {
    out.clear();
    if (bins_.empty()) return;
    const long j = static_cast<long>(std::floor((y - y0_) / cell_));
    const long k = static_cast<long>(std::floor((z - z0_) / cell_));
    if (j < 0 || k < 0 || j >= ny_ || k >= nz_) return;
    const P2 p{y, z};
    for (auto idx : bins_[static_cast<std::size_t>(j + ny_ * k)]) {
        const auto& pr = triangles_[idx];
        double x;
        if (pierce(pr.y, pr.z, pr.x, p, x)) out.push_back(x);
    }
    std::sort(out.begin(), out.end());
}

bool RayParityIndex::inside(const Vec3& p) const {
    std::vector<double> xs;
    crossings(p.y(), p.z(), xs);
    const auto beyond = xs.end() - std::upper_bound(xs.begin(), xs.end(), p.x());
    return beyond % 2 == 1;
}

}  // namespace cranio
