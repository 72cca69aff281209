#include "cranio/registration/icp.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "cranio/common/error.hpp"
#include "cranio/common/parallel.hpp"
#include "cranio/registration/kdtree.hpp"

namespace cranio {

void IcpSettings::validate() const {
    auto fail = [](const char* field, const char* what) {
        throw Error(errc::kInvalidArgument, std::string("icp.") + field + " " + what);
    };
    if (max_iterations < 1) fail("max_iterations", "must be >= 1");
    if (!(mse_threshold >= 0.0) || !std::isfinite(mse_threshold)) fail("mse_threshold", "must be >= 0");
    if (!(mse_delta_threshold >= 0.0) || !std::isfinite(mse_delta_threshold))
        fail("mse_delta_threshold", "must be >= 0");
    if (!(max_correspondence_distance > 0.0) || !std::isfinite(max_correspondence_distance))
        fail("max_correspondence_distance", "must be > 0");
    if (!(normal_compat_min_cos >= -1.0 && normal_compat_min_cos <= 1.0))
        fail("normal_compat_min_cos", "must be in [-1, 1]");
}

namespace {

struct FixedSet {
    KdTree tree;
    std::vector<Vec3> normals;
};

FixedSet prepare_fixed(const TriMesh& fixed, const std::optional<RoiSphere>& roi) {
    const std::vector<Vec3> normals = fixed.has_normals() ? fixed.normals : vertex_normals(fixed);
    std::vector<Vec3> pts;
    std::vector<Vec3> nrm;
    if (roi) {
        const std::vector<char> keep = clip_vertex_mask(fixed.vertices, fixed.triangles, *roi);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (!keep[i]) continue;
            pts.push_back(fixed.vertices[i]);
            nrm.push_back(normals[i]);
        }
    } else {
        pts = fixed.vertices;
        nrm = normals;
    }
    return {KdTree(std::move(pts)), std::move(nrm)};
}

struct Matching {
    std::vector<Correspondence> pairs;
    double mse = 0.0;
    std::size_t active = 0;
};

class Matcher {
public:
    Matcher(const TriMesh& moving, const FixedSet& fixed, const std::optional<RoiSphere>& roi,
            const IcpSettings& settings)
        : moving_(moving), fixed_(fixed), settings_(settings),
          normals_(moving.has_normals() ? moving.normals : vertex_normals(moving)),
          keep_(roi ? clip_vertex_mask(moving.vertices, moving.triangles, *roi)
                    : std::vector<char>(moving.vertices.size(), 1)) {
        if (!settings.reciprocal_correspondences) return;
        std::vector<Vec3> pts;
        for (std::size_t i = 0; i < keep_.size(); ++i) {
            if (!keep_[i]) continue;
            pts.push_back(moving.vertices[i]);
            kept_index_.push_back(static_cast<std::uint32_t>(i));
        }
        moving_tree_ = KdTree(std::move(pts));
    }

    Matching match(const RigidTransform& pose) const {
        const std::size_t n = moving_.vertices.size();
        const std::vector<char>& keep = keep_;
        std::vector<Vec3> pos(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (keep[i]) pos[i] = pose.apply(moving_.vertices[i]);
        }

        const double max_sq = settings_.max_correspondence_distance * settings_.max_correspondence_distance;
        std::vector<KdTree::Hit> hits(n);
        constexpr std::size_t kBlock = 1024;
        parallel_for((n + kBlock - 1) / kBlock, [&](std::size_t b) {
            const std::size_t end = std::min(n, (b + 1) * kBlock);
            for (std::size_t i = b * kBlock; i < end; ++i) {
                if (keep[i]) hits[i] = fixed_.tree.nearest(pos[i], max_sq);
            }
        });

        // Reverse lookup: nearest kept moving vertex of every matched fixed vertex.
        std::vector<std::uint32_t> back;
        if (settings_.reciprocal_correspondences) {
            const std::size_t nf = fixed_.tree.size();
            back.assign(nf, KdTree::kNone);
            std::vector<char> wanted(nf, 0);
            for (std::size_t i = 0; i < n; ++i)
                if (keep[i] && hits[i].found()) wanted[hits[i].index] = 1;
            const RigidTransform inv = pose.inverse();
            parallel_for((nf + kBlock - 1) / kBlock, [&](std::size_t b) {
                const std::size_t end = std::min(nf, (b + 1) * kBlock);
                for (std::size_t j = b * kBlock; j < end; ++j) {
                    if (!wanted[j]) continue;
                    const KdTree::Hit h = moving_tree_.nearest(inv.apply(fixed_.tree.points()[j]));
                    if (h.found()) back[j] = kept_index_[h.index];
                }
            });
        }

        Matching m;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!keep[i]) continue;
            ++m.active;
            if (!hits[i].found()) continue;
            if (!back.empty() && back[hits[i].index] != i) continue;
            const Vec3 np = pose.apply_direction(normals_[i]);
            const Vec3& nq = fixed_.normals[hits[i].index];
            if (np.dot(nq) < settings_.normal_compat_min_cos) continue;
            m.pairs.push_back({pos[i], fixed_.tree.points()[hits[i].index], nq, np});
            sum += hits[i].distance_sq;
        }
        m.mse = m.pairs.empty() ? max_sq : sum / static_cast<double>(m.pairs.size());
        return m;
    }

private:
    const TriMesh& moving_;
    const FixedSet& fixed_;
    const IcpSettings& settings_;
    std::vector<Vec3> normals_;
    std::vector<char> keep_;
    KdTree moving_tree_;
    std::vector<std::uint32_t> kept_index_;
};

}  // namespace

AlignmentResult icp_align(const TriMesh& moving, const TriMesh& fixed, const std::optional<RoiSphere>& roi,
                          const IcpSettings& settings, const IcpObserver& observer) {
    settings.validate();
    if (moving.triangles.empty() || fixed.triangles.empty())
        throw Error(errc::kEmptyGeometry, "icp_align: moving and fixed meshes must be nonempty");
    const FixedSet fixed_set = prepare_fixed(fixed, roi);
    if (fixed_set.tree.size() == 0) throw Error(errc::kEmptyGeometry, "ROI excludes all geometry (fixed mesh)");

    const Matcher matcher(moving, fixed_set, roi, settings);
    AlignmentResult result;
    Matching m = matcher.match(result.transform);
    if (m.active == 0) throw Error(errc::kEmptyGeometry, "ROI excludes all geometry (moving mesh)");
    result.fitness_mse = m.mse;
    result.inliers = m.pairs.size();
    if (!m.pairs.empty() && m.mse < settings.mse_threshold) {
        result.converged = true;
        return result;
    }

    double previous = m.mse;
    for (int it = 1; it <= settings.max_iterations; ++it) {
        RigidTransform step;
        try {
            step = estimate_rigid(m.pairs, settings.objective);
        } catch (const Error&) {
            return result;
        }
        result.transform = step * result.transform;
        result.transform.rotation = nearest_rotation(result.transform.rotation);
        result.iterations = it;
        m = matcher.match(result.transform);
        result.fitness_mse = m.mse;
        result.inliers = m.pairs.size();
        if (observer) observer(it, result.transform, m.mse);
        if (m.pairs.empty()) return result;
        if (m.mse < settings.mse_threshold || std::abs(m.mse - previous) < settings.mse_delta_threshold) {
            result.converged = true;
            return result;
        }
        previous = m.mse;
    }
    return result;
}

}  // namespace cranio
