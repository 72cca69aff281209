#include "cranio/registration/gasd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Eigenvalues>

#include "cranio/common/binary_io.hpp"
#include "cranio/common/error.hpp"

namespace cranio {

double GasdDescriptor::distance(const GasdDescriptor& other) const {
    double s = 0.0;
    for (int i = 0; i < kGasdSize; ++i) {
        const double d = static_cast<double>(values[i]) - static_cast<double>(other.values[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

GasdDescriptor gasd_descriptor(const TriMesh& mesh) { return gasd_descriptor(mesh.vertices); }

GasdDescriptor gasd_descriptor(const std::vector<Vec3>& points) {
    if (points.empty()) throw Error(errc::kEmptyGeometry, "gasd_descriptor: empty mesh");
    const double n = static_cast<double>(points.size());
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Matrix3d axes;  // rows: descending variance
    for (int r = 0; r < 3; ++r) axes.row(r) = eig.eigenvectors().col(2 - r).transpose();

    std::vector<Vec3> local(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) local[i] = axes * (points[i] - centroid);
    Vec3 skew = Vec3::Zero();
    for (const auto& q : local) skew += q.cwiseProduct(q).cwiseProduct(q);
    for (int a = 0; a < 3; ++a) {
        if (skew[a] < 0.0) {
            for (auto& q : local) q[a] = -q[a];
        }
    }

    Aabb box;
    for (const auto& q : local) box.extend(q);
    const double side = (box.max - box.min).maxCoeff();
    const Vec3 lo = 0.5 * (box.min + box.max) - Vec3::Constant(0.5 * side);

    std::array<double, kGasdSize> counts{};
    for (const auto& q : local) {
        int idx[3];
        for (int a = 0; a < 3; ++a) {
            const double u = side > 0.0 ? (q[a] - lo[a]) / side : 0.5;
            idx[a] = std::clamp(static_cast<int>(std::floor(u * kGasdBins)), 0, kGasdBins - 1);
        }
        counts[static_cast<std::size_t>(idx[0] + kGasdBins * (idx[1] + kGasdBins * idx[2]))] += 1.0;
    }
    double norm = 0.0;
    for (double c : counts) norm += c * c;
    norm = std::sqrt(norm);
    GasdDescriptor d;
    for (int i = 0; i < kGasdSize; ++i) d.values[i] = static_cast<float>(counts[i] / norm);
    return d;
}

std::vector<std::uint8_t> encode_descriptor(const GasdDescriptor& d) {
    io::ByteWriter w;
    for (float v : d.values) w.put(v);
    return w.take();
}

GasdDescriptor decode_descriptor(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() != kGasdSize * sizeof(float))
        throw Error(errc::kMalformed, "malformed file: descriptor must hold 512 f32 values");
    GasdDescriptor d;
    std::memcpy(d.values.data(), bytes.data(), bytes.size());
    return d;
}

void save_descriptor(const GasdDescriptor& d, const std::filesystem::path& path) {
    io::write_file(path, encode_descriptor(d));
}

GasdDescriptor load_descriptor(const std::filesystem::path& path) { return decode_descriptor(io::read_file(path)); }

}  // namespace cranio
