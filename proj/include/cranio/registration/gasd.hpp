#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

inline constexpr int kGasdBins = 8;
inline constexpr int kGasdSize = kGasdBins * kGasdBins * kGasdBins;

/// 8^3 occupancy histogram of the vertices in their PCA frame, L2-normalized.
/// Bin (i, j, k) is stored at i + 8 j + 64 k along the axes of descending
/// variance.
struct GasdDescriptor {
    std::array<float, kGasdSize> values{};

    double distance(const GasdDescriptor& other) const;
    bool operator==(const GasdDescriptor&) const = default;
};

/// Centres the vertices, rotates them into the covariance eigenbasis
/// (descending eigenvalues) and bins them over the tight bounding cube. Each
/// axis is oriented so the third moment of the coordinates along it is
/// non-negative. Throws empty_geometry for meshes without vertices.
GasdDescriptor gasd_descriptor(const TriMesh& mesh);
GasdDescriptor gasd_descriptor(const std::vector<Vec3>& points);

/// 512 little-endian f32.
std::vector<std::uint8_t> encode_descriptor(const GasdDescriptor& d);
GasdDescriptor decode_descriptor(const std::vector<std::uint8_t>& bytes);
void save_descriptor(const GasdDescriptor& d, const std::filesystem::path& path);
GasdDescriptor load_descriptor(const std::filesystem::path& path);

}  // namespace cranio
