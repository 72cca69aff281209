#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// Dense labelled volume; voxel (i, j, k) sits at origin + spacing * (i, j, k),
/// with i varying fastest in `labels`.
struct LabelVolume {
    std::array<std::int64_t, 3> sizes{0, 0, 0};
    Vec3 spacing = Vec3::Ones();
    Vec3 origin = Vec3::Zero();
    std::vector<float> labels;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(sizes[0] * sizes[1] * sizes[2]);
    }
    float at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return labels[static_cast<std::size_t>(i + sizes[0] * (j + sizes[1] * k))];
    }
};

/// Reads a 3D NRRD volume (uchar/short/ushort, raw or gzip, axis-aligned
/// space directions). Detached data files are not supported.
LabelVolume load_nrrd(const std::filesystem::path& path);
LabelVolume parse_nrrd(const std::vector<std::uint8_t>& bytes);

/// Writes an attached-data NRRD0004 file; used by fixtures and tests.
std::vector<std::uint8_t> encode_nrrd(const LabelVolume& volume, bool gzip);

}  // namespace cranio
