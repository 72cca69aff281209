#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

/// STL triangle soups are welded at this distance.
inline constexpr double kWeldTolerance = 1e-5;

/// Loads binary/ASCII STL or ASCII/binary-little-endian PLY, chosen by
/// extension. STL vertices are welded within kWeldTolerance.
TriMesh load_mesh(const std::filesystem::path& path);

TriMesh parse_stl(const std::vector<std::uint8_t>& bytes);
TriMesh parse_ply(const std::vector<std::uint8_t>& bytes);

/// Binary STL: 80-byte header, uint32 count, 50-byte facets.
std::vector<std::uint8_t> encode_stl(const TriMesh& mesh);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

/// Binary little-endian PLY with float32 vertices and uint32 indices.
std::vector<std::uint8_t> encode_ply(const TriMesh& mesh);
void save_ply(const TriMesh& mesh, const std::filesystem::path& path);

/// Merges positions closer than `tolerance`, first occurrence wins.
TriMesh weld_vertices(const std::vector<Vec3>& soup, double tolerance = kWeldTolerance);

}  // namespace cranio
