#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cranio/voxelgrid/sparse_grid.hpp"

namespace cranio {

inline constexpr std::uint32_t kGridFormatVersion = 1;

/// Cache grid layout: "CIGD", u32 version, u8 kind, f64 h, 3 x f64 origin,
/// f64 band, u64 chunk count, then per chunk 3 x i32 coordinate followed by
/// 4096 f32 values (x fastest). All little-endian, chunks in ascending order.
std::vector<std::uint8_t> encode_grid(const SparseGrid& grid);
SparseGrid decode_grid(const std::vector<std::uint8_t>& bytes);

void save_grid(const SparseGrid& grid, const std::filesystem::path& path);
SparseGrid load_grid(const std::filesystem::path& path);

}  // namespace cranio
