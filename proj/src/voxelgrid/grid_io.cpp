#include "cranio/voxelgrid/grid_io.hpp"

#include <cstring>

#include "cranio/common/binary_io.hpp"
#include "cranio/common/error.hpp"

namespace cranio {

std::vector<std::uint8_t> encode_grid(const SparseGrid& grid) {
    io::ByteWriter w;
    w.put_bytes("CIGD", 4);
    w.put(kGridFormatVersion);
    w.put(static_cast<std::uint8_t>(grid.kind()));
    w.put(grid.voxel_size());
    for (int a = 0; a < 3; ++a) w.put(grid.lattice().origin[a]);
    w.put(grid.band());
    w.put(static_cast<std::uint64_t>(grid.chunk_count()));
    for (const auto& [key, chunk] : grid.chunks()) {
        for (int a = 0; a < 3; ++a) w.put(key[a]);
        w.put_bytes(chunk.data(), chunk.size() * sizeof(float));
    }
    return w.take();
}

SparseGrid decode_grid(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    if (!r.can_read(4) || std::memcmp(r.cursor(), "CIGD", 4) != 0)
        throw Error(errc::kMalformed, "malformed file: missing CIGD magic");
    r.skip(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kGridFormatVersion)
        throw Error(errc::kUnsupported, "unsupported grid format version " + std::to_string(version));
    const auto kind = r.get<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(GridKind::Sdf)) throw Error(errc::kMalformed, "malformed file: bad grid kind");
    Lattice lattice;
    lattice.voxel_size = r.get<double>();
    for (int a = 0; a < 3; ++a) lattice.origin[a] = r.get<double>();
    const double band = r.get<double>();
    const auto count = r.get<std::uint64_t>();
    SparseGrid grid(static_cast<GridKind>(kind), lattice, band);
    constexpr std::size_t kChunkBytes = SparseGrid::kChunkVoxels * sizeof(float);
    if (count > r.remaining() / (12 + kChunkBytes)) throw Error(errc::kMalformed, "malformed file: truncated chunk list");
    for (std::uint64_t i = 0; i < count; ++i) {
        Coord key{};
        for (auto& c : key) c = r.get<std::int32_t>();
        SparseGrid::Chunk chunk(SparseGrid::kChunkVoxels);
        std::memcpy(chunk.data(), r.cursor(), kChunkBytes);
        r.skip(kChunkBytes);
        if (!grid.mutable_chunks().emplace(key, std::move(chunk)).second)
            throw Error(errc::kMalformed, "malformed file: duplicate chunk");
    }
    return grid;
}

void save_grid(const SparseGrid& grid, const std::filesystem::path& path) { io::write_file(path, encode_grid(grid)); }

SparseGrid load_grid(const std::filesystem::path& path) { return decode_grid(io::read_file(path)); }

}  // namespace cranio
