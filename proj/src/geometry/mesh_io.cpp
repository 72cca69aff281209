#include "cranio/geometry/mesh_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>
#include <unordered_map>

#include "cranio/common/binary_io.hpp"
#include "cranio/common/error.hpp"

namespace cranio {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(errc::kMalformed, "malformed file: " + what); }

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
        h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

TriMesh parse_ascii_stl(const std::string& text) {
    std::istringstream in(text);
    std::string token;
    std::vector<Vec3> soup;
    while (in >> token) {
        if (token != "vertex") continue;
        Vec3 v;
        if (!(in >> v.x() >> v.y() >> v.z())) malformed("bad ASCII STL vertex");
        soup.push_back(v);
    }
    if (soup.size() % 3 != 0) malformed("ASCII STL vertex count is not a multiple of 3");
    return weld_vertices(soup);
}

}  // namespace

TriMesh weld_vertices(const std::vector<Vec3>& soup, double tolerance) {
    TriMesh mesh;
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> cells;
    cells.reserve(soup.size());
    const double tol2 = tolerance * tolerance;
    std::vector<std::uint32_t> index(soup.size());
    for (std::size_t i = 0; i < soup.size(); ++i) {
        const Vec3& p = soup[i];
        if (!p.allFinite()) malformed("non-finite vertex coordinate");
        const CellKey key{static_cast<std::int64_t>(std::floor(p.x() / tolerance)),
                          static_cast<std::int64_t>(std::floor(p.y() / tolerance)),
                          static_cast<std::int64_t>(std::floor(p.z() / tolerance))};
        constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
        std::uint32_t found = kNone;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = cells.find({key.x + dx, key.y + dy, key.z + dz});
                    if (it == cells.end()) continue;
                    for (auto candidate : it->second)
                        if (candidate < found && (mesh.vertices[candidate] - p).squaredNorm() <= tol2) found = candidate;
                }
        if (found == kNone) {
            found = static_cast<std::uint32_t>(mesh.vertices.size());
            mesh.vertices.push_back(p);
            cells[key].push_back(found);
        }
        index[i] = found;
    }
    for (std::size_t t = 0; t + 2 < soup.size(); t += 3) mesh.triangles.push_back({index[t], index[t + 1], index[t + 2]});
    return mesh;
}

TriMesh parse_stl(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() >= 84) {
        io::ByteReader reader(bytes);
        reader.skip(80);
        const auto count = reader.get<std::uint32_t>();
        const std::uint64_t expected = 84ull + 50ull * count;
        if (bytes.size() >= expected) {
            std::vector<Vec3> soup;
            soup.reserve(3ull * count);
            for (std::uint32_t t = 0; t < count; ++t) {
                reader.skip(12);
                for (int v = 0; v < 3; ++v) {
                    const float x = reader.get<float>();
                    const float y = reader.get<float>();
                    const float z = reader.get<float>();
                    soup.emplace_back(x, y, z);
                }
                reader.skip(2);
            }
            return weld_vertices(soup);
        }
    }
    const std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 5)));
    if (head == "solid") {
        const std::string text(bytes.begin(), bytes.end());
        if (text.find("facet") != std::string::npos || text.find("endsolid") != std::string::npos)
            return parse_ascii_stl(text);
    }
    malformed("STL payload shorter than declared triangle count");
}

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(const std::string& name) {
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    malformed("unknown PLY property type '" + name + "'");
}

struct PlyProperty {
    std::string name;
    PlyType type;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

double read_binary(io::ByteReader& r, PlyType type) {
    switch (type) {
        case PlyType::Int8: return r.get<std::int8_t>();
        case PlyType::UInt8: return r.get<std::uint8_t>();
        case PlyType::Int16: return r.get<std::int16_t>();
        case PlyType::UInt16: return r.get<std::uint16_t>();
        case PlyType::Int32: return r.get<std::int32_t>();
        case PlyType::UInt32: return r.get<std::uint32_t>();
        case PlyType::Float32: return r.get<float>();
        case PlyType::Float64: return r.get<double>();
    }
    return 0.0;
}

// Reads one scalar either from the ASCII token stream or the binary reader.
struct PlyValueSource {
    bool ascii;
    std::istringstream* text;
    io::ByteReader* binary;

    double next(PlyType type) {
        if (!ascii) return read_binary(*binary, type);
        double v;
        if (!(*text >> v)) malformed("truncated ASCII PLY body");
        return v;
    }
};

}  // namespace

TriMesh parse_ply(const std::vector<std::uint8_t>& bytes) {
    const std::string marker = "end_header";
    const std::string all(bytes.begin(), bytes.end());
    const auto header_end = all.find(marker);
    if (all.rfind("ply", 0) != 0 || header_end == std::string::npos) malformed("missing PLY header");
    std::size_t body = header_end + marker.size();
    if (body < all.size() && all[body] == '\r') ++body;
    if (body < all.size() && all[body] == '\n') ++body;

    std::istringstream header(all.substr(0, header_end));
    std::string line;
    std::vector<PlyElement> elements;
    bool ascii = false;
    bool format_seen = false;
    while (std::getline(header, line)) {
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") ascii = true;
            else if (fmt != "binary_little_endian") throw Error(errc::kUnsupported, "unsupported PLY format " + fmt);
            format_seen = true;
        } else if (keyword == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            if (!ls) malformed("bad PLY element line");
            elements.push_back(e);
        } else if (keyword == "property") {
            if (elements.empty()) malformed("PLY property before element");
            PlyProperty p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string count_type, item_type;
                ls >> count_type >> item_type >> p.name;
                p.is_list = true;
                p.count_type = ply_type(count_type);
                p.type = ply_type(item_type);
            } else {
                p.type = ply_type(type);
                ls >> p.name;
            }
            elements.back().properties.push_back(p);
        }
    }
    if (!format_seen) malformed("PLY format line missing");

    std::istringstream text(ascii ? all.substr(body) : std::string());
    io::ByteReader binary(bytes.data() + body, bytes.size() - body);
    PlyValueSource src{ascii, &text, &binary};

    TriMesh mesh;
    std::vector<std::array<std::uint32_t, 3>> faces;
    for (const auto& e : elements) {
        const bool is_vertex = e.name == "vertex";
        const bool is_face = e.name == "face";
        int ix = -1, iy = -1, iz = -1;
        for (int i = 0; i < static_cast<int>(e.properties.size()); ++i) {
            if (e.properties[i].name == "x") ix = i;
            if (e.properties[i].name == "y") iy = i;
            if (e.properties[i].name == "z") iz = i;
        }
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) malformed("PLY vertex element lacks x/y/z");
        for (std::size_t row = 0; row < e.count; ++row) {
            Vec3 v = Vec3::Zero();
            for (int i = 0; i < static_cast<int>(e.properties.size()); ++i) {
                const auto& p = e.properties[i];
                if (p.is_list) {
                    const auto n = static_cast<std::int64_t>(src.next(p.count_type));
                    if (n < 0) malformed("negative PLY list length");
                    std::vector<std::int64_t> items(static_cast<std::size_t>(n));
                    for (auto& item : items) item = static_cast<std::int64_t>(src.next(p.type));
                    if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) {
                        if (n < 3) malformed("PLY face with fewer than 3 vertices");
                        for (std::int64_t k = 1; k + 1 < n; ++k) {
                            std::array<std::int64_t, 3> tri{items[0], items[k], items[k + 1]};
                            std::array<std::uint32_t, 3> out{};
                            for (int c = 0; c < 3; ++c) {
                                if (tri[c] < 0) malformed("negative PLY vertex index");
                                out[c] = static_cast<std::uint32_t>(tri[c]);
                            }
                            faces.push_back(out);
                        }
                    }
                } else {
                    const double value = src.next(p.type);
                    if (i == ix) v.x() = value;
                    if (i == iy) v.y() = value;
                    if (i == iz) v.z() = value;
                }
            }
            if (is_vertex) mesh.vertices.push_back(v);
        }
    }
    for (const auto& f : faces) {
        for (auto idx : f) {
            if (idx >= mesh.vertices.size())
                malformed("PLY face index " + std::to_string(idx) + " out of range (" +
                          std::to_string(mesh.vertices.size()) + " vertices)");
        }
        mesh.triangles.push_back(f);
    }
    for (const auto& v : mesh.vertices)
        if (!v.allFinite()) malformed("non-finite PLY vertex");
    return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext != ".stl" && ext != ".ply")
        throw Error(errc::kUnsupported, "unsupported mesh format '" + ext + "' (" + path.string() + ")");
    const auto bytes = io::read_file(path);
    return ext == ".stl" ? parse_stl(bytes) : parse_ply(bytes);
}

std::vector<std::uint8_t> encode_stl(const TriMesh& mesh) {
    io::ByteWriter w;
    std::array<char, 80> header{};
    const std::string label = "cranio binary STL";
    std::copy(label.begin(), label.end(), header.begin());
    w.put_bytes(header.data(), header.size());
    w.put(static_cast<std::uint32_t>(mesh.triangles.size()));
    w.bytes().reserve(84 + 50 * mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
        for (int i = 0; i < 3; ++i) w.put(static_cast<float>(n[i]));
        for (const Vec3* v : {&a, &b, &c})
            for (int i = 0; i < 3; ++i) w.put(static_cast<float>((*v)[i]));
        w.put(std::uint16_t{0});
    }
    return w.take();
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) { io::write_file(path, encode_stl(mesh)); }

std::vector<std::uint8_t> encode_ply(const TriMesh& mesh) {
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n"
           << "element vertex " << mesh.vertices.size() << "\n"
           << "property float x\nproperty float y\nproperty float z\n"
           << "element face " << mesh.triangles.size() << "\n"
           << "property list uchar uint vertex_indices\nend_header\n";
    io::ByteWriter w;
    const std::string h = header.str();
    w.put_bytes(h.data(), h.size());
    for (const auto& v : mesh.vertices)
        for (int i = 0; i < 3; ++i) w.put(static_cast<float>(v[i]));
    for (const auto& t : mesh.triangles) {
        w.put(std::uint8_t{3});
        for (auto idx : t) w.put(idx);
    }
    return w.take();
}

void save_ply(const TriMesh& mesh, const std::filesystem::path& path) { io::write_file(path, encode_ply(mesh)); }

}  // namespace cranio
