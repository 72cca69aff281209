#include "cranio/geometry/nrrd.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <string>

#include <zlib.h>

#include "cranio/common/binary_io.hpp"
#include "cranio/common/error.hpp"

namespace cranio {

namespace {

enum class SampleType { UInt8, Int16, UInt16 };

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

SampleType parse_type(const std::string& raw) {
    static const std::map<std::string, SampleType> names = {
        {"uchar", SampleType::UInt8},          {"unsigned char", SampleType::UInt8},
        {"uint8", SampleType::UInt8},          {"uint8_t", SampleType::UInt8},
        {"short", SampleType::Int16},          {"short int", SampleType::Int16},
        {"signed short", SampleType::Int16},   {"signed short int", SampleType::Int16},
        {"int16", SampleType::Int16},          {"int16_t", SampleType::Int16},
        {"ushort", SampleType::UInt16},        {"unsigned short", SampleType::UInt16},
        {"unsigned short int", SampleType::UInt16}, {"uint16", SampleType::UInt16},
        {"uint16_t", SampleType::UInt16},
    };
    auto it = names.find(raw);
    if (it == names.end()) throw Error(errc::kUnsupported, "unsupported NRRD type '" + raw + "'");
    return it->second;
}

std::size_t sample_size(SampleType t) { return t == SampleType::UInt8 ? 1 : 2; }

std::vector<Vec3> parse_vectors(const std::string& value) {
    std::vector<Vec3> out;
    std::size_t pos = 0;
    while ((pos = value.find('(', pos)) != std::string::npos) {
        const auto close = value.find(')', pos);
        if (close == std::string::npos) throw Error(errc::kMalformed, "malformed file: unterminated vector");
        std::string inner = value.substr(pos + 1, close - pos - 1);
        std::replace(inner.begin(), inner.end(), ',', ' ');
        std::istringstream in(inner);
        Vec3 v;
        if (!(in >> v.x() >> v.y() >> v.z())) throw Error(errc::kMalformed, "malformed file: bad vector");
        out.push_back(v);
        pos = close + 1;
    }
    return out;
}

std::vector<std::uint8_t> gunzip(const std::uint8_t* data, std::size_t size, std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(errc::kMalformed, "decompression failure: init");
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if ((rc != Z_STREAM_END && rc != Z_OK && rc != Z_BUF_ERROR) || produced < expected)
        throw Error(errc::kMalformed, "decompression failure: gzip stream produced " + std::to_string(produced) +
                                          " of " + std::to_string(expected) + " bytes");
    return out;
}

std::vector<std::uint8_t> gzip(const std::vector<std::uint8_t>& raw) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error(errc::kIo, "gzip init failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(raw.size())) + 32);
    zs.next_in = const_cast<Bytef*>(raw.data());
    zs.avail_in = static_cast<uInt>(raw.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error(errc::kIo, "gzip compression failed");
    return out;
}

}  // namespace

LabelVolume parse_nrrd(const std::vector<std::uint8_t>& bytes) {
    const std::string text(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 1 << 16)));
    if (text.size() < 8 || text.compare(0, 4, "NRRD") != 0 || text[4] != '0' || text[5] != '0' || text[6] != '0' ||
        text[7] < '1' || text[7] > '5')
        throw Error(errc::kMalformed, "malformed file: missing NRRD magic");

    std::map<std::string, std::string> fields;
    std::size_t pos = text.find('\n');
    std::size_t data_offset = std::string::npos;
    while (pos != std::string::npos && pos + 1 <= text.size()) {
        const std::size_t start = pos + 1;
        const std::size_t end = text.find('\n', start);
        if (end == std::string::npos) break;
        const std::string line = trim(text.substr(start, end - start));
        pos = end;
        if (line.empty()) {
            data_offset = end + 1;
            break;
        }
        if (line[0] == '#') continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos) continue;  // key:=value pairs and junk are ignored
        std::string key = line.substr(0, colon);
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
        fields[key] = trim(line.substr(colon + 2));
    }
    if (data_offset == std::string::npos) throw Error(errc::kMalformed, "malformed file: NRRD header not terminated");
    if (fields.count("data file") || fields.count("datafile"))
        throw Error(errc::kUnsupported, "unsupported NRRD detached data file");

    auto field = [&](const std::string& key) -> const std::string& {
        auto it = fields.find(key);
        if (it == fields.end()) throw Error(errc::kMalformed, "malformed file: NRRD field '" + key + "' missing");
        return it->second;
    };

    if (std::stoi(field("dimension")) != 3)
        throw Error(errc::kUnsupported, "unsupported dimension " + field("dimension") + " (need 3)");
    const SampleType type = parse_type(field("type"));

    std::string encoding = field("encoding");
    std::transform(encoding.begin(), encoding.end(), encoding.begin(), [](unsigned char c) { return std::tolower(c); });
    if (encoding != "raw" && encoding != "gzip" && encoding != "gz")
        throw Error(errc::kUnsupported, "unsupported encoding '" + encoding + "'");

    LabelVolume vol;
    {
        std::istringstream in(field("sizes"));
        for (auto& s : vol.sizes)
            if (!(in >> s) || s <= 0) throw Error(errc::kMalformed, "malformed file: bad NRRD sizes");
    }

    bool big_endian = false;
    if (auto it = fields.find("endian"); it != fields.end()) big_endian = it->second == "big";

    if (auto it = fields.find("space directions"); it != fields.end()) {
        const auto dirs = parse_vectors(it->second);
        if (dirs.size() != 3) throw Error(errc::kMalformed, "malformed file: need 3 space directions");
        for (int axis = 0; axis < 3; ++axis) {
            for (int c = 0; c < 3; ++c) {
                if (c != axis && dirs[axis][c] != 0.0)
                    throw Error(errc::kUnsupported, "unsupported non-axis-aligned space directions");
            }
            if (!(dirs[axis][axis] > 0.0))
                throw Error(errc::kUnsupported, "unsupported non-positive space direction on axis " + std::to_string(axis));
            vol.spacing[axis] = dirs[axis][axis];
        }
    } else if (auto sp = fields.find("spacings"); sp != fields.end()) {
        std::istringstream in(sp->second);
        for (int axis = 0; axis < 3; ++axis)
            if (!(in >> vol.spacing[axis]) || !(vol.spacing[axis] > 0.0))
                throw Error(errc::kMalformed, "malformed file: bad spacings");
    }
    if (auto it = fields.find("space origin"); it != fields.end()) {
        const auto o = parse_vectors(it->second);
        if (o.size() != 1) throw Error(errc::kMalformed, "malformed file: bad space origin");
        vol.origin = o[0];
    }

    const std::size_t count = vol.voxel_count();
    const std::size_t payload = count * sample_size(type);
    std::vector<std::uint8_t> raw;
    const std::uint8_t* data = bytes.data() + data_offset;
    const std::size_t available = bytes.size() - data_offset;
    if (encoding == "raw") {
        if (available < payload)
            throw Error(errc::kMalformed, "malformed file: raw payload has " + std::to_string(available) + " of " +
                                              std::to_string(payload) + " bytes");
        raw.assign(data, data + payload);
    } else {
        raw = gunzip(data, available, payload);
    }

    vol.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (type == SampleType::UInt8) {
            vol.labels[i] = raw[i];
            continue;
        }
        std::uint16_t u;
        std::memcpy(&u, raw.data() + 2 * i, 2);
        if (big_endian) u = static_cast<std::uint16_t>((u >> 8) | (u << 8));
        vol.labels[i] = type == SampleType::Int16 ? static_cast<float>(static_cast<std::int16_t>(u)) : static_cast<float>(u);
    }
    return vol;
}

LabelVolume load_nrrd(const std::filesystem::path& path) { return parse_nrrd(io::read_file(path)); }

std::vector<std::uint8_t> encode_nrrd(const LabelVolume& volume, bool compress) {
    std::ostringstream h;
    h.precision(17);
    h << "NRRD0004\n"
      << "type: unsigned char\n"
      << "dimension: 3\n"
      << "space: left-posterior-superior\n"
      << "sizes: " << volume.sizes[0] << " " << volume.sizes[1] << " " << volume.sizes[2] << "\n"
      << "space directions: (" << volume.spacing.x() << ",0,0) (0," << volume.spacing.y() << ",0) (0,0,"
      << volume.spacing.z() << ")\n"
      << "endian: little\n"
      << "encoding: " << (compress ? "gzip" : "raw") << "\n"
      << "space origin: (" << volume.origin.x() << "," << volume.origin.y() << "," << volume.origin.z() << ")\n\n";
    std::vector<std::uint8_t> raw(volume.labels.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<std::uint8_t>(std::clamp(volume.labels[i], 0.0f, 255.0f));
    const std::string header = h.str();
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const auto body = compress ? gzip(raw) : raw;
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

}  // namespace cranio
