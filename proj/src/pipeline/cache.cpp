#include "cranio/pipeline/cache.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"

#include "cranio/common/binary_io.hpp"
#include "cranio/common/error.hpp"
#include "cranio/common/parallel.hpp"
#include "cranio/geometry/mesh_io.hpp"
#include "cranio/geometry/nrrd.hpp"
#include "cranio/registration/gasd.hpp"
#include "cranio/voxelgrid/grid_io.hpp"
#include "cranio/voxelgrid/marching_cubes.hpp"
#include "cranio/voxelgrid/sdf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cranio {

const CaseRecord* Repository::find(const std::string& id) const {
    for (const auto& c : cases) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

namespace {

constexpr const char* kMeshFile = "mesh.stl";
constexpr const char* kGridFile = "grid.cigd";
constexpr const char* kDescriptorFile = "gasd.f32";
constexpr int kManifestFormat = 1;

bool supported_extension(const std::string& ext) { return ext == ".stl" || ext == ".ply" || ext == ".nrrd"; }

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct SourceCase {
    std::string id;
    fs::path source;
    std::optional<fs::path> truth;
};

struct Scan {
    std::vector<SourceCase> cases;
    std::vector<SkippedCase> skipped;
};

Scan scan_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(errc::kIo, "dataset directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.empty() || name[0] == '.' || !entry.is_regular_file()) continue;
        if (supported_extension(lower(entry.path().extension().string()))) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::map<std::string, fs::path> sources, truths;
    Scan scan;
    for (const auto& f : files) {
        const fs::path stem = f.stem();
        const bool is_truth = lower(stem.extension().string()) == ".truth";
        const std::string id = is_truth ? stem.stem().string() : stem.string();
        auto& table = is_truth ? truths : sources;
        if (table.count(id)) {
            scan.skipped.push_back({id, "duplicate " + std::string(is_truth ? "ground truth" : "case") + " file " +
                                            f.filename().string()});
            continue;
        }
        table[id] = f;
    }
    for (const auto& [id, path] : sources) {
        SourceCase c{id, path, std::nullopt};
        if (auto t = truths.find(id); t != truths.end()) c.truth = t->second;
        scan.cases.push_back(std::move(c));
    }
    return scan;
}

struct Built {
    std::vector<std::uint8_t> mesh, grid, descriptor;
    std::string error;
};

Built build_case(const fs::path& source, double voxel_size) {
    Built b;
    try {
        TriMesh mesh;
        SparseGrid grid;
        if (lower(source.extension().string()) == ".nrrd") {
            const LabelVolume vol = load_nrrd(source);
            grid = labels_to_occupancy(vol, vol.spacing.x());
            mesh = extract_mesh(grid);
        } else {
            mesh = load_mesh(source);
            grid = mesh_to_occupancy(mesh, Lattice{voxel_size, Vec3::Zero()});
        }
        if (mesh.triangles.empty()) throw Error(errc::kEmptyGeometry, "case has no surface");
        b.mesh = encode_stl(mesh);
        b.grid = encode_grid(grid);
        b.descriptor = encode_descriptor(gasd_descriptor(mesh));
    } catch (const std::exception& e) {
        b.error = e.what();
    }
    return b;
}

bool write_if_changed(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    if (fs::exists(path) && fs::file_size(path) == bytes.size() && io::read_file(path) == bytes) return false;
    io::write_file(path, bytes);
    return true;
}

std::string hash_of(const std::vector<std::uint8_t>& bytes) { return io::hex64(io::fnv1a(bytes)); }

bool cached_files_match(const fs::path& case_dir, const json& files) {
    for (const char* name : {kMeshFile, kGridFile, kDescriptorFile}) {
        const fs::path p = case_dir / name;
        if (!files.contains(name) || !fs::exists(p)) return false;
        if (hash_of(io::read_file(p)) != files.at(name).get<std::string>()) return false;
    }
    return true;
}

std::string relative_to(const fs::path& target, const fs::path& base) {
    const fs::path rel = fs::absolute(target).lexically_normal().lexically_relative(fs::absolute(base).lexically_normal());
    return (rel.empty() ? fs::absolute(target) : rel).generic_string();
}

}  // namespace

CacheResult build_cache(const fs::path& dataset_dir, const CacheOptions& options) {
    if (!(options.voxel_size > 0.0)) throw Error(errc::kInvalidArgument, "cache voxel_size must be > 0");
    const fs::path repo_dir = options.repo_dir.value_or(dataset_dir / ".cranio_cache");
    Scan scan = scan_dataset(dataset_dir);
    fs::create_directories(repo_dir);

    json previous;
    if (const fs::path mp = repo_dir / kRepositoryManifest; fs::exists(mp)) {
        try {
            const auto bytes = io::read_file(mp);
            previous = json::parse(bytes.begin(), bytes.end());
        } catch (const std::exception&) {
            previous = json();
        }
    }
    std::map<std::string, json> old_entries;
    if (previous.is_object() && previous.value("format", 0) == kManifestFormat &&
        previous.value("voxel_size", 0.0) == options.voxel_size && previous.contains("cases")) {
        for (const auto& e : previous["cases"]) old_entries[e.at("id").get<std::string>()] = e;
    }

    const std::size_t n = scan.cases.size();
    std::vector<std::string> source_hash(n);
    std::vector<char> reuse(n, 0);
    std::vector<Built> built(n);
    parallel_for(n, [&](std::size_t i) {
        const SourceCase& c = scan.cases[i];
        try {
            source_hash[i] = hash_of(io::read_file(c.source));
        } catch (const std::exception& e) {
            built[i].error = e.what();
            return;
        }
        if (auto it = old_entries.find(c.id); it != old_entries.end() &&
                                              it->second.value("source_hash", "") == source_hash[i] &&
                                              cached_files_match(repo_dir / c.id, it->second.at("files"))) {
            reuse[i] = 1;
            return;
        }
        built[i] = build_case(c.source, options.voxel_size);
    });

    CacheResult result;
    Repository& repo = result.repository;
    repo.dir = repo_dir;
    json entries = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const SourceCase& c = scan.cases[i];
        const fs::path case_dir = repo_dir / c.id;
        json files;
        if (reuse[i]) {
            files = old_entries[c.id].at("files");
        } else if (!built[i].error.empty()) {
            scan.skipped.push_back({c.id, built[i].error});
            continue;
        } else {
            fs::create_directories(case_dir);
            const std::pair<const char*, const std::vector<std::uint8_t>*> outputs[] = {
                {kMeshFile, &built[i].mesh}, {kGridFile, &built[i].grid}, {kDescriptorFile, &built[i].descriptor}};
            for (const auto& [name, bytes] : outputs) {
                result.files_written += write_if_changed(case_dir / name, *bytes);
                files[name] = hash_of(*bytes);
            }
        }
        CaseRecord rec{c.id, case_dir / kMeshFile, case_dir / kGridFile, case_dir / kDescriptorFile, c.truth};
        json e = {{"id", c.id},
                  {"source", relative_to(c.source, repo_dir)},
                  {"source_hash", source_hash[i]},
                  {"files", files},
                  {"truth", c.truth ? json(relative_to(*c.truth, repo_dir)) : json(nullptr)}};
        entries.push_back(std::move(e));
        repo.cases.push_back(std::move(rec));
    }
    std::sort(scan.skipped.begin(), scan.skipped.end(),
              [](const SkippedCase& a, const SkippedCase& b) { return a.id < b.id; });
    json skipped = json::array();
    for (const auto& s : scan.skipped) skipped.push_back({{"id", s.id}, {"reason", s.reason}});
    repo.skipped = scan.skipped;

    const json manifest = {{"format", kManifestFormat},
                           {"voxel_size", options.voxel_size},
                           {"cases", entries},
                           {"skipped", skipped}};
    const std::string text = manifest.dump(2) + "\n";
    write_if_changed(repo_dir / kRepositoryManifest, std::vector<std::uint8_t>(text.begin(), text.end()));
    return result;
}

Repository load_repository(const fs::path& repo_dir) {
    const fs::path mp = repo_dir / kRepositoryManifest;
    if (!fs::exists(mp)) throw Error(errc::kIo, "no repository manifest at " + mp.string());
    const auto bytes = io::read_file(mp);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw Error(errc::kMalformed, std::string("malformed file: repository manifest: ") + e.what());
    }
    Repository repo;
    repo.dir = repo_dir;
    try {
        for (const auto& e : j.at("cases")) {
            const std::string id = e.at("id").get<std::string>();
            CaseRecord rec{id, repo_dir / id / kMeshFile, repo_dir / id / kGridFile, repo_dir / id / kDescriptorFile,
                           std::nullopt};
            if (e.contains("truth") && e["truth"].is_string()) {
                const fs::path t = e["truth"].get<std::string>();
                rec.ground_truth_path = t.is_absolute() ? t : (repo_dir / t).lexically_normal();
            }
            repo.cases.push_back(std::move(rec));
        }
        for (const auto& s : j.value("skipped", json::array()))
            repo.skipped.push_back({s.at("id").get<std::string>(), s.at("reason").get<std::string>()});
    } catch (const json::exception& e) {
        throw Error(errc::kMalformed, std::string("malformed file: repository manifest: ") + e.what());
    }
    std::sort(repo.cases.begin(), repo.cases.end(), [](const CaseRecord& a, const CaseRecord& b) { return a.id < b.id; });
    return repo;
}

TriMesh load_case_geometry(const fs::path& path) {
    if (lower(path.extension().string()) == ".nrrd") {
        const LabelVolume vol = load_nrrd(path);
        return extract_mesh(labels_to_occupancy(vol, vol.spacing.x()));
    }
    return load_mesh(path);
}

}  // namespace cranio
