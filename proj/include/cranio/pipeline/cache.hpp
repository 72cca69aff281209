#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cranio/geometry/mesh.hpp"

namespace cranio {

struct CaseRecord {
    std::string id;
    std::filesystem::path mesh_path;
    std::filesystem::path grid_path;
    std::filesystem::path descriptor_path;
    std::optional<std::filesystem::path> ground_truth_path;
};

struct SkippedCase {
    std::string id;
    std::string reason;
};

/// Cached dataset: <dir>/<case_id>/{mesh.stl, grid.cigd, gasd.f32} plus the
/// content-hash manifest <dir>/repository.json.
struct Repository {
    std::filesystem::path dir;
    std::vector<CaseRecord> cases;  // sorted by id
    std::vector<SkippedCase> skipped;

    const CaseRecord* find(const std::string& id) const;
};

inline constexpr const char* kRepositoryManifest = "repository.json";

struct CacheOptions {
    /// Lattice spacing of the cached occupancy grids of mesh cases.
    double voxel_size = 0.5;
    /// Defaults to <dataset_dir>/.cranio_cache.
    std::optional<std::filesystem::path> repo_dir;
};

struct CacheResult {
    Repository repository;
    /// Files whose bytes changed on disk, manifest excluded.
    std::size_t files_written = 0;
};

/// Builds or refreshes the cache for every case file in dataset_dir.
///
/// Cases are <id>.stl, <id>.ply or <id>.nrrd; <id>.truth.<ext> files are the
/// optional ground-truth implants. Hidden entries are ignored. Unreadable
/// cases are recorded as skipped and the build continues. Files are
/// rewritten only when their content hash changes.
CacheResult build_cache(const std::filesystem::path& dataset_dir, const CacheOptions& options = {});

/// Reads repository.json; throws io_error when absent.
Repository load_repository(const std::filesystem::path& repo_dir);

/// Loads a case or ground-truth file as a mesh; NRRD volumes are meshed at
/// their native spacing.
TriMesh load_case_geometry(const std::filesystem::path& path);

}  // namespace cranio
