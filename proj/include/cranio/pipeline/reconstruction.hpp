#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cranio/metrics/report.hpp"
#include "cranio/pipeline/cache.hpp"
#include "cranio/pipeline/config.hpp"
#include "cranio/voxelgrid/sparse_grid.hpp"

namespace cranio {

enum class Stage { Selection = 0, Alignment = 1, Fusion = 2, Postprocess = 3, Metrics = 4 };
inline constexpr std::array<Stage, 5> kStages{Stage::Selection, Stage::Alignment, Stage::Fusion, Stage::Postprocess,
                                              Stage::Metrics};

const char* to_string(Stage stage);
std::optional<Stage> stage_from_string(const std::string& name);

/// Stage failure carrying the stage name next to the cause.
class StageError : public Error {
public:
    StageError(Stage stage, const std::string& code, const std::string& cause)
        : Error(code, std::string("stage ") + to_string(stage) + ": " + cause), stage_(stage), cause_(cause) {}
    Stage stage() const noexcept { return stage_; }
    const std::string& cause() const noexcept { return cause_; }

private:
    Stage stage_;
    std::string cause_;
};

/// Target SDFs already computed for a case, keyed by lattice and band.
class TargetSdfCache {
public:
    std::shared_ptr<const SparseGrid> get(const TriMesh& target, const Lattice& lattice, double band);

private:
    std::mutex mutex_;
    std::map<std::array<double, 5>, std::shared_ptr<const SparseGrid>> grids_;
};

/// Target and template library loaded from a repository.
struct CaseContext {
    CaseRecord target;
    TriMesh target_mesh;
    std::optional<TriMesh> ground_truth;
    std::vector<std::string> library_ids;
    std::vector<TriMesh> library_meshes;
    std::vector<GasdDescriptor> library_descriptors;

    std::shared_ptr<TargetSdfCache> sdf_cache = std::make_shared<TargetSdfCache>();

    std::vector<LibraryCase> library() const;
    const TriMesh& template_mesh(const std::string& id) const;
    /// mesh_to_sdf of the target, computed once per lattice and band.
    std::shared_ptr<const SparseGrid> target_sdf(const Lattice& lattice, double band) const;
};

/// Throws Error(unknown_case) when `target_id` is not in the repository.
CaseContext load_case_context(const Repository& repo, const std::string& target_id);

struct AlignedTemplate {
    std::string id;
    AlignmentResult alignment;
};

/// Intermediate products, filled stage by stage.
struct ReconstructionState {
    std::vector<RankedTemplate> selection;
    /// ICP settings and ROI the selection alignments were computed with.
    std::optional<std::pair<IcpSettings, std::optional<RoiSphere>>> selection_basis;
    std::vector<AlignedTemplate> alignments;
    std::optional<SparseGrid> ratio;
    std::optional<SparseGrid> recon;
    std::optional<SparseGrid> target_offset;
    std::optional<SparseGrid> implant_grid;
    std::optional<TriMesh> implant;
    std::optional<MetricsReport> report;
    std::vector<double> distances;
    std::string metrics_note;

    /// Drops the products of `from` and every later stage.
    void reset_from(Stage from);
};

/// Fraction of the running stage completed, in [0, 1].
using StageProgress = std::function<void(double fraction)>;

/// Runs one stage on top of the earlier stages' products; errors are
/// rethrown as StageError.
void run_stage(Stage stage, const CaseContext& ctx, const PipelineConfig& config, ReconstructionState& state,
               const StageProgress& progress = {});

/// Lattice shared by every grid of a run.
Lattice run_lattice(const PipelineConfig& config);
/// SDF band of the target; wide enough for the configured offset.
double target_band(const PipelineConfig& config);

/// Per-bin voxel counts of the ratio grid, one row per value k/M.
std::string ratio_histogram_csv(const SparseGrid& ratio, std::size_t template_count);

struct RunResult {
    ReconstructionState state;
    nlohmann::json manifest;
};

/// The whole workflow in stage order. A failing stage is recorded in the
/// manifest ("error") and rethrown as StageError by run_reconstruction; use
/// run_reconstruction_nothrow to inspect the partial manifest.
RunResult run_reconstruction(const PipelineConfig& config, const Repository& repo, const std::string& target_id);
RunResult run_reconstruction_nothrow(const PipelineConfig& config, const Repository& repo, const std::string& target_id,
                                     std::optional<StageError>& error);

/// Writes implant.stl, manifest.json and, when metrics exist, report.csv and
/// distances.f32 into out_dir.
void write_run_outputs(const RunResult& run, const std::filesystem::path& out_dir);

MetricsReport evaluate_case(const TriMesh& implant, const TriMesh& ground_truth, const std::string& label,
                            double h = 1.0);

/// Little-endian f32 array.
std::vector<std::uint8_t> encode_distances(const std::vector<double>& d);

}  // namespace cranio
