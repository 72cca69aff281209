#include "cranio/pipeline/reconstruction.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include "cranio/common/binary_io.hpp"
#include "cranio/common/error.hpp"
#include "cranio/common/parallel.hpp"
#include "cranio/geometry/mesh_io.hpp"
#include "cranio/metrics/surface_distance.hpp"
#include "cranio/pipeline/manifest.hpp"
#include "cranio/registration/gasd.hpp"
#include "cranio/voxelgrid/marching_cubes.hpp"
#include "cranio/voxelgrid/sdf.hpp"

namespace fs = std::filesystem;

namespace cranio {

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::Selection: return "selection";
        case Stage::Alignment: return "alignment";
        case Stage::Fusion: return "fusion";
        case Stage::Postprocess: return "postprocess";
        case Stage::Metrics: return "metrics";
    }
    return "unknown";
}

std::optional<Stage> stage_from_string(const std::string& name) {
    for (Stage s : kStages) {
        if (name == to_string(s)) return s;
    }
    return std::nullopt;
}

std::vector<LibraryCase> CaseContext::library() const {
    std::vector<LibraryCase> out;
    for (std::size_t i = 0; i < library_ids.size(); ++i)
        out.push_back({library_ids[i], &library_meshes[i], library_descriptors[i]});
    return out;
}

const TriMesh& CaseContext::template_mesh(const std::string& id) const {
    const auto it = std::find(library_ids.begin(), library_ids.end(), id);
    if (it == library_ids.end()) throw Error(errc::kInvalidArgument, "template '" + id + "' is not in the library");
    return library_meshes[static_cast<std::size_t>(it - library_ids.begin())];
}

std::shared_ptr<const SparseGrid> TargetSdfCache::get(const TriMesh& target, const Lattice& lattice, double band) {
    const std::array<double, 5> key{lattice.voxel_size, lattice.origin.x(), lattice.origin.y(), lattice.origin.z(), band};
    std::lock_guard lock(mutex_);
    auto it = grids_.find(key);
    if (it != grids_.end()) return it->second;
    if (grids_.size() >= 4) grids_.clear();
    auto grid = std::make_shared<const SparseGrid>(mesh_to_sdf(target, lattice, band));
    grids_.emplace(key, grid);
    return grid;
}

std::shared_ptr<const SparseGrid> CaseContext::target_sdf(const Lattice& lattice, double band) const {
    return sdf_cache->get(target_mesh, lattice, band);
}

CaseContext load_case_context(const Repository& repo, const std::string& target_id) {
    const CaseRecord* target = repo.find(target_id);
    if (!target) throw Error(errc::kUnknownCase, "unknown case '" + target_id + "'");
    CaseContext ctx;
    ctx.target = *target;
    ctx.target_mesh = with_normals(load_mesh(target->mesh_path));
    if (target->ground_truth_path) ctx.ground_truth = load_case_geometry(*target->ground_truth_path);
    for (const auto& c : repo.cases) {
        if (c.id == target_id) continue;
        ctx.library_ids.push_back(c.id);
    }
    ctx.library_meshes.resize(ctx.library_ids.size());
    ctx.library_descriptors.resize(ctx.library_ids.size());
    parallel_for(ctx.library_ids.size(), [&](std::size_t i) {
        const CaseRecord& c = *repo.find(ctx.library_ids[i]);
        ctx.library_meshes[i] = with_normals(load_mesh(c.mesh_path));
        ctx.library_descriptors[i] = load_descriptor(c.descriptor_path);
    });
    return ctx;
}

void ReconstructionState::reset_from(Stage from) {
    const int f = static_cast<int>(from);
    if (f <= static_cast<int>(Stage::Selection)) {
        selection.clear();
        selection_basis.reset();
    }
    if (f <= static_cast<int>(Stage::Alignment)) alignments.clear();
    if (f <= static_cast<int>(Stage::Fusion)) {
        ratio.reset();
        recon.reset();
    }
    if (f <= static_cast<int>(Stage::Postprocess)) {
        target_offset.reset();
        implant_grid.reset();
        implant.reset();
    }
    report.reset();
    distances.clear();
    metrics_note.clear();
}

Lattice run_lattice(const PipelineConfig& config) { return Lattice{config.voxel_size, Vec3::Zero()}; }

double target_band(const PipelineConfig& config) {
    const double h = config.voxel_size;
    return std::max(3.0 * h, config.offset.base_offset + 3.0 * h);
}

namespace {

std::optional<RoiSphere> alignment_roi(const PipelineConfig& config) {
    return config.clipping ? std::optional<RoiSphere>(config.roi) : std::nullopt;
}

void report_progress(const StageProgress& progress, double f) {
    if (progress) progress(std::clamp(f, 0.0, 1.0));
}

void stage_selection(const CaseContext& ctx, const PipelineConfig& config, ReconstructionState& state,
                     const StageProgress& progress) {
    if (ctx.library_ids.empty()) throw Error(errc::kInvalidArgument, "repository holds no template cases");
    const std::size_t k = std::min(config.selection.k, ctx.library_ids.size());
    state.selection = select_templates(ctx.target_mesh, ctx.library(), config.selection.mode, k, alignment_roi(config),
                                       config.icp, [&](std::size_t done, std::size_t total) {
                                           report_progress(progress, static_cast<double>(done) / total);
                                       });
    state.selection_basis.emplace(config.icp, alignment_roi(config));
}

void stage_alignment(const CaseContext& ctx, const PipelineConfig& config, ReconstructionState& state,
                     const StageProgress& progress) {
    const std::size_t n = state.selection.size();
    std::vector<AlignedTemplate> out(n);
    std::mutex m;
    std::size_t done = 0;
    const auto roi = alignment_roi(config);
    if (state.selection_basis && state.selection_basis->first == config.icp && state.selection_basis->second == roi) {
        // select_templates already ran exactly these alignments.
        for (std::size_t i = 0; i < n; ++i) out[i] = {state.selection[i].id, state.selection[i].alignment};
        state.alignments = std::move(out);
        report_progress(progress, 1.0);
        return;
    }
    parallel_for(n, [&](std::size_t i) {
        const std::string& id = state.selection[i].id;
        out[i] = {id, icp_align(ctx.template_mesh(id), ctx.target_mesh, roi, config.icp)};
        std::lock_guard lock(m);
        report_progress(progress, static_cast<double>(++done) / n);
    });
    state.alignments = std::move(out);
}

void stage_fusion(const CaseContext& ctx, const PipelineConfig& config, ReconstructionState& state,
                  const StageProgress& progress) {
    const Lattice lattice = run_lattice(config);
    const std::size_t n = state.alignments.size();
    std::vector<SparseGrid> grids(n);
    std::mutex m;
    std::size_t done = 0;
    parallel_for(n, [&](std::size_t i) {
        const auto& a = state.alignments[i];
        grids[i] = mesh_to_occupancy(transform_mesh(ctx.template_mesh(a.id), a.alignment.transform), lattice);
        std::lock_guard lock(m);
        report_progress(progress, 0.9 * static_cast<double>(++done) / n);
    });
    state.ratio = accumulate_ratio(grids);
    state.recon = threshold_extract(*state.ratio, config.threshold);
}

void stage_postprocess(const CaseContext& ctx, const PipelineConfig& config, ReconstructionState& state,
                       const StageProgress& progress) {
    const Lattice lattice = run_lattice(config);
    const auto target_sdf = ctx.target_sdf(lattice, target_band(config));
    report_progress(progress, 0.4);
    state.target_offset = offset_surface(*target_sdf, config.offset);
    const SparseGrid cut = subtract(*state.recon, *state.target_offset);
    report_progress(progress, 0.5);
    const std::vector<SparseGrid> parts = apply_operators({cut}, config.operators);
    state.implant_grid = merge_union(parts, lattice);
    report_progress(progress, 0.8);
    state.implant = extract_mesh(*state.implant_grid);
}

void stage_metrics(const CaseContext& ctx, const PipelineConfig& config, ReconstructionState& state) {
    state.report.reset();
    state.distances.clear();
    state.metrics_note.clear();
    if (!ctx.ground_truth) {
        state.metrics_note = "case has no ground truth";
        return;
    }
    if (state.implant->vertices.empty()) {
        state.metrics_note = "implant is empty";
        return;
    }
    state.distances = signed_distances(*state.implant, *ctx.ground_truth, config.voxel_size);
    state.report = evaluate_case(*state.implant, *ctx.ground_truth, ctx.target.id, config.voxel_size);
}

void require_products(Stage stage, const ReconstructionState& s) {
    bool ok = true;
    switch (stage) {
        case Stage::Selection: break;
        case Stage::Alignment: ok = !s.selection.empty(); break;
        case Stage::Fusion: ok = !s.alignments.empty(); break;
        case Stage::Postprocess: ok = s.recon.has_value(); break;
        case Stage::Metrics: ok = s.implant.has_value(); break;
    }
    if (!ok) throw StageError(stage, errc::kStageOrder, "upstream stage has not completed");
}

}  // namespace

void run_stage(Stage stage, const CaseContext& ctx, const PipelineConfig& config, ReconstructionState& state,
               const StageProgress& progress) {
    require_products(stage, state);
    state.reset_from(stage);
    try {
        report_progress(progress, 0.0);
        switch (stage) {
            case Stage::Selection: stage_selection(ctx, config, state, progress); break;
            case Stage::Alignment: stage_alignment(ctx, config, state, progress); break;
            case Stage::Fusion: stage_fusion(ctx, config, state, progress); break;
            case Stage::Postprocess: stage_postprocess(ctx, config, state, progress); break;
            case Stage::Metrics: stage_metrics(ctx, config, state); break;
        }
        report_progress(progress, 1.0);
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        state.reset_from(stage);
        throw StageError(stage, e.code(), e.what());
    } catch (const std::exception& e) {
        state.reset_from(stage);
        throw StageError(stage, "internal_error", e.what());
    }
}

std::string ratio_histogram_csv(const SparseGrid& ratio, std::size_t template_count) {
    std::vector<std::size_t> bins(template_count + 1, 0);
    ratio.for_each_stored([&](const Coord&, float v) {
        const auto k = static_cast<std::size_t>(std::lround(static_cast<double>(v) * template_count));
        if (k < bins.size()) ++bins[k];
    });
    std::string out = "ratio,voxels\n";
    for (std::size_t k = 1; k <= template_count; ++k) {
        out += std::to_string(k) + "/" + std::to_string(template_count) + "," + std::to_string(bins[k]) + "\n";
    }
    return out;
}

RunResult run_reconstruction_nothrow(const PipelineConfig& config, const Repository& repo, const std::string& target_id,
                                     std::optional<StageError>& error) {
    using clock = std::chrono::steady_clock;
    config.validate();
    const CaseContext ctx = load_case_context(repo, target_id);
    RunResult run;
    std::map<std::string, double> timings;
    error.reset();
    for (Stage stage : kStages) {
        const auto t0 = clock::now();
        try {
            run_stage(stage, ctx, config, run.state);
        } catch (const StageError& e) {
            error = e;
        }
        timings[to_string(stage)] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        if (error) break;
    }
    run.manifest = build_manifest(config, ctx, run.state, timings, error ? &*error : nullptr);
    return run;
}

RunResult run_reconstruction(const PipelineConfig& config, const Repository& repo, const std::string& target_id) {
    std::optional<StageError> error;
    RunResult run = run_reconstruction_nothrow(config, repo, target_id, error);
    if (error) throw *error;
    return run;
}

std::vector<std::uint8_t> encode_distances(const std::vector<double>& d) {
    io::ByteWriter w;
    for (double v : d) w.put(static_cast<float>(v));
    return w.take();
}

void write_run_outputs(const RunResult& run, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    if (run.state.implant) save_mesh(*run.state.implant, out_dir / "implant.stl");
    if (run.state.report) {
        io::write_file(out_dir / "report.csv",
                       std::string(kReportCsvHeader) + "\n" + to_csv_row(*run.state.report) + "\n");
        io::write_file(out_dir / "distances.f32", encode_distances(run.state.distances));
    }
    io::write_file(out_dir / "manifest.json", run.manifest.dump(2) + "\n");
}

MetricsReport evaluate_case(const TriMesh& implant, const TriMesh& ground_truth, const std::string& label, double h) {
    return report(implant, ground_truth, label, h);
}

}  // namespace cranio
