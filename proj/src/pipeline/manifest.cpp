#include "cranio/pipeline/manifest.hpp"

namespace cranio {

using nlohmann::json;

#ifndef CRANIO_VERSION
#define CRANIO_VERSION "dev"
#endif

const char* const kSoftwareVersion = CRANIO_VERSION;

json to_json(const AlignmentResult& a) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) rot.push_back({a.transform.rotation(r, 0), a.transform.rotation(r, 1), a.transform.rotation(r, 2)});
    return {{"rotation", rot},
            {"translation", {a.transform.translation.x(), a.transform.translation.y(), a.transform.translation.z()}},
            {"fitness_mse", a.fitness_mse},
            {"iterations", a.iterations},
            {"converged", a.converged},
            {"inliers", a.inliers}};
}

json to_json(const MetricsReport& r) {
    return {{"case", r.case_label}, {"min", r.min},   {"max", r.max},
            {"mae", r.mae},         {"hd95", r.hd95}, {"samples", r.sample_count}};
}

json build_manifest(const PipelineConfig& config, const CaseContext& ctx, const ReconstructionState& state,
                    const std::map<std::string, double>& timings_ms, const StageError* error) {
    json m;
    m["software_version"] = kSoftwareVersion;
    m["target"] = ctx.target.id;
    m["config"] = to_json(config);
    m["conventions"] = {
        {"alignment_score", "fitness_mse: mean squared inlier correspondence distance (mm^2)"},
        {"clipping", "ROI clips both meshes once, at their input poses"},
        {"signed_distance", "implant vertices against the ground-truth surface, negative inside"},
        {"hd95", "95th percentile, linear interpolation at rank 0.95 (n - 1), of unsigned vertex distances pooled "
                 "from both directions"},
        {"lattice", "origin (0, 0, 0), spacing voxel_size, shared by every grid"},
    };
    m["library_size"] = ctx.library_ids.size();

    json selection = json::array();
    for (const auto& s : state.selection)
        selection.push_back({{"id", s.id},
                             {"fitness_mse", s.alignment.fitness_mse},
                             {"descriptor_distance", s.descriptor_distance}});
    m["selection"] = selection;

    json alignments = json::array();
    for (const auto& a : state.alignments) {
        json j = to_json(a.alignment);
        j["id"] = a.id;
        alignments.push_back(j);
    }
    m["alignments"] = alignments;

    json fusion = nullptr;
    if (state.ratio) {
        fusion = {{"templates", state.alignments.size()},
                  {"ratio_voxels", state.ratio->active_count()},
                  {"recon_voxels", state.recon->active_count()},
                  {"threshold", config.threshold}};
    }
    m["fusion"] = fusion;

    json post = nullptr;
    if (state.implant) {
        post = {{"implant_voxels", state.implant_grid->active_count()},
                {"implant_vertices", state.implant->vertices.size()},
                {"implant_triangles", state.implant->triangles.size()},
                {"target_band", target_band(config)}};
    }
    m["postprocess"] = post;

    m["metrics"] = state.report ? to_json(*state.report) : json(nullptr);
    if (!state.metrics_note.empty()) m["metrics_note"] = state.metrics_note;

    json outputs = json::object();
    if (state.implant) outputs["implant"] = "implant.stl";
    if (state.report) {
        outputs["report"] = "report.csv";
        outputs["distances"] = "distances.f32";
    }
    outputs["manifest"] = "manifest.json";
    m["outputs"] = outputs;

    m["error"] = error ? json{{"stage", to_string(error->stage())}, {"code", error->code()}, {"message", error->cause()}}
                       : json(nullptr);
    m["timings_ms"] = timings_ms;
    return m;
}

json without_timings(json manifest) {
    manifest.erase("timings_ms");
    return manifest;
}

}  // namespace cranio
