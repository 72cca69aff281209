// Batch command line front end: cache, synth, reconstruct, evaluate, serve.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "cranio/geometry/mesh_io.hpp"
#include "cranio/metrics/report.hpp"
#include "cranio/pipeline/cache.hpp"
#include "cranio/pipeline/reconstruction.hpp"
#include "cranio/pipeline/synthetic_dataset.hpp"
#include "cranio/service/server.hpp"

namespace fs = std::filesystem;
using namespace cranio;

namespace {

HttpService* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

int fail(const std::string& where, const std::exception& e) {
    std::cerr << "error: " << where << ": " << e.what() << "\n";
    return 1;
}

int cmd_cache(const fs::path& dataset, const std::optional<fs::path>& repo, double h) {
    CacheOptions opts;
    opts.voxel_size = h;
    opts.repo_dir = repo;
    const CacheResult r = build_cache(dataset, opts);
    for (const auto& c : r.repository.cases)
        std::cout << "case " << c.id << (c.ground_truth_path ? " (ground truth)" : "") << "\n";
    for (const auto& s : r.repository.skipped) std::cout << "skipped " << s.id << ": " << s.reason << "\n";
    std::cout << r.repository.cases.size() << " cases, " << r.files_written << " files written to "
              << r.repository.dir.string() << "\n";
    return 0;
}

int cmd_synth(const fs::path& out, std::uint64_t seed, std::size_t templates) {
    SyntheticParams p;
    p.seed = seed;
    p.template_count = templates;
    const SyntheticDataset ds = write_synthetic_dataset(out, p);
    std::cout << "target " << ds.target_id << ", " << ds.template_ids.size() << " templates, config "
              << ds.config_path.string() << "\n";
    return 0;
}

int cmd_reconstruct(const fs::path& config_path, const std::string& target, const fs::path& out, const fs::path& repo_dir,
                    bool no_clip) {
    PipelineConfig config;
    Repository repo;
    try {
        config = load_config(config_path);
        if (no_clip) config.clipping = false;
        repo = load_repository(repo_dir);
    } catch (const std::exception& e) {
        return fail("setup", e);
    }
    std::optional<StageError> error;
    RunResult run;
    try {
        run = run_reconstruction_nothrow(config, repo, target, error);
    } catch (const std::exception& e) {
        return fail("setup", e);
    }
    write_run_outputs(run, out);
    if (error) {
        std::cerr << "error: " << error->what() << "\n";
        return 2;
    }
    if (run.state.report) std::cout << kReportCsvHeader << "\n" << to_csv_row(*run.state.report) << "\n";
    std::cout << "implant written to " << (out / "implant.stl").string() << "\n";
    return 0;
}

int cmd_evaluate(const fs::path& implant, const fs::path& truth, const std::string& label, double h) {
    const MetricsReport r = evaluate_case(load_mesh(implant), load_case_geometry(truth), label, h);
    std::cout << kReportCsvHeader << "\n" << to_csv_row(r) << "\n";
    return 0;
}

int cmd_serve(int port, const fs::path& repo_dir, const std::string& host) {
    SessionManager sessions(load_repository(repo_dir));
    HttpService service(sessions);
    const int bound = service.bind(host, port);
    if (bound < 0) {
        std::cerr << "error: serve: cannot bind " << host << ":" << port << "\n";
        return 1;
    }
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
    service.listen_after_bind();
    g_service = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Template-based cranial implant reconstruction"};
    app.require_subcommand(1);

    fs::path dataset;
    std::optional<fs::path> cache_repo;
    double cache_h = 0.5;
    auto* cache = app.add_subcommand("cache", "Build or refresh the dataset cache");
    cache->add_option("dataset_dir", dataset, "Directory of case meshes/volumes")->required();
    cache->add_option("--repo", cache_repo, "Cache directory (default <dataset_dir>/.cranio_cache)");
    cache->add_option("--voxel-size", cache_h, "Occupancy grid spacing in mm");

    fs::path synth_out;
    std::uint64_t seed = 1;
    std::size_t templates = 5;
    auto* synth = app.add_subcommand("synth", "Write a synthetic defect case and templates");
    synth->add_option("out_dir", synth_out)->required();
    synth->add_option("--seed", seed, "Fixture seed");
    synth->add_option("--templates", templates, "Number of template skulls");

    fs::path config_path, out_dir, repo_dir = ".cranio_cache";
    std::string target;
    bool no_clip = false;
    auto* recon = app.add_subcommand("reconstruct", "Run the full reconstruction for one target");
    recon->add_option("--config", config_path, "Pipeline config JSON")->required();
    recon->add_option("--target", target, "Target case id")->required();
    recon->add_option("--out", out_dir, "Output directory")->required();
    recon->add_option("--repo", repo_dir, "Cache directory built by 'cache'");
    recon->add_flag("--no-clip", no_clip, "Align without ROI clipping");

    fs::path implant, truth;
    std::string label;
    double eval_h = 1.0;
    auto* eval = app.add_subcommand("evaluate", "Print the metrics row of an implant against ground truth");
    eval->add_option("--implant", implant)->required();
    eval->add_option("--truth", truth)->required();
    eval->add_option("--label", label, "Case label for the report row");
    eval->add_option("--cell", eval_h, "Inside-test index cell size in mm");

    int port = 8080;
    fs::path serve_repo;
    std::string host = "127.0.0.1";
    auto* serve = app.add_subcommand("serve", "Start the HTTP session service");
    serve->add_option("--port", port)->required();
    serve->add_option("--repo", serve_repo)->required();
    serve->add_option("--host", host);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cache) return cmd_cache(dataset, cache_repo, cache_h);
        if (*synth) return cmd_synth(synth_out, seed, templates);
        if (*recon) return cmd_reconstruct(config_path, target, out_dir, repo_dir, no_clip);
        if (*eval) return cmd_evaluate(implant, truth, label, eval_h);
        if (*serve) return cmd_serve(port, serve_repo, host);
    } catch (const std::exception& e) {
        return fail(app.get_subcommands().front()->get_name(), e);
    }
    return 0;
}
