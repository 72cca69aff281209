#include "cranio/service/session.hpp"

#include <sstream>

#include "cranio/geometry/mesh_io.hpp"
#include "cranio/pipeline/manifest.hpp"
#include "cranio/voxelgrid/grid_io.hpp"

namespace cranio {

using nlohmann::json;

json ServiceError::payload() const {
    json j = {{"code", code()}, {"message", what()}};
    if (!field_.empty()) j["field"] = field_;
    return j;
}

const char* to_string(StageStatus s) {
    switch (s) {
        case StageStatus::Pending: return "pending";
        case StageStatus::Running: return "running";
        case StageStatus::Done: return "done";
        case StageStatus::Failed: return "failed";
    }
    return "unknown";
}

Stage first_stage_affected_by(const std::string& key) {
    if (key == "roi" || key == "clipping" || key == "icp") return Stage::Alignment;
    if (key == "threshold" || key == "voxel_size") return Stage::Fusion;
    if (key == "offset" || key == "operators") return Stage::Postprocess;
    return Stage::Selection;
}

namespace {

struct ArtifactInfo {
    const char* name;
    Stage owner;
    const char* content_type;
};

// "target" needs no stage; it is listed with owner Selection but served always.
constexpr ArtifactInfo kArtifacts[] = {
    {"target", Stage::Selection, "model/stl"},
    {"selection", Stage::Selection, "text/csv"},
    {"aligned_templates", Stage::Alignment, "model/stl"},
    {"ratio_histogram", Stage::Fusion, "text/csv"},
    {"ratio_grid", Stage::Fusion, "application/octet-stream"},
    {"implant", Stage::Postprocess, "model/stl"},
    {"distances", Stage::Metrics, "application/octet-stream"},
    {"report", Stage::Metrics, "text/csv"},
    {"manifest", Stage::Metrics, "application/json"},
};

const ArtifactInfo* artifact_info(const std::string& name) {
    for (const auto& a : kArtifacts) {
        if (name == a.name) return &a;
    }
    return nullptr;
}

std::vector<std::uint8_t> to_bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::size_t index_of(Stage s) { return static_cast<std::size_t>(s); }

}  // namespace

const std::vector<std::string>& SessionManager::artifact_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& a : kArtifacts) v.emplace_back(a.name);
        return v;
    }();
    return names;
}

SessionManager::SessionManager(Repository repo) : repo_(std::move(repo)) {}

SessionManager::~SessionManager() {
    std::map<std::string, std::shared_ptr<Session>> sessions;
    {
        std::lock_guard lock(mutex_);
        sessions.swap(sessions_);
    }
    for (auto& [id, s] : sessions) {
        if (s->worker.joinable()) s->worker.join();
    }
}

json SessionManager::list_cases() const {
    json out = json::array();
    for (const auto& c : repo_.cases) out.push_back({{"id", c.id}, {"has_ground_truth", c.ground_truth_path.has_value()}});
    return out;
}

std::shared_ptr<const CaseContext> SessionManager::context_for(const std::string& case_id) {
    std::lock_guard lock(context_mutex_);
    if (auto it = contexts_.find(case_id); it != contexts_.end()) return it->second;
    auto ctx = std::make_shared<const CaseContext>(load_case_context(repo_, case_id));
    contexts_[case_id] = ctx;
    return ctx;
}

json SessionManager::create_session(const std::string& case_id) {
    if (!repo_.find(case_id)) throw ServiceError(404, errc::kUnknownCase, "unknown case '" + case_id + "'");
    auto s = std::make_shared<Session>();
    s->case_id = case_id;
    s->ctx = context_for(case_id);
    {
        std::lock_guard lock(mutex_);
        s->id = "s" + std::to_string(next_id_++);
        sessions_[s->id] = s;
    }
    return {{"session_id", s->id}, {"config", to_json(s->config)}};
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "unknown session '" + session_id + "'");
    return it->second;
}

bool SessionManager::artifact_ready(const Session& s, const std::string& name, std::string& why) const {
    const ArtifactInfo* info = artifact_info(name);
    if (name == "target") return true;
    if (s.stages[index_of(info->owner)].status != StageStatus::Done) {
        why = std::string("artifact '") + name + "' needs stage " + to_string(info->owner) + " to be done";
        return false;
    }
    if ((name == "distances" || name == "report") && !s.state.report) {
        why = std::string("artifact '") + name + "' unavailable: " + s.state.metrics_note;
        return false;
    }
    return true;
}

json SessionManager::state_json(const Session& s) const {
    json stages = json::object();
    std::optional<Stage> running;
    for (Stage st : kStages) {
        const StageSlot& slot = s.stages[index_of(st)];
        json j = {{"status", to_string(slot.status)}, {"progress", slot.progress}};
        if (slot.status == StageStatus::Failed) {
            j["reason"] = slot.reason;
            j["code"] = slot.code;
        }
        if (slot.status == StageStatus::Running) running = st;
        stages[to_string(st)] = j;
    }
    json artifacts = json::array();
    for (const auto& a : kArtifacts) {
        std::string why;
        if (artifact_ready(s, a.name, why)) artifacts.push_back(a.name);
    }
    json selection = json::array();
    if (s.stages[index_of(Stage::Selection)].status == StageStatus::Done) {
        for (const auto& r : s.state.selection) selection.push_back({{"id", r.id}, {"fitness_mse", r.alignment.fitness_mse}});
    }
    json metrics = nullptr;
    if (s.stages[index_of(Stage::Metrics)].status == StageStatus::Done && s.state.report) metrics = to_json(*s.state.report);
    return {{"session_id", s.id},
            {"case_id", s.case_id},
            {"config", to_json(s.config)},
            {"running", running ? json(to_string(*running)) : json(nullptr)},
            {"stages", stages},
            {"selection", selection},
            {"metrics", metrics},
            {"artifacts", artifacts}};
}

json SessionManager::session_state(const std::string& session_id) const {
    const auto s = find(session_id);
    std::lock_guard lock(s->mutex);
    return state_json(*s);
}

json SessionManager::update_config(const std::string& session_id, const json& patch) {
    const auto s = find(session_id);
    if (!patch.is_object()) throw ServiceError(400, errc::kInvalidArgument, "config patch must be a JSON object");
    std::lock_guard lock(s->mutex);
    if (s->running) throw ServiceError(409, errc::kBusy, "a stage is running in this session");
    const json before = to_json(s->config);
    PipelineConfig next;
    try {
        next = config_from_json(merge_patch(before, patch));
    } catch (const ConfigError& e) {
        throw ServiceError(400, errc::kInvalidArgument, e.what(), e.field());
    }
    const json after = to_json(next);
    std::optional<Stage> earliest;
    for (const auto& [key, value] : after.items()) {
        if (before.contains(key) && before.at(key) == value) continue;
        const Stage st = first_stage_affected_by(key);
        if (!earliest || static_cast<int>(st) < static_cast<int>(*earliest)) earliest = st;
    }
    s->config = next;
    if (earliest) {
        s->state.reset_from(*earliest);
        for (Stage st : kStages) {
            if (static_cast<int>(st) >= static_cast<int>(*earliest)) s->stages[index_of(st)] = StageSlot{};
        }
    }
    return state_json(*s);
}

void SessionManager::execute_stage(const std::string& session_id, const std::string& stage_name) {
    const auto s = find(session_id);
    const auto stage = stage_from_string(stage_name);
    if (!stage) throw ServiceError(404, "unknown_stage", "unknown stage '" + stage_name + "'");
    std::lock_guard lock(s->mutex);
    if (s->running) throw ServiceError(409, errc::kBusy, "a stage is already running in this session");
    for (Stage st : kStages) {
        if (st == *stage) break;
        if (s->stages[index_of(st)].status != StageStatus::Done)
            throw ServiceError(409, errc::kStageOrder,
                               std::string("stage ") + to_string(*stage) + " needs " + to_string(st) + " to be done");
    }
    for (Stage st : kStages) {
        if (static_cast<int>(st) >= static_cast<int>(*stage)) s->stages[index_of(st)] = StageSlot{};
    }
    s->stages[index_of(*stage)].status = StageStatus::Running;
    s->running = true;
    if (s->worker.joinable()) s->worker.join();
    s->worker = std::jthread([this, s, st = *stage, config = s->config] { run_worker(s, st, config); });
}

void SessionManager::run_worker(std::shared_ptr<Session> s, Stage stage, PipelineConfig config) {
    StageSlot result;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::optional<Stage> fault;
        {
            std::lock_guard lock(mutex_);
            fault = fault_;
        }
        if (fault == stage) throw StageError(stage, "injected_fault", "injected failure");
        run_stage(stage, *s->ctx, config, s->state, [&](double f) {
            std::lock_guard lock(s->mutex);
            s->stages[index_of(stage)].progress = f;
        });
        result.status = StageStatus::Done;
        result.progress = 1.0;
    } catch (const StageError& e) {
        result.status = StageStatus::Failed;
        result.reason = e.what();
        result.code = e.code();
    } catch (const std::exception& e) {
        result.status = StageStatus::Failed;
        result.reason = std::string("stage ") + to_string(stage) + ": " + e.what();
        result.code = "internal_error";
    }
    std::lock_guard lock(s->mutex);
    if (result.status == StageStatus::Failed) result.progress = s->stages[index_of(stage)].progress;
    s->stages[index_of(stage)] = result;
    s->timings[to_string(stage)] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    s->running = false;
    s->idle.notify_all();
}

void SessionManager::wait_idle(const std::string& session_id) const {
    const auto s = find(session_id);
    std::unique_lock lock(s->mutex);
    s->idle.wait(lock, [&] { return !s->running; });
}

void SessionManager::inject_failure(std::optional<Stage> stage) {
    std::lock_guard lock(mutex_);
    fault_ = stage;
}

Artifact SessionManager::fetch_artifact(const std::string& session_id, const std::string& name) const {
    const auto s = find(session_id);
    const ArtifactInfo* info = artifact_info(name);
    if (!info) throw ServiceError(404, "unknown_artifact", "unknown artifact '" + name + "'");
    std::lock_guard lock(s->mutex);
    std::string why;
    if (!artifact_ready(*s, name, why)) throw ServiceError(409, errc::kNotReady, why);

    Artifact a{info->content_type, {}};
    const ReconstructionState& st = s->state;
    if (name == "target") {
        a.bytes = encode_stl(s->ctx->target_mesh);
    } else if (name == "selection") {
        std::ostringstream csv;
        csv << "id,fitness_mse,descriptor_distance\n";
        for (const auto& r : st.selection) csv << r.id << ',' << json(r.alignment.fitness_mse).dump() << ','
                                              << json(r.descriptor_distance).dump() << '\n';
        a.bytes = to_bytes(csv.str());
    } else if (name == "aligned_templates") {
        std::vector<TriMesh> parts;
        for (const auto& al : st.alignments)
            parts.push_back(transform_mesh(s->ctx->template_mesh(al.id), al.alignment.transform));
        a.bytes = encode_stl(merge(parts));
    } else if (name == "ratio_histogram") {
        a.bytes = to_bytes(ratio_histogram_csv(*st.ratio, st.alignments.size()));
    } else if (name == "ratio_grid") {
        a.bytes = encode_grid(*st.ratio);
    } else if (name == "implant") {
        a.bytes = encode_stl(*st.implant);
    } else if (name == "distances") {
        a.bytes = encode_distances(st.distances);
    } else if (name == "report") {
        a.bytes = to_bytes(std::string(kReportCsvHeader) + "\n" + to_csv_row(*st.report) + "\n");
    } else if (name == "manifest") {
        a.bytes = to_bytes(build_manifest(s->config, *s->ctx, st, s->timings, nullptr).dump(2) + "\n");
    }
    return a;
}

}  // namespace cranio
