#pragma once

#include <array>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "cranio/pipeline/reconstruction.hpp"

namespace cranio {

/// Service-level failure: an error code from errc plus the HTTP status it
/// maps to and, for rejected parameters, the offending field.
class ServiceError : public Error {
public:
    ServiceError(int status, std::string code, const std::string& message, std::string field = {})
        : Error(std::move(code), message), status_(status), field_(std::move(field)) {}
    int status() const noexcept { return status_; }
    const std::string& field() const noexcept { return field_; }
    nlohmann::json payload() const;

private:
    int status_;
    std::string field_;
};

enum class StageStatus { Pending, Running, Done, Failed };
const char* to_string(StageStatus s);

struct Artifact {
    std::string content_type;
    std::vector<std::uint8_t> bytes;
};

/// Earliest stage invalidated by changing the given top-level config key.
/// Unknown keys (and seed) reset everything.
Stage first_stage_affected_by(const std::string& config_key);

/// Interactive sessions over a read-only repository. Each session runs at
/// most one stage at a time on its own worker thread; sessions never share
/// mutable state.
class SessionManager {
public:
    explicit SessionManager(Repository repo);
    ~SessionManager();

    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    /// [{id, has_ground_truth}]
    nlohmann::json list_cases() const;
    /// {session_id, config}
    nlohmann::json create_session(const std::string& case_id);
    /// Full state: config, per-stage status/progress/reason, artifacts.
    nlohmann::json session_state(const std::string& session_id) const;
    /// Applies a partial config atomically and resets dependent stages.
    nlohmann::json update_config(const std::string& session_id, const nlohmann::json& patch);
    /// Starts a stage in the background. Upstream stages must be done and no
    /// stage of this session may be running.
    void execute_stage(const std::string& session_id, const std::string& stage_name);
    Artifact fetch_artifact(const std::string& session_id, const std::string& name) const;

    /// Blocks until the session has no running stage.
    void wait_idle(const std::string& session_id) const;

    /// Test hook: the given stage fails with code "injected_fault" while set.
    void inject_failure(std::optional<Stage> stage);

    static const std::vector<std::string>& artifact_names();

private:
    struct StageSlot {
        StageStatus status = StageStatus::Pending;
        double progress = 0.0;
        std::string reason;
        std::string code;
    };
    struct Session {
        std::string id;
        std::string case_id;
        std::shared_ptr<const CaseContext> ctx;
        PipelineConfig config;
        std::array<StageSlot, kStages.size()> stages;
        ReconstructionState state;
        std::map<std::string, double> timings;
        mutable std::mutex mutex;
        mutable std::condition_variable idle;
        bool running = false;
        std::jthread worker;
    };

    std::shared_ptr<Session> find(const std::string& session_id) const;
    std::shared_ptr<const CaseContext> context_for(const std::string& case_id);
    nlohmann::json state_json(const Session& s) const;
    bool artifact_ready(const Session& s, const std::string& name, std::string& why) const;
    void run_worker(std::shared_ptr<Session> s, Stage stage, PipelineConfig config);

    Repository repo_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::shared_ptr<const CaseContext>> contexts_;
    std::mutex context_mutex_;
    std::uint64_t next_id_ = 1;
    std::optional<Stage> fault_;
};

}  // namespace cranio
