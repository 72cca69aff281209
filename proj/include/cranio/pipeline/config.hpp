#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cranio/common/error.hpp"
#include "cranio/registration/icp.hpp"
#include "cranio/registration/template_selection.hpp"
#include "cranio/voxelgrid/fusion.hpp"
#include "cranio/voxelgrid/operators.hpp"

namespace cranio {

struct SelectionSettings {
    SelectionMode mode = SelectionMode::AllBestK;
    std::size_t k = 20;
    bool operator==(const SelectionSettings&) const = default;
};

/// Every tunable of a reconstruction run. Absent JSON keys keep these
/// defaults; unknown keys are rejected.
struct PipelineConfig {
    double voxel_size = 0.5;
    double threshold = 0.5;
    SelectionSettings selection;
    IcpSettings icp;
    bool clipping = true;
    RoiSphere roi{Vec3::Zero(), 50.0};
    OffsetField offset;
    std::vector<GridOperator> operators{GridOperator::segment(), GridOperator::filter(1)};
    std::int64_t seed = 0;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// Invalid configuration value; field() is the dotted key path.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(errc::kInvalidArgument, field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

nlohmann::json to_json(const PipelineConfig& config);
/// Defaults overlaid with `j`, then validated.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

/// Recursive object merge (arrays and scalars replace); used for PATCH.
nlohmann::json merge_patch(nlohmann::json base, const nlohmann::json& patch);

}  // namespace cranio
