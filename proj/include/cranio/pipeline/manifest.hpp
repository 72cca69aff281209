#pragma once

#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "cranio/pipeline/reconstruction.hpp"

namespace cranio {

extern const char* const kSoftwareVersion;

/// Reproducibility record of a run. Everything except "timings_ms" is a
/// function of config, inputs and software version.
nlohmann::json build_manifest(const PipelineConfig& config, const CaseContext& ctx, const ReconstructionState& state,
                              const std::map<std::string, double>& timings_ms, const StageError* error);

/// Manifest with "timings_ms" removed, for reproducibility comparisons.
nlohmann::json without_timings(nlohmann::json manifest);

nlohmann::json to_json(const AlignmentResult& a);
nlohmann::json to_json(const MetricsReport& r);

}  // namespace cranio
