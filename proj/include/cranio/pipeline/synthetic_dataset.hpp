#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cranio/geometry/synthetic.hpp"
#include "cranio/pipeline/config.hpp"

namespace cranio {

struct SyntheticDataset {
    std::string target_id;
    std::vector<std::string> template_ids;
    std::filesystem::path config_path;
    PipelineConfig config;
    SyntheticCase fixture;
};

/// Writes a synthetic case as a dataset directory: <prefix>000.stl (the
/// defective target), <prefix>000.truth.stl, one <prefix>NNN.stl per template
/// and <prefix>000.config.json holding the default config with the case ROI.
SyntheticDataset write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticParams& params,
                                         const std::string& prefix = "SYN");

}  // namespace cranio
