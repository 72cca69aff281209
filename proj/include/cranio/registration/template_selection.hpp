#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cranio/registration/gasd.hpp"
#include "cranio/registration/icp.hpp"

namespace cranio {

enum class SelectionMode { AllBestK, GasdTopK };

const char* to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(const std::string& name);

struct LibraryCase {
    std::string id;
    const TriMesh* mesh = nullptr;
    GasdDescriptor descriptor;
};

struct RankedTemplate {
    std::string id;
    AlignmentResult alignment;
    /// Descriptor distance to the target (GasdTopK only, else 0).
    double descriptor_distance = 0.0;
};

/// Called once per finished alignment with (completed, total); calls are
/// serialized.
using SelectionProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Aligns library cases (as moving meshes) onto the target and keeps k.
/// AllBestK aligns everything and keeps the k smallest fitness_mse; GasdTopK
/// keeps the k nearest descriptors and aligns only those. The result is
/// sorted by fitness_mse, ties by id, independent of scheduling.
/// Throws invalid_argument for an empty library or k outside [1, size].
std::vector<RankedTemplate> select_templates(const TriMesh& target, const std::vector<LibraryCase>& library,
                                             SelectionMode mode, std::size_t k, const std::optional<RoiSphere>& roi,
                                             const IcpSettings& settings, const SelectionProgress& progress = {});

}  // namespace cranio
