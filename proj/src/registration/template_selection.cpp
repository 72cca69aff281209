#include "cranio/registration/template_selection.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>

#include "cranio/common/error.hpp"
#include "cranio/common/parallel.hpp"

namespace cranio {

const char* to_string(SelectionMode mode) {
    return mode == SelectionMode::AllBestK ? "all_best_k" : "gasd_top_k";
}

SelectionMode selection_mode_from_string(const std::string& name) {
    if (name == "all_best_k") return SelectionMode::AllBestK;
    if (name == "gasd_top_k") return SelectionMode::GasdTopK;
    throw Error(errc::kInvalidArgument, "unknown selection mode '" + name + "'");
}

std::vector<RankedTemplate> select_templates(const TriMesh& target, const std::vector<LibraryCase>& library,
                                             SelectionMode mode, std::size_t k, const std::optional<RoiSphere>& roi,
                                             const IcpSettings& settings, const SelectionProgress& progress) {
    if (library.empty()) throw Error(errc::kInvalidArgument, "select_templates: empty library");
    if (k < 1 || k > library.size())
        throw Error(errc::kInvalidArgument, "select_templates: k must be in [1, library size]");
    for (const auto& c : library) {
        if (!c.mesh) throw Error(errc::kInvalidArgument, "select_templates: case '" + c.id + "' has no mesh");
    }

    std::vector<RankedTemplate> picked(library.size());
    std::vector<std::size_t> order(library.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < library.size(); ++i) picked[i].id = library[i].id;

    if (mode == SelectionMode::GasdTopK) {
        const GasdDescriptor td = gasd_descriptor(target);
        for (std::size_t i = 0; i < library.size(); ++i) picked[i].descriptor_distance = td.distance(library[i].descriptor);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (picked[a].descriptor_distance != picked[b].descriptor_distance)
                return picked[a].descriptor_distance < picked[b].descriptor_distance;
            return picked[a].id < picked[b].id;
        });
        order.resize(k);
    }

    std::mutex progress_mutex;
    std::size_t done = 0;
    parallel_for(order.size(), [&](std::size_t slot) {
        const std::size_t i = order[slot];
        picked[i].alignment = icp_align(*library[i].mesh, target, roi, settings);
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(++done, order.size());
        }
    });

    std::vector<RankedTemplate> out;
    out.reserve(order.size());
    for (std::size_t i : order) out.push_back(std::move(picked[i]));
    std::sort(out.begin(), out.end(), [](const RankedTemplate& a, const RankedTemplate& b) {
        if (a.alignment.fitness_mse != b.alignment.fitness_mse) return a.alignment.fitness_mse < b.alignment.fitness_mse;
        return a.id < b.id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

}  // namespace cranio
