#include "cranio/pipeline/synthetic_dataset.hpp"

#include <cstdio>

#include "cranio/common/binary_io.hpp"
#include "cranio/geometry/mesh_io.hpp"

namespace cranio {

namespace {
std::string case_id(const std::string& prefix, std::size_t n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", n);
    return prefix + buf;
}
}  // namespace

SyntheticDataset write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticParams& params,
                                         const std::string& prefix) {
    std::filesystem::create_directories(dir);
    SyntheticDataset ds;
    ds.fixture = make_synthetic_case(params);
    ds.target_id = case_id(prefix, 0);
    save_mesh(ds.fixture.target, dir / (ds.target_id + ".stl"));
    save_mesh(ds.fixture.ground_truth_implant, dir / (ds.target_id + ".truth.stl"));
    for (std::size_t i = 0; i < ds.fixture.templates.size(); ++i) {
        ds.template_ids.push_back(case_id(prefix, i + 1));
        save_mesh(ds.fixture.templates[i], dir / (ds.template_ids.back() + ".stl"));
    }
    ds.config.roi = ds.fixture.roi;
    ds.config.seed = static_cast<std::int64_t>(params.seed);
    ds.config_path = dir / (ds.target_id + ".config.json");
    io::write_file(ds.config_path, to_json(ds.config).dump(2) + "\n");
    return ds;
}

}  // namespace cranio
