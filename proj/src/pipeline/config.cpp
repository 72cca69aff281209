#include "cranio/pipeline/config.hpp"

#include <cmath>
#include <set>

#include "cranio/common/binary_io.hpp"

namespace cranio {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json sphere_json(const RoiSphere& s) { return {{"center", vec_json(s.center)}, {"radius", s.radius}}; }

json operator_json(const GridOperator& op) {
    switch (op.type) {
        case GridOperator::Type::Segment: return {{"type", "segment"}};
        case GridOperator::Type::Filter: return {{"type", "filter"}, {"first_n", op.first_n}};
        case GridOperator::Type::Smooth:
            return {{"type", "smooth"}, {"kind", to_string(op.smooth)}, {"width", op.width}, {"iterations", op.iterations}};
    }
    return {};
}

// Typed accessors that report the dotted path of the offending field.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        const std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [key, value] : j_.items()) {
            if (!ok.count(key)) throw ConfigError(sub(key), "unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) const { return j_.at(key); }
    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void number(const char* key, double& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(sub(key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(sub(key), "must be finite");
    }
    template <class Int>
    void integer(const char* key, Int& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(sub(key), "expected an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v.get<std::int64_t>() < 0) throw ConfigError(sub(key), "must be >= 0");
        }
        out = v.get<Int>();
    }
    void boolean(const char* key, bool& out) const {
        if (!has(key)) return;
        if (!j_.at(key).is_boolean()) throw ConfigError(sub(key), "expected true or false");
        out = j_.at(key).get<bool>();
    }
    void string(const char* key, std::string& out) const {
        if (!has(key)) return;
        if (!j_.at(key).is_string()) throw ConfigError(sub(key), "expected a string");
        out = j_.at(key).get<std::string>();
    }
    void vec3(const char* key, Vec3& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 3) throw ConfigError(sub(key), "expected [x, y, z]");
        for (int a = 0; a < 3; ++a) {
            if (!v[a].is_number()) throw ConfigError(sub(key), "expected [x, y, z]");
            out[a] = v[a].get<double>();
            if (!std::isfinite(out[a])) throw ConfigError(sub(key), "must be finite");
        }
    }

private:
    const json& j_;
    std::string path_;
};

RoiSphere read_sphere(const json& j, const std::string& path, RoiSphere s) {
    const Reader r(j, path);
    r.allow({"center", "radius"});
    r.vec3("center", s.center);
    r.number("radius", s.radius);
    return s;
}

GridOperator read_operator(const json& j, const std::string& path) {
    const Reader r(j, path);
    std::string type;
    if (!r.has("type")) throw ConfigError(r.sub("type"), "missing operator type");
    r.string("type", type);
    if (type == "segment") {
        r.allow({"type"});
        return GridOperator::segment();
    }
    if (type == "filter") {
        r.allow({"type", "first_n"});
        std::size_t n = 1;
        r.integer("first_n", n);
        return GridOperator::filter(n);
    }
    if (type == "smooth") {
        r.allow({"type", "kind", "width", "iterations"});
        std::string kind = "gaussian";
        int width = 1, iterations = 1;
        r.string("kind", kind);
        r.integer("width", width);
        r.integer("iterations", iterations);
        SmoothKind k;
        try {
            k = smooth_kind_from_string(kind);
        } catch (const Error& e) {
            throw ConfigError(r.sub("kind"), e.what());
        }
        return GridOperator::smoothing(k, width, iterations);
    }
    throw ConfigError(r.sub("type"), "unknown operator '" + type + "'");
}

}  // namespace

void PipelineConfig::validate() const {
    if (!(voxel_size > 0.0)) throw ConfigError("voxel_size", "must be > 0");
    if (!(threshold >= 0.0 && threshold < 1.0)) throw ConfigError("threshold", "must be in [0, 1)");
    if (selection.k < 1) throw ConfigError("selection.k", "must be >= 1");
    try {
        icp.validate();
    } catch (const Error& e) {
        const std::string msg = e.what();
        throw ConfigError(msg.substr(0, msg.find(' ')), msg.substr(msg.find(' ') + 1));
    }
    if (!(roi.radius > 0.0)) throw ConfigError("roi.radius", "must be > 0");
    if (!(offset.base_offset >= 0.0)) throw ConfigError("offset.base_offset", "must be >= 0");
    if (!(offset.falloff > 0.0)) throw ConfigError("offset.falloff", "must be > 0");
    for (std::size_t i = 0; i < offset.border_markers.size(); ++i) {
        if (!(offset.border_markers[i].radius > 0.0))
            throw ConfigError("offset.border_markers[" + std::to_string(i) + "].radius", "must be > 0");
    }
    for (std::size_t i = 0; i < operators.size(); ++i) {
        const auto& op = operators[i];
        if (op.type != GridOperator::Type::Smooth) continue;
        const std::string base = "operators[" + std::to_string(i) + "]";
        if (op.width < 1) throw ConfigError(base + ".width", "must be >= 1 voxel");
        if (op.iterations < 0) throw ConfigError(base + ".iterations", "must be >= 0");
    }
}

json to_json(const PipelineConfig& c) {
    json markers = json::array();
    for (const auto& m : c.offset.border_markers) markers.push_back(sphere_json(m));
    json ops = json::array();
    for (const auto& op : c.operators) ops.push_back(operator_json(op));
    return {
        {"voxel_size", c.voxel_size},
        {"threshold", c.threshold},
        {"selection", {{"mode", to_string(c.selection.mode)}, {"k", c.selection.k}}},
        {"icp",
         {{"objective", to_string(c.icp.objective)},
          {"max_iterations", c.icp.max_iterations},
          {"mse_threshold", c.icp.mse_threshold},
          {"mse_delta_threshold", c.icp.mse_delta_threshold},
          {"max_correspondence_distance", c.icp.max_correspondence_distance},
          {"normal_compat_min_cos", c.icp.normal_compat_min_cos},
          {"reciprocal_correspondences", c.icp.reciprocal_correspondences}}},
        {"clipping", c.clipping},
        {"roi", sphere_json(c.roi)},
        {"offset", {{"base_offset", c.offset.base_offset}, {"falloff", c.offset.falloff}, {"border_markers", markers}}},
        {"operators", ops},
        {"seed", c.seed},
    };
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    const Reader r(j, "");
    r.allow({"voxel_size", "threshold", "selection", "icp", "clipping", "roi", "offset", "operators", "seed"});
    r.number("voxel_size", c.voxel_size);
    r.number("threshold", c.threshold);
    if (r.has("selection")) {
        const Reader s(r.raw("selection"), "selection");
        s.allow({"mode", "k"});
        std::string mode = to_string(c.selection.mode);
        s.string("mode", mode);
        try {
            c.selection.mode = selection_mode_from_string(mode);
        } catch (const Error& e) {
            throw ConfigError("selection.mode", e.what());
        }
        s.integer("k", c.selection.k);
    }
    if (r.has("icp")) {
        const Reader s(r.raw("icp"), "icp");
        s.allow({"objective", "max_iterations", "mse_threshold", "mse_delta_threshold", "max_correspondence_distance",
                 "normal_compat_min_cos", "reciprocal_correspondences"});
        std::string objective = to_string(c.icp.objective);
        s.string("objective", objective);
        try {
            c.icp.objective = icp_objective_from_string(objective);
        } catch (const Error& e) {
            throw ConfigError("icp.objective", e.what());
        }
        s.integer("max_iterations", c.icp.max_iterations);
        s.number("mse_threshold", c.icp.mse_threshold);
        s.number("mse_delta_threshold", c.icp.mse_delta_threshold);
        s.number("max_correspondence_distance", c.icp.max_correspondence_distance);
        s.number("normal_compat_min_cos", c.icp.normal_compat_min_cos);
        s.boolean("reciprocal_correspondences", c.icp.reciprocal_correspondences);
    }
    r.boolean("clipping", c.clipping);
    if (r.has("roi")) c.roi = read_sphere(r.raw("roi"), "roi", c.roi);
    if (r.has("offset")) {
        const Reader s(r.raw("offset"), "offset");
        s.allow({"base_offset", "falloff", "border_markers"});
        s.number("base_offset", c.offset.base_offset);
        s.number("falloff", c.offset.falloff);
        if (s.has("border_markers")) {
            const json& list = s.raw("border_markers");
            if (!list.is_array()) throw ConfigError("offset.border_markers", "expected a list");
            c.offset.border_markers.clear();
            for (std::size_t i = 0; i < list.size(); ++i)
                c.offset.border_markers.push_back(
                    read_sphere(list[i], "offset.border_markers[" + std::to_string(i) + "]", RoiSphere{}));
        }
    }
    if (r.has("operators")) {
        const json& list = r.raw("operators");
        if (!list.is_array()) throw ConfigError("operators", "expected a list");
        c.operators.clear();
        for (std::size_t i = 0; i < list.size(); ++i)
            c.operators.push_back(read_operator(list[i], "operators[" + std::to_string(i) + "]"));
    }
    r.integer("seed", c.seed);
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw Error(errc::kMalformed, "malformed file: config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

json merge_patch(json base, const json& patch) {
    if (!patch.is_object() || !base.is_object()) return patch;
    for (const auto& [key, value] : patch.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object())
            base[key] = merge_patch(base[key], value);
        else
            base[key] = value;
    }
    return base;
}

}  // namespace cranio
