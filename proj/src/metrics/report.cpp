#include "cranio/metrics/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "cranio/common/error.hpp"
#include "cranio/metrics/surface_distance.hpp"

namespace cranio {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(errc::kInvalidArgument, "percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw Error(errc::kInvalidArgument, "percentile rank must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double rank = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double hd95(const std::vector<double>& unsigned_pooled) { return percentile(unsigned_pooled, 0.95); }

MetricsReport report(const TriMesh& subject, const TriMesh& reference, const std::string& label, double h) {
    const std::vector<double> sd = signed_distances(subject, reference, h);
    MetricsReport r;
    r.case_label = label;
    r.sample_count = sd.size();
    r.min = *std::min_element(sd.begin(), sd.end());
    r.max = *std::max_element(sd.begin(), sd.end());
    double sum = 0.0;
    std::vector<double> pooled;
    pooled.reserve(sd.size() + reference.vertices.size());
    for (double d : sd) {
        sum += std::abs(d);
        pooled.push_back(std::abs(d));
    }
    r.mae = sum / static_cast<double>(sd.size());
    if (!subject.triangles.empty()) {
        const std::vector<double> back = unsigned_distances(reference.vertices, subject);
        pooled.insert(pooled.end(), back.begin(), back.end());
    }
    r.hd95 = hd95(pooled);
    return r;
}

double border_band_mae(const TriMesh& subject, const TriMesh& reference, const RoiSphere& roi, double band,
                       double h) {
    if (!(band > 0.0)) throw Error(errc::kInvalidArgument, "border band must be > 0");
    TriMesh in_band;
    for (const auto& v : subject.vertices) {
        if (std::abs((v - roi.center).norm() - roi.radius) <= band) in_band.vertices.push_back(v);
    }
    if (in_band.vertices.empty()) throw Error(errc::kEmptyBand, "empty band: no subject vertex near the ROI border");
    const std::vector<double> sd = signed_distances(in_band, reference, h);
    double sum = 0.0;
    for (double d : sd) sum += std::abs(d);
    return sum / static_cast<double>(sd.size());
}

namespace {
void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}
}  // namespace

std::string to_csv_row(const MetricsReport& r) {
    std::string out = r.case_label;
    for (double v : {r.min, r.max, r.mae, r.hd95}) {
        out += ',';
        append_number(out, v);
    }
    out += ',';
    out += std::to_string(r.sample_count);
    return out;
}

}  // namespace cranio
