#pragma once

#include <string>
#include <vector>

#include "cranio/geometry/mesh.hpp"
#include "cranio/geometry/roi.hpp"

namespace cranio {

/// Signed-distance summary of a subject mesh against a reference.
///
/// min/max/mae come from the signed subject-vertex distances; hd95 pools the
/// unsigned distances of both directions (subject vertices to the reference
/// surface and reference vertices to the subject surface). sample_count is
/// the number of subject vertices.
struct MetricsReport {
    std::string case_label;
    double min = 0.0;
    double max = 0.0;
    double mae = 0.0;
    double hd95 = 0.0;
    std::size_t sample_count = 0;
};

/// Linear interpolation between order statistics at rank q * (n - 1).
double percentile(std::vector<double> values, double q);
double hd95(const std::vector<double>& unsigned_pooled);

MetricsReport report(const TriMesh& subject, const TriMesh& reference, const std::string& label = "", double h = 1.0);

/// MAE over subject vertices with | |v - c| - r | <= band. Throws empty_band
/// when no vertex qualifies and invalid_argument when band <= 0.
double border_band_mae(const TriMesh& subject, const TriMesh& reference, const RoiSphere& roi, double band,
                       double h = 1.0);

inline constexpr const char* kReportCsvHeader = "case,min,max,mae,hd95,samples";
/// "case,min,max,mae,hd95,samples" row with shortest round-trip numbers.
std::string to_csv_row(const MetricsReport& report);

}  // namespace cranio
