#pragma once

#include <string>
#include <vector>

#include "dedcons/metrics.hpp"

namespace dedcons {

/// Four-decimal rendering with trailing zeros (and a bare trailing dot)
/// trimmed: 0.8900 -> "0.89", 0.0135 -> "0.0135", 1.0000 -> "1".
std::string format_metric(double v);

/// Table cell "mean ± se" in format_metric rendering.
std::string format_cell(double mean, double std_err);

/// One-row table with hop (or prefix) columns and "value ± se" cells.
void write_series_csv(const std::string& path, const std::string& label,
                      const DCSeries& series);

/// Long-form per-(prefix, hop) cell table for plotting.
void write_matrix_csv(const std::string& path,
                      const std::vector<EvalRecord>& records);

/// report.json + dc_by_hop.csv + dc_by_prefix.csv + matrix.csv under dir.
void write_report_files(const std::string& dir, const MetricReport& report,
                        const std::vector<EvalRecord>& records,
                        const std::string& label);

}  // namespace dedcons
