#include "dedcons/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace dedcons {

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s.empty() || s == "-0") s = "0";
  return s;
}

std::string format_cell(double mean, double std_err) {
  return format_metric(mean) + " ± " + format_metric(std_err);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_series_csv(const std::string& path, const std::string& label,
                      const DCSeries& series) {
  auto out = open_out(path);
  const std::string axis = series.k_marginalized ? "Hop" : "Prefix";
  out << "series";
  for (const auto& p : series.points) out << "," << axis << " " << p.hop;
  out << "\n" << label;
  for (const auto& p : series.points)
    out << "," << format_cell(p.mean_dc, p.std_err);
  out << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_matrix_csv(const std::string& path,
                      const std::vector<EvalRecord>& records) {
  struct Tally {
    long correct = 0;
    long total = 0;
  };
  std::map<std::pair<int, int>, Tally> cells;
  for (const auto& r : records) {
    auto& cell = cells[{r.prefix_k, r.hop}];
    ++cell.total;
    if (r.correct) ++cell.correct;
  }
  auto out = open_out(path);
  out << "prefix_k,hop,dc,count\n";
  char buf[64];
  for (const auto& [key, tally] : cells) {
    std::snprintf(buf, sizeof(buf), "%.10g",
                  static_cast<double>(tally.correct) /
                      static_cast<double>(tally.total));
    out << key.first << "," << key.second << "," << buf << "," << tally.total
        << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_report_files(const std::string& dir, const MetricReport& report,
                        const std::vector<EvalRecord>& records,
                        const std::string& label) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir + "/report.json");
    out << report.to_json().dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + dir);
  }
  write_series_csv(dir + "/dc_by_hop.csv", label, report.by_hop);
  write_series_csv(dir + "/dc_by_prefix.csv", label, report.by_prefix);
  write_matrix_csv(dir + "/matrix.csv", records);
}

}  // namespace dedcons
