#include "udn/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace udn::report {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), out_(path), width_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_)
    throw std::invalid_argument("csv row width mismatch in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::invalid_argument("missing column: " + name);
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error("ragged row in " + path.string());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

double EmpiricalCdf::at(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  if (it == values_.begin()) return 0.0;
  return fractions_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

EmpiricalCdf build_cdf(std::vector<double> samples) {
  if (samples.empty()) throw std::domain_error("build_cdf: no samples");
  std::sort(samples.begin(), samples.end());
  std::vector<double> values, fractions;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    values.push_back(samples[i]);
    fractions.push_back(static_cast<double>(i + 1) / n);
  }
  return {std::move(values), std::move(fractions)};
}

void write_cdf_csv(const std::filesystem::path& path,
                   const std::map<std::string, EmpiricalCdf>& cdfs, int points) {
  if (cdfs.empty() || points < 2) throw std::invalid_argument("write_cdf_csv: nothing to write");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [name, cdf] : cdfs) {
    lo = std::min(lo, cdf.values().front());
    hi = std::max(hi, cdf.values().back());
  }
  CsvWriter csv(path, {"method", "x", "fraction"});
  for (const auto& [name, cdf] : cdfs) {
    for (int i = 0; i < points; ++i) {
      const double x = lo + (hi - lo) * i / (points - 1);
      csv.row({name, format_number(x), format_number(cdf.at(x))});
    }
  }
}

double relative_gain(double a, double b) { return (a - b) / b; }

SweepTable sweep_report(const std::vector<SweepPoint>& points) {
  if (points.size() < 2) throw std::invalid_argument("sweep_report: need at least two points");
  SweepTable t;
  std::set<std::string> methods;
  for (const auto& [m, s] : points.front().by_method) {
    t.methods.push_back(m);
    methods.insert(m);
  }
  // Proposed first, then baseline, then anything else.
  std::stable_sort(t.methods.begin(), t.methods.end(), [](const auto& a, const auto& b) {
    auto rank = [](const std::string& m) { return m == "proposed" ? 0 : m == "baseline" ? 1 : 2; };
    return rank(a) < rank(b);
  });
  const bool has_gain = methods.count("proposed") && methods.count("baseline");
  for (const auto& p : points) {
    std::set<std::string> here;
    for (const auto& [m, s] : p.by_method) here.insert(m);
    if (here != methods)
      throw std::invalid_argument("sweep_report: point '" + p.label + "' has a different method set");
    t.labels.push_back(p.label);
    std::vector<sim::MetricSummary> row;
    for (const auto& m : t.methods) row.push_back(p.by_method.at(m));
    t.cells.push_back(std::move(row));
    if (has_gain)
      t.gain.push_back(relative_gain(p.by_method.at("proposed").mean, p.by_method.at("baseline").mean));
  }
  return t;
}

void write_sweep_table(const std::filesystem::path& stem, const SweepTable& table,
                       const std::string& key_name) {
  std::vector<std::string> header{key_name};
  for (const auto& m : table.methods)
    for (const char* s : {"_mean", "_ci_low", "_ci_high"}) header.push_back(m + s);
  if (!table.gain.empty()) header.push_back("gain");

  auto csv_path = stem;
  csv_path += ".csv";
  auto dat_path = stem;
  dat_path += ".dat";
  CsvWriter csv(csv_path, header);
  std::ofstream dat(dat_path);
  if (!dat) throw std::runtime_error("cannot write " + dat_path.string());
  dat << '#';
  for (const auto& h : header) dat << ' ' << h;
  dat << '\n';

  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    std::vector<std::string> cells{table.labels[i]};
    for (const auto& s : table.cells[i]) {
      cells.push_back(format_number(s.mean));
      cells.push_back(format_number(s.ci_low));
      cells.push_back(format_number(s.ci_high));
    }
    if (!table.gain.empty()) cells.push_back(format_number(table.gain[i]));
    csv.row(cells);
    std::string label = table.labels[i];
    std::replace(label.begin(), label.end(), ' ', '_');
    dat << label;
    for (std::size_t c = 1; c < cells.size(); ++c) dat << ' ' << cells[c];
    dat << '\n';
  }
}

}  // namespace udn::report
