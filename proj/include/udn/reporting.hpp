#pragma once

// Plot-data and table output. Everything here is a pure function of its
// inputs; numbers are printed with a fixed format so reruns are
// byte-identical.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "udn/simulator.hpp"

namespace udn::report {

std::string format_number(double x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws std::invalid_argument if absent.
  std::size_t column(const std::string& name) const;
};

/// Comma-separated, no quoting (the writers here never emit commas in cells).
CsvTable read_csv(const std::filesystem::path& path);

class EmpiricalCdf {
 public:
  EmpiricalCdf(std::vector<double> sorted_values, std::vector<double> fractions)
      : values_(std::move(sorted_values)), fractions_(std::move(fractions)) {}

  /// Fraction of samples <= x.
  double at(double x) const;
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& fractions() const { return fractions_; }

 private:
  std::vector<double> values_;     // distinct, ascending
  std::vector<double> fractions_;  // cumulative, last is 1
};

/// Throws std::domain_error on empty input.
EmpiricalCdf build_cdf(std::vector<double> samples);

/// method,x,fraction at `points` evenly spaced x over the pooled range.
void write_cdf_csv(const std::filesystem::path& path,
                   const std::map<std::string, EmpiricalCdf>& cdfs, int points = 201);

struct SweepPoint {
  std::string label;
  std::map<std::string, sim::MetricSummary> by_method;
};

struct SweepTable {
  std::vector<std::string> methods;  // column order
  std::vector<std::string> labels;
  std::vector<std::vector<sim::MetricSummary>> cells;  // [point][method]
  std::vector<double> gain;  // (proposed - baseline) / baseline; empty if either is absent
};

/// Throws std::invalid_argument if fewer than two points or the method sets
/// differ between points.
SweepTable sweep_report(const std::vector<SweepPoint>& points);

/// Writes <stem>.csv and a whitespace-separated <stem>.dat for plotting.
void write_sweep_table(const std::filesystem::path& stem, const SweepTable& table,
                       const std::string& key_name);

/// Relative gain (a - b) / b.
double relative_gain(double a, double b);

}  // namespace udn::report
