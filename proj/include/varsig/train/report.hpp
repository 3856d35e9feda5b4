#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "varsig/core/forward_model.hpp"
#include "varsig/train/metrics.hpp"

namespace varsig {

struct MetricsRow {
  std::size_t record = 0;
  std::string method;
  std::size_t instance = 0;
  double psnr_db = 0.0;
  double fidelity_db = 0.0;
};

struct MethodAggregate {
  std::string method;
  std::size_t count = 0;
  double mean_psnr_db = 0.0;
  double mean_fidelity_db = 0.0;
};

/// Per-instance rows plus per-method means. Aggregates sort the values
/// before summing so they do not depend on row order.
struct MetricsReport {
  std::string system;
  PsnrFormula formula = PsnrFormula::peak;
  std::string config_hash;
  std::vector<std::string> methods;  // aggregate order
  std::vector<MetricsRow> rows;

  std::vector<MethodAggregate> aggregates() const;
  std::string to_csv() const;
  json to_json() const;
  /// Writes report.csv and report.json into `dir`.
  void write(const std::filesystem::path& dir) const;
};

/// Mean of `values` summed in ascending order.
double ordered_mean(std::vector<double> values);

}  // namespace varsig
