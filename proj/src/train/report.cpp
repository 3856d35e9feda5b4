#include "varsig/train/report.hpp"

#include <algorithm>
#include <cstdio>

#include "varsig/core/dataset.hpp"
#include "varsig/core/tensor_file.hpp"

namespace varsig {

double ordered_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::vector<MethodAggregate> MetricsReport::aggregates() const {
  std::vector<std::string> order = methods;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
  }
  std::vector<MethodAggregate> out;
  for (const auto& m : order) {
    std::vector<double> p, f;
    for (const auto& r : rows) {
      if (r.method != m) continue;
      p.push_back(r.psnr_db);
      f.push_back(r.fidelity_db);
    }
    out.push_back({m, p.size(), ordered_mean(p), ordered_mean(f)});
  }
  return out;
}

std::string MetricsReport::to_csv() const {
  std::string s = "# config_hash=" + config_hash + "\n";
  s += "# psnr_formula=" + std::string(to_string(formula)) + "\n";
  s += "record,method,instance,psnr_db,fidelity_db\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%zu,%.6f,%.6f\n", r.record, r.method.c_str(), r.instance,
                  r.psnr_db, r.fidelity_db);
    s += buf;
  }
  return s;
}

json MetricsReport::to_json() const {
  json j;
  j["system"] = system;
  j["config_hash"] = config_hash;
  j["psnr_formula"] = to_string(formula);
  json agg = json::array();
  for (const auto& a : aggregates()) {
    agg.push_back({{"method", a.method},
                   {"count", a.count},
                   {"mean_psnr_db", a.mean_psnr_db},
                   {"mean_fidelity_db", a.mean_fidelity_db}});
  }
  j["aggregates"] = agg;
  json rs = json::array();
  for (const auto& r : rows) {
    rs.push_back({{"record", r.record},
                  {"method", r.method},
                  {"instance", r.instance},
                  {"psnr_db", r.psnr_db},
                  {"fidelity_db", r.fidelity_db}});
  }
  j["rows"] = rs;
  return j;
}

void MetricsReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.csv", to_csv());
  write_json_file(dir / "report.json", to_json());
}

}  // namespace varsig
