#include "varsig/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "varsig/core/error.hpp"

namespace varsig {

PsnrFormula psnr_formula_from_string(const std::string& s) {
  if (s == "peak") return PsnrFormula::peak;
  if (s == "standard") return PsnrFormula::standard;
  throw ConfigError("psnr formula must be 'peak' or 'standard', got '" + s + "'");
}

const char* to_string(PsnrFormula f) noexcept {
  return f == PsnrFormula::peak ? "peak" : "standard";
}

double psnr_raw(std::span<const double> f_hat, std::span<const double> f_true,
                PsnrFormula formula) {
  if (f_hat.size() != f_true.size() || f_true.empty()) {
    throw ShapeError("psnr: estimate has " + std::to_string(f_hat.size()) +
                     " values, reference has " + std::to_string(f_true.size()));
  }
  const double peak = *std::max_element(f_true.begin(), f_true.end());
  if (!(peak > 0.0)) throw DomainError("psnr: max of the reference must be positive");
  double se = 0.0;
  for (std::size_t i = 0; i < f_true.size(); ++i) {
    const double d = f_hat[i] - f_true[i];
    se += d * d;
  }
  if (!std::isfinite(se)) throw DomainError("psnr: non-finite estimate");
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(f_true.size());
  const double num = formula == PsnrFormula::peak ? peak : peak * peak;
  return 10.0 * std::log10(num / mse);
}

double psnr(std::span<const double> f_hat, std::span<const double> f_true, PsnrFormula formula) {
  return std::min(psnr_raw(f_hat, f_true, formula), kPsnrCap);
}

double fidelity(std::span<const double> f_hat, std::span<const double> g_true,
                const ForwardModel& fm, PsnrFormula formula) {
  const auto g = fm.apply(f_hat);
  return psnr(g, g_true, formula);
}

}  // namespace varsig
