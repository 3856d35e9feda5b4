#pragma once

#include <span>

#include "varsig/core/forward_model.hpp"

namespace varsig {

enum class PsnrFormula {
  peak,      // 10 log10(max(f) / MSE)
  standard,  // 10 log10(max(f)^2 / MSE)
};

inline constexpr double kPsnrCap = 99.0;

PsnrFormula psnr_formula_from_string(const std::string& s);
const char* to_string(PsnrFormula f) noexcept;

/// Uncapped PSNR in dB; +inf when f_hat == f_true exactly.
double psnr_raw(std::span<const double> f_hat, std::span<const double> f_true,
                PsnrFormula formula = PsnrFormula::peak);

/// PSNR capped at kPsnrCap, the value used in reports.
double psnr(std::span<const double> f_hat, std::span<const double> f_true,
            PsnrFormula formula = PsnrFormula::peak);

/// psnr(A(f_hat), g_true).
double fidelity(std::span<const double> f_hat, std::span<const double> g_true,
                const ForwardModel& fm, PsnrFormula formula = PsnrFormula::peak);

}  // namespace varsig
