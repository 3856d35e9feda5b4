#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace varsig::detail {

// Branch-free sin/cos for moderate arguments (|x| < 1e6) that the compiler
// can vectorize. Cody-Waite reduction by pi/2 followed by the Cephes minimax
// polynomials on [-pi/4, pi/4]; absolute error stays within a few ulp.
inline void sincos_kernel(double x, double& s_out, double& c_out) {
  constexpr double two_over_pi = 0.63661977236758134308;
  constexpr double dp1 = 1.5707962512969970703125;
  constexpr double dp2 = 7.54978941586159635336e-8;
  constexpr double dp3 = 5.3903028581581190529e-15;
  const double q = std::nearbyint(x * two_over_pi);
  const double r = ((x - q * dp1) - q * dp2) - q * dp3;
  const double z = r * r;
  const double sp = ((((( 1.58962301576546568060e-10 * z - 2.50507477628578072866e-8) * z
                         + 2.75573136213857245213e-6) * z - 1.98412698295895385996e-4) * z
                         + 8.33333333332211858878e-3) * z - 1.66666666666666307295e-1);
  const double cp = (((((-1.13585365213876817300e-11 * z + 2.08757008419747316778e-9) * z
                         - 2.75573141792967388112e-7) * z + 2.48015872888517045348e-5) * z
                         - 1.38888888888730564116e-3) * z + 4.16666666666665929218e-2);
  const double s = r + r * z * sp;
  const double c = 1.0 - 0.5 * z + z * z * cp;
  const std::int64_t quadrant = static_cast<std::int64_t>(q) & 3;
  const bool swap = quadrant & 1;
  const double ss = swap ? c : s;
  const double cc = swap ? s : c;
  s_out = (quadrant == 2 || quadrant == 3) ? -ss : ss;
  c_out = (quadrant == 1 || quadrant == 2) ? -cc : cc;
}

/// s[i] = sin(x[i]), c[i] = cos(x[i]).
inline void sincos_array(const double* __restrict x, double* __restrict s, double* __restrict c,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) sincos_kernel(x[i], s[i], c[i]);
}

}  // namespace varsig::detail
