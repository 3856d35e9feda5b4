#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "varsig/core/error.hpp"
#include "varsig/physics/fresnel.hpp"

using namespace varsig;

namespace {

std::vector<cplx> random_field(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<cplx> e(n * n);
  for (auto& z : e) z = {rng.normal(), rng.normal()};
  return e;
}

double rel_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

const FresnelPropagator& prop() {
  static const FresnelPropagator p{FresnelConfig{}};
  return p;
}

}  // namespace

TEST(FresnelConfig, DefaultsAreValid) {
  const FresnelConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_NEAR(c.fresnel_number(), 101.6, 1e-9);
  FresnelConfig coarse = c;
  coarse.distance_m = 0.05;  // N_F = 12.7: edge phase step > pi
  EXPECT_THROW(coarse.validate(), ConfigError);
  EXPECT_THROW(FresnelConfig::from_json(json{{"wavelength", 1}}), ConfigError);
}

TEST(FresnelPropagate, ZeroFieldStaysZero) {
  for (const auto& z : prop().propagate(std::vector<cplx>(64 * 64))) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(FresnelPropagate, CentredImpulseReproducesTheKernel) {
  std::vector<cplx> e(64 * 64);
  e[32 * 64 + 32] = 1.0;
  const auto out = prop().propagate(e);
  const double c = std::numbers::pi / FresnelConfig{}.fresnel_number();
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const cplx k = std::polar(1.0, c * ((x - 32) * (x - 32) + (y - 32) * (y - 32)));
      EXPECT_NEAR(std::abs(out[y * 64 + x] - k), 0.0, 1e-12);
    }
  }
}

TEST(FresnelPropagate, MatchesDirectDoubleSum) {
  const auto e = random_field(64, 3);
  EXPECT_LT(rel_err(prop().propagate(e), oracle::fresnel_direct(e, FresnelConfig{})), 1e-9);
}

TEST(FresnelPropagate, MatchesDirectDoubleSumOnOtherGeometry) {
  FresnelConfig c;
  c.grid = 16;
  c.distance_m = 0.1;
  const auto e = random_field(16, 4);
  EXPECT_LT(rel_err(fresnel_propagate(e, c), oracle::fresnel_direct(e, c)), 1e-9);
}

TEST(FresnelPropagate, WrongGridIsAShapeError) {
  EXPECT_THROW(prop().propagate(std::vector<cplx>(10)), ShapeError);
}

TEST(FresnelPropagate, IsLinear) {
  const auto e1 = random_field(64, 5), e2 = random_field(64, 6);
  const cplx a(0.3, -1.2), b(2.0, 0.5);
  std::vector<cplx> mix(e1.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * e1[i] + b * e2[i];
  const auto p1 = prop().propagate(e1), p2 = prop().propagate(e2), pm = prop().propagate(mix);
  double scale = 0;
  for (const auto& z : pm) scale = std::max(scale, std::abs(z));
  for (std::size_t i = 0; i < mix.size(); ++i) EXPECT_LT(std::abs(pm[i] - (a * p1[i] + b * p2[i])), 1e-12 * scale);
}

TEST(FresnelPropagate, AdjointInnerProduct) {
  const auto x = random_field(64, 7), y = random_field(64, 8);
  const auto ax = prop().propagate(x), aty = prop().propagate_adjoint(y);
  cplx lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lhs += ax[i] * std::conj(y[i]);
    rhs += x[i] * std::conj(aty[i]);
  }
  EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::abs(lhs));
}

TEST(HologramIntensity, ReferenceOnly) {
  for (double v : hologram_intensity(std::vector<cplx>(16), 1.5)) EXPECT_DOUBLE_EQ(v, 2.25);
}

TEST(HologramIntensity, NoReferenceIsModulusSquared) {
  const auto e = random_field(4, 9);
  const auto i = hologram_intensity(e, 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) EXPECT_DOUBLE_EQ(i[k], std::norm(e[k]));
}

TEST(HologramIntensity, ThreeTermExpansion) {
  const auto e = random_field(64, 10);
  const double a = 1.3;
  const auto I = hologram_intensity(e, a);
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double expanded = a * a + 2.0 * a * e[k].real() + std::norm(e[k]);
    EXPECT_NEAR(I[k], expanded, 1e-12 * (1.0 + expanded));
    EXPECT_GE(I[k], 0.0);
  }
}

TEST(BackPropagate, ZeroFieldStaysZero) {
  for (const auto& z : prop().back_propagate(std::vector<cplx>(64 * 64))) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(BackPropagate, ConvolvesWithTheConjugateKernel) {
  std::vector<cplx> e(64 * 64);
  e[32 * 64 + 32] = 1.0;
  const auto out = prop().back_propagate(e);
  const double nf = FresnelConfig{}.fresnel_number();
  const double c = std::numbers::pi / nf;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const cplx k = std::polar(1.0, -c * ((x - 32) * (x - 32) + (y - 32) * (y - 32))) / (nf * nf);
      EXPECT_NEAR(std::abs(out[y * 64 + x] - k), 0.0, 1e-15);
    }
  }
}

TEST(BackPropagate, RoundTripOfBandLimitedField) {
  // Smooth field concentrated in the central 32 x 32. The 64-wide truncated
  // kernel passes only part of the chirp's spectrum, so the round trip is
  // approximate; the measured error at the default geometry is about 0.13.
  std::vector<cplx> e(64 * 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double r2 = ((x - 32.0) * (x - 32.0) + (y - 32.0) * (y - 32.0)) / 36.0;
      e[y * 64 + x] = std::exp(-r2) * cplx(1.0, 0.3 * std::sin(0.2 * x));
    }
  }
  const auto back = prop().back_propagate(prop().propagate(e));
  EXPECT_LT(rel_err(back, e), 0.15);
}

TEST(BackPropagate, TwinImageLeavesAResidual) {
  // Real object: a bar. Best-scaled |back_propagate(sqrt I)| still differs.
  const HologramModel model;
  std::vector<double> f(64 * 64, 0.0);
  for (int y = 24; y < 40; ++y)
    for (int x = 30; x < 34; ++x) f[y * 64 + x] = 1.0;
  const auto g = model.apply(f);
  const auto bp = model.back_propagate_sqrt(g);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double amp = std::hypot(bp[i], bp[f.size() + i]);
    num += amp * f[i];
    den += amp * amp;
  }
  const double s = num / den;
  double resid = 0, norm = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double amp = std::hypot(bp[i], bp[f.size() + i]);
    resid += (s * amp - f[i]) * (s * amp - f[i]);
    norm += f[i] * f[i];
  }
  EXPECT_GT(std::sqrt(resid / norm), 0.1);
}

TEST(HologramModel, ApplyIsIntensityOfPropagatedObject) {
  const HologramModel model;
  SplitMix64 rng(11);
  std::vector<double> f(64 * 64);
  for (double& v : f) v = rng.uniform();
  const auto g = model.apply(f);
  const auto ed = oracle::fresnel_direct(std::vector<cplx>(f.begin(), f.end()), FresnelConfig{});
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double ref = std::norm(1.0 + ed[i]);
    EXPECT_NEAR(g[i], ref, 1e-9 * (1.0 + ref));
  }
}

TEST(HologramModel, GradientOfMeanIntensityMatchesFiniteDifferences) {
  const HologramModel model;
  SplitMix64 rng(12);
  std::vector<double> f(64 * 64);
  for (double& v : f) v = rng.uniform();
  const std::size_t n = f.size();
  const std::vector<double> gbar(n, 1.0 / static_cast<double>(n));
  const auto grad = model.vjp(f, gbar);
  auto mean_i = [&](const std::vector<double>& x) {
    double s = 0;
    for (double v : model.apply(x)) s += v;
    return s / static_cast<double>(n);
  };
  const double h = 1e-5;
  for (int c = 0; c < 20; ++c) {
    const std::size_t i = rng.below(n);
    auto fp = f, fm = f;
    fp[i] += h;
    fm[i] -= h;
    const double fd = (mean_i(fp) - mean_i(fm)) / (2 * h);
    EXPECT_LT(std::abs(fd - grad[i]) / std::max(std::abs(fd), 1e-12), 1e-4);
  }
}
