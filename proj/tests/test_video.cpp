#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "varsig/core/error.hpp"
#include "varsig/core/rng.hpp"
#include "varsig/physics/video_cs.hpp"

using namespace varsig;

namespace {

std::vector<double> uniform_values(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}


}  // namespace

TEST(Masks, SameSeedGivesIdenticalMasks) {
  const auto a = generate_masks(123), b = generate_masks(123);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.m.size(), 4u * 64 * 64);
  for (auto v : a.m) EXPECT_TRUE(v == 0 || v == 1);
}

TEST(Masks, DifferentSeedsDifferInAboutHalfThePixels) {
  const auto a = generate_masks(0), b = generate_masks(1);
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t diff = 0;
    for (std::size_t p = 0; p < 4096; ++p) diff += a.m[i * 4096 + p] != b.m[i * 4096 + p];
    const double frac = static_cast<double>(diff) / 4096.0;
    EXPECT_GT(frac, 0.45);
    EXPECT_LT(frac, 0.55);
  }
}

TEST(Masks, MeanTransmittanceIsNearOneHalf) {
  for (std::uint64_t seed : {0u, 1u, 2u, 99u}) {
    const auto m = generate_masks(seed);
    for (std::size_t i = 0; i < 4; ++i) {
      const double t = static_cast<double>(m.popcount(i)) / 4096.0;
      EXPECT_GE(t, 0.47);
      EXPECT_LE(t, 0.53);
    }
  }
}

TEST(Masks, FramesUseIndependentStreams) {
  const auto m = generate_masks(5);
  EXPECT_NE(std::vector<std::uint8_t>(m.m.begin(), m.m.begin() + 4096),
            std::vector<std::uint8_t>(m.m.begin() + 4096, m.m.begin() + 8192));
}

TEST(Compress, AllOnesMasksSumTheFrames) {
  const auto m = MaskSet::constant(64, 4, 1);
  const auto f = uniform_values(64 * 64 * 3 * 4, 1);
  const auto g = compress(f, m);
  for (std::size_t p = 0; p < g.size(); ++p) {
    EXPECT_DOUBLE_EQ(g[p], f[p * 4] + f[p * 4 + 1] + f[p * 4 + 2] + f[p * 4 + 3]);
  }
}

TEST(Compress, AllZeroMasksAnnihilate) {
  const auto g = compress(uniform_values(64 * 64 * 12, 2), MaskSet::constant(64, 4, 0));
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Compress, MatchesExplicitSparseMatrix) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = generate_masks(seed);
    const auto f = uniform_values(64 * 64 * 12, 10 + seed);
    const auto A = as_matrix(m);
    EXPECT_EQ(A.rows(), 3 * 64 * 64);
    EXPECT_EQ(A.cols(), 12 * 64 * 64);
    const Eigen::VectorXd g_mat = A * Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
    const auto g = compress(f, m);
    const auto g_ref = oracle::compress_reference(f, m, 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(g[i], g_mat[i], 1e-12);
      EXPECT_NEAR(g[i], g_ref[i], 1e-12);
    }
  }
}

TEST(Compress, ShapeMismatchIsAShapeError) {
  const auto m = generate_masks(0);
  EXPECT_THROW(compress(std::vector<double>(10), m), ShapeError);
  EXPECT_THROW(adjoint(std::vector<double>(10), m), ShapeError);
}

TEST(Compress, Superposition) {
  const auto m = generate_masks(3);
  const auto f1 = uniform_values(64 * 64 * 12, 4), f2 = uniform_values(64 * 64 * 12, 5);
  std::vector<double> mix(f1.size());
  for (std::size_t i = 0; i < f1.size(); ++i) mix[i] = 2.5 * f1[i] - 0.75 * f2[i];
  const auto g1 = compress(f1, m), g2 = compress(f2, m), gm = compress(mix, m);
  for (std::size_t i = 0; i < gm.size(); ++i) EXPECT_NEAR(gm[i], 2.5 * g1[i] - 0.75 * g2[i], 1e-12);
}

TEST(Adjoint, ZeroInGivesZeroOut) {
  for (double v : adjoint(std::vector<double>(64 * 64 * 3, 0.0), generate_masks(1))) EXPECT_EQ(v, 0.0);
}

TEST(Adjoint, AllOnesMasksBroadcast) {
  const auto g = uniform_values(64 * 64 * 3, 6);
  const auto f = adjoint(g, MaskSet::constant(64, 4, 1));
  for (std::size_t p = 0; p < g.size(); ++p)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(f[p * 4 + i], g[p]);
}

TEST(Adjoint, InnerProductIdentity) {
  const auto m = generate_masks(7);
  SplitMix64 rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> f(64 * 64 * 12), g(64 * 64 * 3);
    rng.fill_normal(f);
    rng.fill_normal(g);
    const auto af = compress(f, m), atg = adjoint(g, m);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < g.size(); ++i) lhs += af[i] * g[i];
    for (std::size_t i = 0; i < f.size(); ++i) rhs += f[i] * atg[i];
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST(Adjoint, IsTheDenseTransposeOnSmallInstances) {
  const auto m = generate_masks(9, 8, 4);
  const Eigen::MatrixXd A = Eigen::MatrixXd(as_matrix(m));
  ASSERT_EQ(A.rows(), 3 * 64);
  ASSERT_EQ(A.cols(), 12 * 64);
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    std::vector<double> e(A.rows(), 0.0);
    e[r] = 1.0;
    const auto col = adjoint(e, m);
    for (Eigen::Index c = 0; c < A.cols(); ++c) ASSERT_EQ(col[c], A(r, c));
  }
}

TEST(AsMatrix, RowSumsAndNonzeroCount) {
  const auto m = generate_masks(11);
  const auto A = as_matrix(m);
  std::size_t pop = 0;
  for (std::size_t i = 0; i < 4; ++i) pop += m.popcount(i);
  EXPECT_EQ(static_cast<std::size_t>(A.nonZeros()), 3 * pop);
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const double s = A.row(r).sum();
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 4.0);
    EXPECT_EQ(s, std::round(s));
  }
  const auto ones = as_matrix(MaskSet::constant(64, 4, 1));
  for (Eigen::Index r = 0; r < ones.rows(); ++r) EXPECT_EQ(ones.row(r).sum(), 4.0);
}

TEST(VideoModel, WrapsCompressAndAdjoint) {
  VideoConfig cfg;
  cfg.mask_seed = 17;
  const VideoCsModel model(cfg);
  EXPECT_EQ(model.masks().m, generate_masks(17).m);
  EXPECT_TRUE(model.is_linear());
  EXPECT_TRUE(model.has_adjoint());
  const auto f = uniform_values(64 * 64 * 12, 12);
  EXPECT_EQ(model.apply(f), compress(f, model.masks()));
  const auto g = uniform_values(64 * 64 * 3, 13);
  EXPECT_EQ(model.vjp(f, g), adjoint(g, model.masks()));
  EXPECT_EQ(VideoConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
}
