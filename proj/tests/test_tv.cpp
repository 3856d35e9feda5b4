#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fixtures.hpp"
#include "varsig/baselines/tv_map.hpp"
#include "varsig/core/error.hpp"
#include "varsig/core/rng.hpp"
#include "varsig/physics/toy.hpp"
#include "varsig/physics/video_cs.hpp"
#include "varsig/train/images.hpp"

using namespace varsig;


TEST(TvConfig, DefaultStrengthIsTenToTheTwo) {
  EXPECT_DOUBLE_EQ(TvConfig{}.lambda_tv, 100.0);
  EXPECT_EQ(TvConfig::from_json(TvConfig{}.to_json()).to_json(), TvConfig{}.to_json());
  EXPECT_THROW(TvConfig::from_json(json{{"lambda", 1.0}}), ConfigError);
}

TEST(TvValue, AnisotropicSumOfAbsoluteDifferences) {
  // 2 x 3 single slice: rows [1 4 2], [0 0 5]
  const std::vector<double> f{1, 4, 2, 0, 0, 5};
  // x: |4-1| + |2-4| + |0-0| + |5-0| = 10; y: |0-1| + |0-4| + |5-2| = 8
  EXPECT_DOUBLE_EQ(tv_value(f, {2, 3}), 18.0);
  // two interleaved slices are summed independently
  std::vector<double> two(12);
  for (int i = 0; i < 6; ++i) {
    two[2 * i] = f[i];
    two[2 * i + 1] = 2.0 * f[i];
  }
  EXPECT_DOUBLE_EQ(tv_value(two, {2, 3, 2}), 54.0);
}

TEST(TvMap, NonlinearModelIsUnsupported) {
  const SquaredLinearModel m(4, 6, 1);
  EXPECT_THROW(tv_map_solve(std::vector<double>(6, 1.0), m, TvConfig{}), UnsupportedModelError);
}

TEST(TvMap, UnregularisedConsistentProblemIsSolved) {
  VideoConfig cfg;
  cfg.size = 16;
  cfg.mask_seed = 3;
  const VideoCsModel model(cfg);
  SplitMix64 rng(4);
  std::vector<double> g0(model.measurement_len());
  for (double& v : g0) v = rng.uniform();
  // f0 = A^T g0 lies in the row space.
  const auto g = model.apply(model.adjoint(g0));
  TvConfig tv;
  tv.lambda_tv = 0.0;
  tv.max_iters = 400;
  tv.stop_tol = 0.0;
  const auto res = tv_map_solve(g, model, tv);
  EXPECT_LT(res.history.back().residual, 1e-6);
  // proximal-gradient rate: objective at k no worse than at k / 2
  for (std::size_t k = 10; k < res.history.size(); ++k) {
    EXPECT_LE(res.history[k].objective, res.history[k / 2].objective);
  }
}

TEST(TvMap, ObjectiveIsMonotoneOnRandomVideoInstances) {
  VideoConfig cfg;
  cfg.size = 32;
  for (std::uint64_t s = 0; s < 5; ++s) {
    cfg.mask_seed = s;
    const VideoCsModel model(cfg);
    TvConfig tv;
    tv.max_iters = 60;
    const auto res = tv_map_solve(fixture::scene_measurement(model, 100 + s), model, tv);
    for (std::size_t k = 1; k < res.history.size(); ++k) {
      EXPECT_LE(res.history[k].objective, res.history[k - 1].objective + 1e-12 * res.history[k - 1].objective);
    }
    EXPECT_LT(res.history.back().objective, res.history.front().objective);
  }
}

TEST(TvMap, HugeLambdaGivesPerSliceConstantImage) {
  VideoConfig cfg;
  cfg.size = 16;
  cfg.mask_seed = 5;
  const VideoCsModel model(cfg);
  const auto g = fixture::scene_measurement(model, 6);
  TvConfig tv;
  tv.lambda_tv = 1e6;
  tv.max_iters = 500;
  const auto res = tv_map_solve(g, model, tv);
  const std::size_t slices = 12, px = 16 * 16;
  double fmax = 0;
  for (double v : res.f) fmax = std::max(fmax, std::abs(v));
  ASSERT_GT(fmax, 0.0);
  for (std::size_t s = 0; s < slices; ++s) {
    double mean = 0;
    for (std::size_t p = 0; p < px; ++p) mean += res.f[p * slices + s];
    mean /= static_cast<double>(px);
    for (std::size_t p = 0; p < px; ++p) EXPECT_NEAR(res.f[p * slices + s], mean, 1e-3 * fmax);
  }
  EXPECT_LT(res.history.back().tv, 1e-3 * res.history.front().objective / 1e6 + 1e-2);
}

TEST(TvMap, TwoByTwoToyMatchesExhaustiveGridSearch) {
  SplitMix64 rng(7);
  Eigen::MatrixXd b(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = (i == j ? 1.0 : 0.0) + 0.3 * rng.normal();
  const Eigen::Vector4d f0(0.2, 0.7, 0.45, 0.6);
  const Eigen::Vector4d gv = b * f0;
  const std::vector<double> g(gv.data(), gv.data() + 4);
  const double lambda = 0.05;
  const fixture::DenseImageModel model(b, {2, 2, 1});

  // objective written from the definition: pixel order (0,0), (0,1), (1,0), (1,1)
  auto objective = [&](const Eigen::Vector4d& f) {
    const double tv = std::abs(f[1] - f[0]) + std::abs(f[3] - f[2]) + std::abs(f[2] - f[0]) +
                      std::abs(f[3] - f[1]);
    return (gv - b * f).squaredNorm() + lambda * tv;
  };
  Eigen::Vector4d best = Eigen::Vector4d::Zero();
  double best_val = 1e300;
  Eigen::Vector4d f;
  for (int a = 0; a <= 100; ++a) {
    f[0] = 0.01 * a;
    for (int c = 0; c <= 100; ++c) {
      f[1] = 0.01 * c;
      for (int d = 0; d <= 100; ++d) {
        f[2] = 0.01 * d;
        for (int e = 0; e <= 100; ++e) {
          f[3] = 0.01 * e;
          const double v = objective(f);
          if (v < best_val) {
            best_val = v;
            best = f;
          }
        }
      }
    }
  }
  for (int i = 0; i < 4; ++i) {
    EXPECT_GT(best[i], 0.0);
    EXPECT_LT(best[i], 1.0);
  }
  TvConfig tv;
  tv.lambda_tv = lambda;
  tv.max_iters = 5000;
  tv.stop_tol = 1e-14;
  tv.inner_iters = 50;
  const auto res = tv_map_solve(g, model, tv);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(res.f[i], best[i], 0.02) << "pixel " << i;
}

TEST(TvMap, HistoryCsvHasHeaderAndOneRowPerIterate) {
  const MatrixModel m(MatrixModel::random_matrix(6, 4, 2));
  TvConfig tv;
  tv.max_iters = 5;
  tv.stop_tol = 0.0;
  const auto res = tv_map_solve(std::vector<double>{1, 2, 3, 4, 5, 6}, m, tv);
  const auto csv = tv_history_csv(res.history);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,objective,residual,tv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), res.history.size() + 1);
}
