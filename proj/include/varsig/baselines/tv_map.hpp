#pragma once

#include <span>
#include <string>
#include <vector>

#include "varsig/core/forward_model.hpp"

namespace varsig {

struct TvConfig {
  double lambda_tv = 100.0;    // 10^2.0
  std::size_t max_iters = 200;
  double step_size = 0.0;      // 0: 1 / (2 ||A||^2) from power iteration
  double stop_tol = 1e-7;      // relative objective change
  std::size_t inner_iters = 10;
  std::size_t power_iters = 50;

  json to_json() const;
  static TvConfig from_json(const json& j);
};

struct TvIterate {
  std::size_t iteration = 0;
  double objective = 0.0;
  double residual = 0.0;  // ||g - A f||
  double tv = 0.0;
};

struct TvResult {
  std::vector<double> f;
  std::vector<TvIterate> history;  // entry 0 is the starting point
  double op_norm_sq = 0.0;
  double step = 0.0;
};

/// Anisotropic TV over the first two axes of `shape`, summed over every
/// slice of the remaining axes. Rank-1 shapes use 1-D differences.
double tv_value(std::span<const double> f, const Shape& shape);

/// Largest eigenvalue of A^T A by power iteration from a fixed start vector.
double operator_norm_sq(const ForwardModel& fm, std::size_t iters = 50);

/// Proximal-gradient minimisation of ||g - A f||^2 + lambda TV(f) from f = 0.
/// The prox of TV is computed by projected gradient on the dual with warm
/// starts. Each accepted step lowers the objective; a step that would raise
/// it is retried at smaller step sizes and otherwise rejected, leaving the
/// iterate unchanged for that iteration.
TvResult tv_map_solve(std::span<const double> g, const ForwardModel& fm, const TvConfig& cfg);

std::string tv_history_csv(const std::vector<TvIterate>& history);

}  // namespace varsig
