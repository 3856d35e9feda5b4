#include "varsig/baselines/tv_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "varsig/core/error.hpp"
#include "varsig/core/rng.hpp"

namespace varsig {

json TvConfig::to_json() const {
  return {{"lambda_tv", lambda_tv},   {"max_iters", max_iters},
          {"step_size", step_size},   {"stop_tol", stop_tol},
          {"inner_iters", inner_iters}, {"power_iters", power_iters}};
}

TvConfig TvConfig::from_json(const json& j) {
  TvConfig c;
  if (!j.is_object()) throw ConfigError("tv config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "lambda_tv") c.lambda_tv = v.get<double>();
      else if (key == "max_iters") c.max_iters = v.get<std::size_t>();
      else if (key == "step_size") c.step_size = v.get<double>();
      else if (key == "stop_tol") c.stop_tol = v.get<double>();
      else if (key == "inner_iters") c.inner_iters = v.get<std::size_t>();
      else if (key == "power_iters") c.power_iters = v.get<std::size_t>();
      else throw ConfigError("unknown tv config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("tv config: ") + e.what());
  }
  if (c.lambda_tv < 0.0 || c.step_size < 0.0 || c.stop_tol < 0.0) {
    throw ConfigError("tv config values must be non-negative");
  }
  return c;
}

namespace {

// Layout helper: rows x cols spatial plane repeated over `slices`, with the
// slice index fastest (row-major (y, x, rest...)).
struct Grid {
  std::size_t rows = 1, cols = 1, slices = 1;

  explicit Grid(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tv: empty shape");
    rows = shape[0];
    if (shape.size() >= 2) cols = shape[1];
    for (std::size_t i = 2; i < shape.size(); ++i) slices *= shape[i];
  }
  std::size_t at(std::size_t y, std::size_t x, std::size_t s) const {
    return (y * cols + x) * slices + s;
  }
  std::size_t size() const { return rows * cols * slices; }
};

// Forward differences with zero difference past the last row/column
// (reflective boundary). dy, dx have the size of the signal.
void grad(const Grid& G, std::span<const double> u, std::vector<double>& dy, std::vector<double>& dx) {
  dy.assign(G.size(), 0.0);
  dx.assign(G.size(), 0.0);
  for (std::size_t y = 0; y < G.rows; ++y) {
    for (std::size_t x = 0; x < G.cols; ++x) {
      for (std::size_t s = 0; s < G.slices; ++s) {
        const std::size_t i = G.at(y, x, s);
        if (y + 1 < G.rows) dy[i] = u[G.at(y + 1, x, s)] - u[i];
        if (x + 1 < G.cols) dx[i] = u[G.at(y, x + 1, s)] - u[i];
      }
    }
  }
}

// out = D^T (py, px)
void grad_adjoint(const Grid& G, const std::vector<double>& py, const std::vector<double>& px,
                  std::vector<double>& out) {
  out.assign(G.size(), 0.0);
  for (std::size_t y = 0; y < G.rows; ++y) {
    for (std::size_t x = 0; x < G.cols; ++x) {
      for (std::size_t s = 0; s < G.slices; ++s) {
        const std::size_t i = G.at(y, x, s);
        if (y + 1 < G.rows) {
          out[i] -= py[i];
          out[G.at(y + 1, x, s)] += py[i];
        }
        if (x + 1 < G.cols) {
          out[i] -= px[i];
          out[G.at(y, x + 1, s)] += px[i];
        }
      }
    }
  }
}

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void apply_adjoint(const ForwardModel& fm, std::span<const double> g, std::span<double> f) {
  if (fm.has_adjoint()) {
    fm.adjoint(g, f);
  } else {
    const std::vector<double> zero(fm.signal_len(), 0.0);
    fm.vjp(zero, g, f);
  }
}

class TvProx {
 public:
  TvProx(const Grid& grid, std::size_t inner)
      : G_(grid), inner_(inner), py_(grid.size(), 0.0), px_(grid.size(), 0.0) {}

  std::size_t inner() const noexcept { return inner_; }
  void set_inner(std::size_t n) noexcept { inner_ = n; }

  // argmin_u 1/2 ||u - v||^2 + mu TV(u) by accelerated projected gradient on
  // the dual variable p (|p| <= 1): u = v - mu D^T p, p <- clip(p + D u / (8 mu)).
  // p is kept between calls as a warm start.
  void operator()(std::span<const double> v, double mu, std::span<double> u) {
    if (mu <= 0.0) {
      std::copy(v.begin(), v.end(), u.begin());
      return;
    }
    const double sigma = 1.0 / (8.0 * mu);
    std::vector<double> dty, dy, dx;
    std::vector<double> ry = py_, rx = px_;
    double t = 1.0;
    for (std::size_t it = 0; it < inner_; ++it) {
      grad_adjoint(G_, ry, rx, dty);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = v[i] - mu * dty[i];
      grad(G_, u, dy, dx);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double ny = std::clamp(ry[i] + sigma * dy[i], -1.0, 1.0);
        const double nx = std::clamp(rx[i] + sigma * dx[i], -1.0, 1.0);
        ry[i] = ny + beta * (ny - py_[i]);
        rx[i] = nx + beta * (nx - px_[i]);
        py_[i] = ny;
        px_[i] = nx;
      }
      t = t_next;
    }
    grad_adjoint(G_, py_, px_, dty);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = v[i] - mu * dty[i];
  }

 private:
  const Grid& G_;
  std::size_t inner_;
  std::vector<double> py_, px_;
};

}  // namespace

double tv_value(std::span<const double> f, const Shape& shape) {
  const Grid G(shape);
  if (f.size() != G.size()) throw ShapeError("tv_value: signal does not match shape");
  std::vector<double> dy, dx;
  grad(G, f, dy, dx);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(dy[i]) + std::abs(dx[i]);
  return s;
}

double operator_norm_sq(const ForwardModel& fm, std::size_t iters) {
  const std::size_t n = fm.signal_len();
  std::vector<double> v(n), av(fm.measurement_len()), w(n);
  SplitMix64 rng(0x5eed);
  rng.fill_normal(v);
  double lam = 0.0;
  for (std::size_t it = 0; it < std::max<std::size_t>(iters, 1); ++it) {
    const double nv = std::sqrt(sq_norm(v));
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;
    fm.apply(v, av);
    apply_adjoint(fm, av, w);
    lam = 0.0;
    for (std::size_t i = 0; i < n; ++i) lam += v[i] * w[i];
    v.swap(w);
  }
  return lam;
}

TvResult tv_map_solve(std::span<const double> g, const ForwardModel& fm, const TvConfig& cfg) {
  if (!fm.is_linear()) {
    throw UnsupportedModelError("tv_map_solve needs a linear forward model, got '" + fm.name() + "'");
  }
  if (g.size() != fm.measurement_len()) {
    throw ShapeError("tv_map_solve: measurement needs " + std::to_string(fm.measurement_len()) +
                     " values, got " + std::to_string(g.size()));
  }
  const Grid G(fm.signal_shape());
  const std::size_t n = G.size();
  const double lambda = cfg.lambda_tv;

  TvResult res;
  res.op_norm_sq = operator_norm_sq(fm, cfg.power_iters);
  // The smooth term's gradient 2 A^T (A f - g) is 2 ||A||^2-Lipschitz; a small
  // margin covers the power-iteration underestimate.
  res.step = cfg.step_size > 0.0 ? cfg.step_size
                                 : 1.0 / (2.0 * 1.01 * std::max(res.op_norm_sq, 1e-300));

  std::vector<double> f(n, 0.0), af(g.size()), r(g.size()), grad_f(n), v(n), cand(n);
  auto evaluate = [&](std::span<const double> x, TvIterate& it) {
    fm.apply(x, af);
    double rr = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      r[i] = af[i] - g[i];
      rr += r[i] * r[i];
    }
    it.residual = std::sqrt(rr);
    it.tv = tv_value(x, fm.signal_shape());
    it.objective = rr + lambda * it.tv;
  };

  TvIterate cur;
  evaluate(f, cur);
  res.history.push_back(cur);
  TvProx prox(G, cfg.inner_iters);

  // The prox is inexact, so a step can fail to descend even at a reduced
  // step size. The iterate is then kept and the inner iteration count is
  // doubled, so the prox gets more accurate; after a run of such rejections
  // the solve ends.
  constexpr std::size_t kMaxRejections = 12;
  std::size_t rejections = 0;
  for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
    fm.apply(f, af);
    for (std::size_t i = 0; i < g.size(); ++i) r[i] = af[i] - g[i];
    apply_adjoint(fm, r, grad_f);
    double tau = res.step;
    TvIterate next;
    bool accepted = false;
    for (int attempt = 0; attempt < 4 && !accepted; ++attempt, tau *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) v[i] = f[i] - 2.0 * tau * grad_f[i];
      prox(v, tau * lambda, cand);
      evaluate(cand, next);
      accepted = next.objective <= cur.objective;
    }
    if (accepted) {
      f.swap(cand);
      rejections = 0;
    } else {
      next = cur;
      ++rejections;
      prox.set_inner(2 * prox.inner());
    }
    next.iteration = k;
    res.history.push_back(next);
    const double change = cur.objective - next.objective;
    cur = next;
    if (accepted && change <= cfg.stop_tol * std::max(cur.objective, 1e-300)) break;
    if (rejections >= kMaxRejections) break;
  }
  res.f = std::move(f);
  return res;
}

std::string tv_history_csv(const std::vector<TvIterate>& history) {
  std::string out = "iteration,objective,residual,tv\n";
  char buf[160];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", h.iteration, h.objective,
                  h.residual, h.tv);
    out += buf;
  }
  return out;
}

}  // namespace varsig
