// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fmcwcs/random.hpp"

namespace fmcwcs {

/// Linear map J: R^cols -> R^rows given by its action and adjoint.
struct LinearOperator {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::function<std::vector<double>(std::span<const double>)> apply;
  std::function<std::vector<double>(std::span<const double>)> adjoint;
};

enum class LsSolver { conjugate_gradient, lbfgs };

struct LsOptions {
  LsSolver solver = LsSolver::conjugate_gradient;
  /// Stop when ||J^T (J s - y)|| <= tolerance * ||J^T y||.
  double tolerance = 1e-9;
  std::size_t max_iterations = 0;  // 0 = 4 * cols + 50
  std::size_t lbfgs_memory = 10;
  /// Probe for a null space of J with one extra solve.
  bool check_rank = true;
};

struct LsResult {
  std::vector<double> solution;
  std::size_t iterations = 0;
  double relative_residual = 0.0;  // ||J^T r|| / ||J^T y||
  bool converged = false;
  bool rank_deficient = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace detail

/// ||J s - y||^2.
inline double ls_objective(const LinearOperator& j, std::span<const double> y,
                           std::span<const double> s) {
  const auto js = j.apply(s);
  double r = 0.0;
  for (std::size_t k = 0; k < js.size(); ++k) r += (js[k] - y[k]) * (js[k] - y[k]);
  return r;
}

/// 2 J^T (J s - y).
inline std::vector<double> ls_gradient(const LinearOperator& j, std::span<const double> y,
                                       std::span<const double> s) {
  auto r = j.apply(s);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] -= y[k];
  auto g = j.adjoint(r);
  for (double& v : g) v *= 2.0;
  return g;
}

namespace detail {

// CG on the normal equations J^T J s = b (CGLS form, starting from 0), so
// the iterate stays in range(J^T) and converges to the minimum-norm solution.
inline LsResult cg_normal(const LinearOperator& j, std::span<const double> b,
                          const LsOptions& opt) {
  const std::size_t max_it = opt.max_iterations ? opt.max_iterations : 4 * j.cols + 50;
  LsResult res;
  res.solution.assign(j.cols, 0.0);
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> p = r;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  double rr = dot(r, r);
  for (std::size_t it = 0; it < max_it; ++it) {
    if (std::sqrt(rr) <= opt.tolerance * bnorm) {
      res.converged = true;
      break;
    }
    const auto jp = j.apply(p);
    const double curvature = dot(jp, jp);
    if (!(curvature > 0.0)) break;
    const double step = rr / curvature;
    axpy(step, p, res.solution);
    const auto jtjp = j.adjoint(jp);
    axpy(-step, jtjp, r);
    const double rr_new = dot(r, r);
    const double ratio = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + ratio * p[i];
    res.iterations = it + 1;
  }
  // Recompute the true residual rather than trusting the recursion.
  auto js = j.apply(res.solution);
  auto g = j.adjoint(js);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= b[i];
  res.relative_residual = std::sqrt(dot(g, g)) / bnorm;
  res.converged = res.relative_residual <= std::max(opt.tolerance, 1e-12) * 10.0;
  return res;
}

// Limited-memory BFGS on f(s) = ||J s||^2 - 2 b^T s (same minimiser as the
// least-squares objective) with exact line search along each direction.
inline LsResult lbfgs_normal(const LinearOperator& j, std::span<const double> b,
                             const LsOptions& opt) {
  const std::size_t max_it = opt.max_iterations ? opt.max_iterations : 4 * j.cols + 50;
  LsResult res;
  res.solution.assign(j.cols, 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  // Half-gradient g = J^T J s - b.
  std::vector<double> g(b.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -b[i];
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(g.size());
  for (std::size_t it = 0; it < max_it; ++it) {
    if (std::sqrt(dot(g, g)) <= opt.tolerance * bnorm) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], d);
      axpy(-alpha[k], y_hist[k], d);
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], d);
      axpy(alpha[k] - beta, s_hist[k], d);
    }
    for (double& v : d) v = -v;

    const auto jd = j.apply(d);
    const double curvature = dot(jd, jd);
    if (!(curvature > 0.0)) break;
    const double step = -dot(g, d) / curvature;
    std::vector<double> s_step(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s_step[i] = step * d[i];
    axpy(1.0, s_step, res.solution);
    auto y_step = j.adjoint(jd);
    for (double& v : y_step) v *= step;
    axpy(1.0, y_step, g);
    const double sy = dot(s_step, y_step);
    if (sy > 0.0) {
      s_hist.push_back(std::move(s_step));
      y_hist.push_back(std::move(y_step));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > opt.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    res.iterations = it + 1;
  }
  auto js = j.apply(res.solution);
  auto gt = j.adjoint(js);
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= b[i];
  res.relative_residual = std::sqrt(dot(gt, gt)) / bnorm;
  res.converged = res.relative_residual <= std::max(opt.tolerance, 1e-12) * 10.0;
  return res;
}

inline LsResult solve_normal(const LinearOperator& j, std::span<const double> b,
                             const LsOptions& opt) {
  return opt.solver == LsSolver::lbfgs ? lbfgs_normal(j, b, opt) : cg_normal(j, b, opt);
}

}  // namespace detail

/// argmin_s ||J s - y||^2 by an iterative normal-equations solver.
///
/// Both solvers start from zero and so return the minimum-norm minimiser
/// when J has a null space. Rank deficiency is detected by solving
/// J^T J z = J^T J r for a random r: the minimum-norm answer equals r only
/// if J is injective.
inline LsResult least_squares(const LinearOperator& j, std::span<const double> y,
                              const LsOptions& opt = {}) {
  if (y.size() != j.rows) throw std::invalid_argument("least_squares: y length mismatch");
  if (!(opt.tolerance > 0.0)) throw std::invalid_argument("least_squares: tolerance must be > 0");
  const auto b = j.adjoint(y);
  LsResult res = detail::solve_normal(j, b, opt);
  if (opt.check_rank && j.cols > 0) {
    Rng rng(0x7a4b);
    std::vector<double> r(j.cols);
    for (double& v : r) v = rng.normal();
    const auto jr = j.apply(r);
    const auto probe_rhs = j.adjoint(jr);
    LsOptions probe_opt = opt;
    probe_opt.solver = LsSolver::conjugate_gradient;
    probe_opt.tolerance = 1e-10;
    const auto probe = detail::solve_normal(j, probe_rhs, probe_opt);
    double diff = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
      diff += (probe.solution[i] - r[i]) * (probe.solution[i] - r[i]);
    res.rank_deficient = std::sqrt(diff) > 1e-6 * std::sqrt(detail::dot(r, r));
  }
  return res;
}

}  // namespace fmcwcs
