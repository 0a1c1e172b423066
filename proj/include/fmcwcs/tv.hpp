// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "fmcwcs/fft.hpp"
#include "fmcwcs/sensing.hpp"

namespace fmcwcs {

struct TvConfig {
  /// TV weight; 0 selects 2^-4 * max|A^T y|.
  double alpha = 0.0;
  int max_outer_iters = 10;
  int max_inner_iters = 60;
  double inner_tolerance = 1e-4;
  /// Outer loop stops once an outer pass moves x by less than this (relative).
  double outer_tolerance = 1e-5;
  /// Initial penalties: rho = rho_scale * 2n on the x = v split,
  /// beta = beta_scale * alpha / max|A^T y / n| on the w = Dx split.
  double rho_scale = 0.5;
  double beta_scale = 8.0;
  double penalty_growth = 2.0;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("tv: alpha must be finite and >= 0 (0 = automatic)");
    if (max_outer_iters < 1 || max_inner_iters < 1)
      throw std::invalid_argument("tv: iteration counts must be >= 1");
    if (!(inner_tolerance > 0.0) || !(outer_tolerance >= 0.0))
      throw std::invalid_argument("tv: tolerances must be positive");
    if (!(rho_scale > 0.0) || !(beta_scale > 0.0) || !(penalty_growth >= 1.0))
      throw std::invalid_argument("tv: penalty parameters must be positive, growth >= 1");
  }
};

struct TvResult {
  std::vector<double> image;
  /// Objective of the accepted iterate after each outer pass.
  std::vector<double> objective_history;
  double alpha = 0.0;
  int outer_iterations = 0;
  bool converged = false;
};

namespace detail {

// Periodic forward differences on a row-major height x width grid.
inline void gradient(std::span<const double> x, std::size_t width, std::size_t height,
                     std::vector<double>& gh, std::vector<double>& gv) {
  gh.resize(x.size());
  gv.resize(x.size());
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t rn = (r + 1) % height;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t cn = (c + 1) % width;
      const double v = x[r * width + c];
      gh[r * width + c] = x[r * width + cn] - v;
      gv[r * width + c] = x[rn * width + c] - v;
    }
  }
}

// D^T (gh, gv).
inline std::vector<double> gradient_adjoint(std::span<const double> gh,
                                            std::span<const double> gv, std::size_t width,
                                            std::size_t height) {
  std::vector<double> out(gh.size());
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t rp = (r + height - 1) % height;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t cp = (c + width - 1) % width;
      out[r * width + c] = gh[r * width + cp] - gh[r * width + c] +
                           gv[rp * width + c] - gv[r * width + c];
    }
  }
  return out;
}

inline double soft(double v, double t) {
  return v > t ? v - t : (v < -t ? v + t : 0.0);
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

/// Anisotropic periodic total variation sum |D_h x| + |D_v x|.
inline double total_variation(std::span<const double> x, std::size_t width, std::size_t height) {
  std::vector<double> gh, gv;
  detail::gradient(x, width, height, gh, gv);
  double tv = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) tv += std::abs(gh[i]) + std::abs(gv[i]);
  return tv;
}

/// ||A x - y||^2 + alpha TV(x).
inline double tv_objective(const SensingMatrix& a, std::span<const double> y,
                           std::span<const double> x, std::size_t width, std::size_t height,
                           double alpha) {
  const auto ax = a.apply(x);
  double r = 0.0;
  for (std::size_t k = 0; k < ax.size(); ++k) r += (ax[k] - y[k]) * (ax[k] - y[k]);
  return r + alpha * total_variation(x, width, height);
}

/// Minimises ||A x - y||^2 + alpha TV(x) over a width x height image.
///
/// Alternating-direction augmented Lagrangian with splits v = x and w = Dx.
/// The v-update uses (2 A^T A + rho I)^-1 = (I - 2/(2n+rho) A^T A) / rho,
/// valid because A A^T = n I, so it costs two fast Hadamard transforms. The
/// x-update inverts rho I + beta D^T D in the 2D Fourier domain and the
/// w-update is a soft threshold. Penalties grow by penalty_growth after each
/// outer pass (scaled duals are rescaled to match). An outer pass is kept
/// only if it lowers the objective, so the history is non-increasing and
/// never exceeds the objective at x = 0.
inline TvResult tv_minimize(const SensingMatrix& a, std::span<const double> y, std::size_t width,
                            std::size_t height, const TvConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = a.cols();
  if (width * height != n) throw std::invalid_argument("tv_minimize: image size != n");
  if (y.size() != a.rows()) throw std::invalid_argument("tv_minimize: y length != m");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("tv_minimize: non-finite measurement");

  const double dn = static_cast<double>(n);
  const auto aty = a.apply_adjoint(y);
  double aty_max = 0.0;
  for (double v : aty) aty_max = std::max(aty_max, std::abs(v));

  TvResult result;
  result.image.assign(n, 0.0);
  result.alpha = cfg.alpha > 0.0 ? cfg.alpha : std::ldexp(aty_max, -4);
  double best = 0.0;
  for (double v : y) best += v * v;
  if (aty_max == 0.0) {
    // A^T y = 0: x = 0 is stationary for the convex objective.
    result.objective_history.push_back(best);
    result.converged = true;
    return result;
  }
  const double alpha = result.alpha;

  // Fourier symbol of D^T D.
  const RealFft2d fft(height, width);
  const std::size_t hc = fft.spectrum_cols();
  std::vector<double> laplacian(height * hc);
  for (std::size_t p = 0; p < height; ++p) {
    const double sp = std::sin(std::numbers::pi * static_cast<double>(p) / height);
    for (std::size_t q = 0; q < hc; ++q) {
      const double sq = std::sin(std::numbers::pi * static_cast<double>(q) / width);
      laplacian[p * hc + q] = 4.0 * sp * sp + 4.0 * sq * sq;
    }
  }

  double rho = cfg.rho_scale * 2.0 * dn;
  double beta = cfg.beta_scale * alpha / (aty_max / dn);

  // Warm start from the back-projection A^T y / n.
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = aty[i] / dn;
  std::vector<double> v = x;
  std::vector<double> wh, wv;
  detail::gradient(x, width, height, wh, wv);
  std::vector<double> u1(n, 0.0), u2h(n, 0.0), u2v(n, 0.0);
  std::vector<double> gh, gv, rhs(n), prev(n), outer_start(n);

  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    outer_start = x;
    for (int inner = 0; inner < cfg.max_inner_iters; ++inner) {
      prev = x;
      // x-update: (rho I + beta D^T D) x = rho (v - u1) + beta D^T (w - u2).
      std::vector<double> dh(n), dv(n);
      for (std::size_t i = 0; i < n; ++i) {
        dh[i] = wh[i] - u2h[i];
        dv[i] = wv[i] - u2v[i];
      }
      const auto dtw = detail::gradient_adjoint(dh, dv, width, height);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = rho * (v[i] - u1[i]) + beta * dtw[i];
      auto spec = fft.forward(rhs);
      for (std::size_t k = 0; k < spec.size(); ++k) spec[k] /= rho + beta * laplacian[k];
      x = fft.inverse(spec);

      // v-update: (2 A^T A + rho I) v = 2 A^T y + rho (x + u1).
      for (std::size_t i = 0; i < n; ++i) rhs[i] = 2.0 * aty[i] + rho * (x[i] + u1[i]);
      const auto atarhs = a.apply_adjoint(a.apply(rhs));
      const double c = 2.0 / (2.0 * dn + rho);
      for (std::size_t i = 0; i < n; ++i) v[i] = (rhs[i] - c * atarhs[i]) / rho;

      // w-update: shrink D x + u2.
      detail::gradient(x, width, height, gh, gv);
      const double t = alpha / beta;
      for (std::size_t i = 0; i < n; ++i) {
        wh[i] = detail::soft(gh[i] + u2h[i], t);
        wv[i] = detail::soft(gv[i] + u2v[i], t);
      }

      for (std::size_t i = 0; i < n; ++i) {
        u1[i] += x[i] - v[i];
        u2h[i] += gh[i] - wh[i];
        u2v[i] += gv[i] - wv[i];
      }

      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) change += (x[i] - prev[i]) * (x[i] - prev[i]);
      // The first x-update reproduces the warm start, so never stop there.
      if (inner >= 2 &&
          std::sqrt(change) <= cfg.inner_tolerance * std::max(detail::norm2(x), 1e-300))
        break;
    }

    const double obj = tv_objective(a, y, x, width, height, alpha);
    if (obj <= best) {
      best = obj;
      result.image = x;
    }
    result.objective_history.push_back(best);
    result.outer_iterations = outer + 1;

    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) moved += (x[i] - outer_start[i]) * (x[i] - outer_start[i]);
    if (outer >= 2 &&
        std::sqrt(moved) <= cfg.outer_tolerance * std::max(detail::norm2(x), 1e-300)) {
      result.converged = true;
      break;
    }

    rho *= cfg.penalty_growth;
    beta *= cfg.penalty_growth;
    for (std::size_t i = 0; i < n; ++i) {
      u1[i] /= cfg.penalty_growth;
      u2h[i] /= cfg.penalty_growth;
      u2v[i] /= cfg.penalty_growth;
    }
  }
  return result;
}

}  // namespace fmcwcs
