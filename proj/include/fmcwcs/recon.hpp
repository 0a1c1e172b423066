// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmcwcs/fmcw.hpp"
#include "fmcwcs/least_squares.hpp"
#include "fmcwcs/sensing.hpp"
#include "fmcwcs/spectral.hpp"
#include "fmcwcs/tv.hpp"
#include "fmcwcs/wavelet.hpp"

namespace fmcwcs {

/// Reconstructed depth image. Invalid pixels hold depth 0.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depths;
  std::vector<std::uint8_t> valid;
  /// Pixels whose ratio pointed beyond the unambiguous range and were clamped.
  std::size_t clamped = 0;

  std::size_t size() const { return depths.size(); }
  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
  }

  static DepthMap empty(int width, int height) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    return DepthMap{width, height, std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0), 0};
  }
};

/// Binary mask: pixel l is set iff image[l] > rel_threshold * max(image).
/// An image with no positive value gives an empty mask.
inline std::vector<std::uint8_t> make_mask(std::span<const double> image, double rel_threshold) {
  if (!(rel_threshold >= 0.0 && rel_threshold < 1.0))
    throw std::invalid_argument("make_mask: threshold must lie in [0, 1)");
  double peak = 0.0;
  for (double v : image) peak = std::max(peak, v);
  std::vector<std::uint8_t> mask(image.size(), 0);
  if (peak <= 0.0) return mask;
  const double level = rel_threshold * peak;
  for (std::size_t i = 0; i < image.size(); ++i) mask[i] = image[i] > level ? 1 : 0;
  return mask;
}

inline std::size_t mask_count(std::span<const std::uint8_t> mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

inline std::size_t square_side(std::size_t n, const char* what) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n || !is_power_of_two(side))
    throw std::invalid_argument(std::string(what) + ": image must be square with power-of-two side");
  return side;
}

/// Indices of the floor(fraction * m) largest-magnitude coefficients of the
/// orthonormal Haar transform of the mask, sorted ascending. Magnitudes are
/// compared after rounding to 1e-12 of the largest, so that coefficients
/// equal up to transform round-off tie and fall back to the lower index.
inline std::vector<std::size_t> select_support(std::span<const std::uint8_t> mask, std::size_t m,
                                               double fraction = 1.0 / 3.0) {
  const std::size_t side = square_side(mask.size(), "select_support");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("select_support: fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m)));
  if (count == 0) throw std::invalid_argument("select_support: floor(fraction * m) is zero");
  if (count > mask.size()) throw std::invalid_argument("select_support: support larger than n");
  if (mask_count(mask) == 0) throw std::invalid_argument("select_support: empty mask, no support");

  std::vector<double> coeffs(mask.begin(), mask.end());
  haar2d_forward(coeffs, side);
  double peak = 0.0;
  for (double c : coeffs) peak = std::max(peak, std::abs(c));
  std::vector<long long> key(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    key[i] = std::llround(std::abs(coeffs[i]) / peak * 1e12);
  std::vector<std::size_t> order(coeffs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return key[a] != key[b] ? key[a] > key[b] : a < b;
                    });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

/// J = A Psi^-1 P^T: coefficients on `support` -> Haar synthesis -> A.
inline LinearOperator support_operator(const SensingMatrix& a, std::span<const std::size_t> support) {
  const std::size_t n = a.cols();
  const std::size_t side = square_side(n, "support_operator");
  std::vector<std::size_t> idx(support.begin(), support.end());
  for (std::size_t i : idx)
    if (i >= n) throw std::invalid_argument("support_operator: index out of range");
  LinearOperator j;
  j.rows = a.rows();
  j.cols = idx.size();
  j.apply = [&a, idx, n, side](std::span<const double> s) {
    std::vector<double> image(n, 0.0);
    for (std::size_t k = 0; k < idx.size(); ++k) image[idx[k]] = s[k];
    haar2d_inverse(image, side);
    return a.apply(image);
  };
  j.adjoint = [&a, idx, side](std::span<const double> r) {
    auto image = a.apply_adjoint(r);
    haar2d_forward(image, side);
    std::vector<double> s(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) s[k] = image[idx[k]];
    return s;
  };
  return j;
}

struct SupportSolve {
  std::vector<double> image;
  LsResult ls;
};

/// M . Psi^-1 P^T argmin_s ||A Psi^-1 P^T s - y||^2.
inline SupportSolve ls_on_support(const SensingMatrix& a, std::span<const double> y,
                                  std::span<const std::size_t> support,
                                  std::span<const std::uint8_t> mask, const LsOptions& opt = {}) {
  if (y.size() != a.rows()) throw std::invalid_argument("ls_on_support: y length != m");
  if (mask.size() != a.cols()) throw std::invalid_argument("ls_on_support: mask size != n");
  if (support.size() > a.rows())
    throw std::invalid_argument("ls_on_support: support larger than m (underdetermined)");
  const auto j = support_operator(a, support);
  SupportSolve out;
  out.ls = least_squares(j, y, opt);
  std::vector<double> image(a.cols(), 0.0);
  for (std::size_t k = 0; k < support.size(); ++k) image[support[k]] = out.ls.solution[k];
  haar2d_inverse(image, square_side(a.cols(), "ls_on_support"));
  for (std::size_t i = 0; i < image.size(); ++i)
    if (!mask[i]) image[i] = 0.0;
  out.image = std::move(image);
  return out;
}

/// Depth from the ratio of the frequency-weighted and plain amplitude
/// images: d = (x_inu / x_i) * T c / (2 dnu) where x_i exceeds
/// floor_fraction * max(x_i). Other pixels are invalid with depth 0;
/// negative ratios are invalid and ratios beyond range are clamped to it.
inline DepthMap extract_depth(std::span<const double> x_i, std::span<const double> x_inu,
                              int width, int height, const ChirpConfig& cfg,
                              double floor_fraction = 0.01,
                              FrequencyWeighting weighting = FrequencyWeighting::linear) {
  if (x_i.size() != x_inu.size())
    throw std::invalid_argument("extract_depth: images differ in size");
  if (x_i.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("extract_depth: image size != width * height");
  if (!(floor_fraction >= 0.0 && floor_fraction < 1.0))
    throw std::invalid_argument("extract_depth: floor fraction must lie in [0, 1)");
  auto out = DepthMap::empty(width, height);
  double peak = 0.0;
  for (double v : x_i) peak = std::max(peak, v);
  if (peak <= 0.0) return out;
  const double floor = floor_fraction * peak;
  const double range = cfg.max_range_m();
  for (std::size_t i = 0; i < x_i.size(); ++i) {
    if (!(x_i[i] > floor) || x_i[i] <= 0.0) continue;
    double ratio = x_inu[i] / x_i[i];
    if (weighting == FrequencyWeighting::sqrt) ratio = ratio > 0.0 ? ratio * ratio : ratio;
    const double d = ratio * cfg.meters_per_hz();
    if (!(d > 0.0) || !std::isfinite(d)) continue;
    out.valid[i] = 1;
    if (d > range) {
      out.depths[i] = range;
      ++out.clamped;
    } else {
      out.depths[i] = d;
    }
  }
  return out;
}

/// Box average over a kernel x kernel window of valid pixels only. The
/// window spans offsets -(kernel-1)/2 .. kernel/2 and is clipped at edges.
inline DepthMap smooth(const DepthMap& d, int kernel = 4) {
  if (kernel < 1 || kernel > d.width || kernel > d.height)
    throw std::invalid_argument("smooth: kernel must be between 1 and the image size");
  DepthMap out = d;
  const int lo = -(kernel - 1) / 2;
  const int hi = kernel / 2;
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * d.width + c;
      if (!d.valid[i]) continue;
      double sum = 0.0;
      int count = 0;
      for (int dr = lo; dr <= hi; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= d.height) continue;
        for (int dc = lo; dc <= hi; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= d.width) continue;
          const std::size_t j = static_cast<std::size_t>(rr) * d.width + cc;
          if (!d.valid[j]) continue;
          sum += d.depths[j];
          ++count;
        }
      }
      out.depths[i] = sum / count;
    }
  }
  return out;
}

struct ReconOptions {
  TvConfig tv;
  double mask_threshold = 0.1;
  double support_fraction = 1.0 / 3.0;
  double depth_floor = 0.01;
  LsOptions ls;
  /// Run the two support solves on separate threads.
  bool parallel_solves = false;
};

struct Reconstruction {
  DepthMap depth;
  std::vector<double> tv_image;
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> support;
  std::vector<double> x_i;
  std::vector<double> x_inu;
  TvResult tv;
  LsResult ls_i;
  LsResult ls_inu;
};

/// TV on y_I -> mask -> Haar support -> least squares for x_I and x_Inu on
/// that support -> depth. TV is not run on y_Inu.
inline Reconstruction reconstruct(const SensingMatrix& a, const MeasurementVectors& mv,
                                  const ChirpConfig& cfg, const ReconOptions& opt = {}) {
  const std::size_t n = a.cols();
  const std::size_t side = square_side(n, "reconstruct");
  if (mv.projections() != a.rows() || mv.y_inu.size() != a.rows())
    throw std::invalid_argument("reconstruct: measurement count does not match the sensing matrix");
  Reconstruction out;
  out.tv = tv_minimize(a, mv.y_i, side, side, opt.tv);
  out.tv_image = out.tv.image;
  out.mask = make_mask(out.tv_image, opt.mask_threshold);
  if (mask_count(out.mask) == 0)
    throw std::runtime_error("reconstruct: empty mask after TV (no return above threshold)");
  out.support = select_support(out.mask, a.rows(), opt.support_fraction);
  if (opt.parallel_solves) {
    auto fut = std::async(std::launch::async, [&] {
      return ls_on_support(a, mv.y_inu, out.support, out.mask, opt.ls);
    });
    auto si = ls_on_support(a, mv.y_i, out.support, out.mask, opt.ls);
    auto sn = fut.get();
    out.x_i = std::move(si.image);
    out.ls_i = std::move(si.ls);
    out.x_inu = std::move(sn.image);
    out.ls_inu = std::move(sn.ls);
  } else {
    auto si = ls_on_support(a, mv.y_i, out.support, out.mask, opt.ls);
    auto sn = ls_on_support(a, mv.y_inu, out.support, out.mask, opt.ls);
    out.x_i = std::move(si.image);
    out.ls_i = std::move(si.ls);
    out.x_inu = std::move(sn.image);
    out.ls_inu = std::move(sn.ls);
  }
  out.depth = extract_depth(out.x_i, out.x_inu, static_cast<int>(side), static_cast<int>(side),
                            cfg, opt.depth_floor, mv.weighting);
  return out;
}

}  // namespace fmcwcs
