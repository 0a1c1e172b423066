// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmcwcs {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Orthogonal two-channel filter bank. Only the decomposition low-pass is
/// stored; the high-pass is its alternating flip g[k] = (-1)^(k+1) h[L-1-k].
class FilterBank {
 public:
  FilterBank(std::string name, std::vector<double> dec_lo)
      : name_(std::move(name)), lo_(std::move(dec_lo)), hi_(lo_.size()) {
    if (lo_.size() < 2 || lo_.size() % 2 != 0)
      throw std::invalid_argument("FilterBank: filter length must be even and >= 2");
    const std::size_t len = lo_.size();
    for (std::size_t k = 0; k < len; ++k)
      hi_[k] = ((k % 2 == 0) ? -1.0 : 1.0) * lo_[len - 1 - k];
  }

  const std::string& name() const { return name_; }
  std::size_t length() const { return lo_.size(); }
  std::span<const double> lowpass() const { return lo_; }
  std::span<const double> highpass() const { return hi_; }

 private:
  std::string name_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

inline const FilterBank& haar_filters() {
  static const FilterBank bank("haar", {kInvSqrt2, kInvSqrt2});
  return bank;
}

/// Least-asymmetric Daubechies wavelet with 20 vanishing moments.
inline const FilterBank& sym20_filters() {
  static const FilterBank bank("sym20", {
      3.695537474835221e-07,
      -1.9015675890554106e-07,
      -7.919361411976999e-06,
      3.025666062736966e-06,
      7.992967835772481e-05,
      -1.928412300645204e-05,
      -0.0004947310915672655,
      7.215991188074035e-05,
      0.002088994708190198,
      -0.0003052628317957281,
      -0.006606585799088861,
      0.0014230873594621453,
      0.01700404902339034,
      -0.003313857383623359,
      -0.031629437144957966,
      0.008123228356009682,
      0.025579349509413946,
      -0.07899434492839816,
      -0.02981936888033373,
      0.4058314443484506,
      0.75116272842273,
      0.47199147510148703,
      -0.0510883429210674,
      -0.16057829841525254,
      0.03625095165393308,
      0.08891966802819956,
      -0.0068437019650692274,
      -0.035373336756604236,
      0.0019385970672402002,
      0.012157040948785737,
      -0.0006111263857992088,
      -0.0034716478028440734,
      0.0001254409172306726,
      0.0007476108597820572,
      -2.6615550335516086e-05,
      -0.00011739133516291466,
      4.525422209151636e-06,
      1.22872527779612e-05,
      -3.2567026420174407e-07,
      -6.329129044776395e-07
  });
  return bank;
}

/// Deepest useful decomposition level: floor(log2(n / (L - 1))).
inline std::size_t dwt_max_level(std::size_t n, std::size_t filter_length) {
  if (filter_length < 2 || n < filter_length - 1) return 0;
  return static_cast<std::size_t>(
      std::floor(std::log2(static_cast<double>(n) / static_cast<double>(filter_length - 1))));
}

/// Single-level periodized DWT. Odd inputs are extended by repeating the
/// last sample, so both outputs have ceil(n/2) coefficients.
inline void dwt_periodized(std::span<const double> x, const FilterBank& bank,
                           std::vector<double>& approx, std::vector<double>& detail) {
  if (x.empty()) throw std::invalid_argument("dwt: empty input");
  const std::size_t n = x.size() + (x.size() % 2);
  const std::size_t half = n / 2;
  const std::size_t len = bank.length();
  const auto lo = bank.lowpass();
  const auto hi = bank.highpass();
  auto sample = [&](std::size_t i) { return i < x.size() ? x[i] : x.back(); };
  // a[i] = sum_k h[k] x[(2i + L/2 - k) mod n]. The signal is unrolled into
  // ext[t] = x[(t + L/2 - (L-1)) mod n] so the inner loop is a plain dot
  // product: a[i] = sum_k h[k] ext[2i + L-1 - k].
  const std::size_t shift = len / 2;
  const std::size_t origin = (shift + n * len - (len - 1)) % n;
  std::vector<double> ext(n + len);
  for (std::size_t t = 0; t < ext.size(); ++t) ext[t] = sample((t + origin) % n);
  approx.assign(half, 0.0);
  detail.assign(half, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const double* window = ext.data() + 2 * i + len - 1;
    double a = 0.0;
    double d = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double v = *(window - k);
      a += lo[k] * v;
      d += hi[k] * v;
    }
    approx[i] = a;
    detail[i] = d;
  }
}

/// Inverse of dwt_periodized (its transpose); returns `out_length` samples,
/// which must be 2*approx.size() or one less.
inline std::vector<double> idwt_periodized(std::span<const double> approx,
                                           std::span<const double> detail,
                                           const FilterBank& bank, std::size_t out_length) {
  if (approx.size() != detail.size())
    throw std::invalid_argument("idwt: approximation/detail length mismatch");
  const std::size_t n = 2 * approx.size();
  if (out_length != n && out_length + 1 != n)
    throw std::invalid_argument("idwt: output length incompatible with coefficients");
  const std::size_t len = bank.length();
  const auto lo = bank.lowpass();
  const auto hi = bank.highpass();
  const std::size_t shift = len / 2;
  const std::size_t origin = (shift + n * len - (len - 1)) % n;
  std::vector<double> ext(n + len, 0.0);
  for (std::size_t i = 0; i < approx.size(); ++i) {
    double* window = ext.data() + 2 * i + len - 1;
    const double a = approx[i];
    const double d = detail[i];
    for (std::size_t k = 0; k < len; ++k) *(window - k) += lo[k] * a + hi[k] * d;
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t t = 0; t < ext.size(); ++t) x[(t + origin) % n] += ext[t];
  x.resize(out_length);
  return x;
}

/// Multi-level periodized decomposition. details[0] is the finest band.
struct WaveletDecomposition {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;
  std::vector<std::size_t> input_lengths;  // length entering each level
};

inline WaveletDecomposition wavedec(std::span<const double> x, const FilterBank& bank,
                                    std::size_t levels) {
  WaveletDecomposition out;
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t level = 0; level < levels; ++level) {
    if (current.size() < 2) throw std::invalid_argument("wavedec: too many levels");
    std::vector<double> a;
    std::vector<double> d;
    dwt_periodized(current, bank, a, d);
    out.input_lengths.push_back(current.size());
    out.details.push_back(std::move(d));
    current = std::move(a);
  }
  out.approx = std::move(current);
  return out;
}

inline std::vector<double> waverec(const WaveletDecomposition& dec, const FilterBank& bank) {
  std::vector<double> current = dec.approx;
  for (std::size_t level = dec.details.size(); level-- > 0;)
    current = idwt_periodized(current, dec.details[level], bank, dec.input_lengths[level]);
  return current;
}

// ---------------------------------------------------------------------------
// Orthonormal 2D Haar pyramid on square power-of-two images (row-major).
//
// Each level transforms the rows, then the columns, of the top-left s x s
// block and leaves the result in the usual quadrant layout:
//   [ LL | row-detail ]
//   [ col-detail | diagonal ]
// The full decomposition runs log2(side) levels.

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline void haar2d_forward(std::span<double> image, std::size_t side) {
  if (!is_power_of_two(side) || image.size() != side * side)
    throw std::invalid_argument("haar2d: image must be square with power-of-two side");
  std::vector<double> tmp(side);
  for (std::size_t s = side; s >= 2; s /= 2) {
    const std::size_t h = s / 2;
    for (std::size_t r = 0; r < s; ++r) {
      double* row = image.data() + r * side;
      for (std::size_t i = 0; i < h; ++i) {
        tmp[i] = (row[2 * i] + row[2 * i + 1]) * kInvSqrt2;
        tmp[h + i] = (row[2 * i + 1] - row[2 * i]) * kInvSqrt2;
      }
      std::copy(tmp.begin(), tmp.begin() + s, row);
    }
    for (std::size_t c = 0; c < s; ++c) {
      for (std::size_t i = 0; i < h; ++i) {
        const double a = image[(2 * i) * side + c];
        const double b = image[(2 * i + 1) * side + c];
        tmp[i] = (a + b) * kInvSqrt2;
        tmp[h + i] = (b - a) * kInvSqrt2;
      }
      for (std::size_t i = 0; i < s; ++i) image[i * side + c] = tmp[i];
    }
  }
}

inline void haar2d_inverse(std::span<double> coeffs, std::size_t side) {
  if (!is_power_of_two(side) || coeffs.size() != side * side)
    throw std::invalid_argument("haar2d: image must be square with power-of-two side");
  std::vector<double> tmp(side);
  for (std::size_t s = 2; s <= side; s *= 2) {
    const std::size_t h = s / 2;
    for (std::size_t c = 0; c < s; ++c) {
      for (std::size_t i = 0; i < h; ++i) {
        const double a = coeffs[i * side + c];
        const double d = coeffs[(h + i) * side + c];
        tmp[2 * i] = (a - d) * kInvSqrt2;
        tmp[2 * i + 1] = (a + d) * kInvSqrt2;
      }
      for (std::size_t i = 0; i < s; ++i) coeffs[i * side + c] = tmp[i];
    }
    for (std::size_t r = 0; r < s; ++r) {
      double* row = coeffs.data() + r * side;
      for (std::size_t i = 0; i < h; ++i) {
        tmp[2 * i] = (row[i] - row[h + i]) * kInvSqrt2;
        tmp[2 * i + 1] = (row[i] + row[h + i]) * kInvSqrt2;
      }
      std::copy(tmp.begin(), tmp.begin() + s, row);
    }
  }
}

}  // namespace fmcwcs
