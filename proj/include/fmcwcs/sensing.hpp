// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fmcwcs/random.hpp"

namespace fmcwcs {

/// In-place unnormalised fast Walsh-Hadamard transform in natural
/// (Sylvester) order: out[r] = sum_i (-1)^popcount(r & i) in[i].
inline void fwht(std::span<double> data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fwht: length must be a power of two");
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = data[j];
        const double b = data[j + h];
        data[j] = a + b;
        data[j + h] = a - b;
      }
    }
  }
}

/// Sylvester-Hadamard entry H[r][c].
inline int hadamard_entry(std::size_t r, std::size_t c) {
  return (std::popcount(r & c) % 2 == 0) ? 1 : -1;
}

/// Randomised Sylvester-Hadamard +/-1 operator of shape m x n, applied in
/// O(n log n):  A x = R H S P x, with P a pixel permutation
/// ((P x)[i] = x[perm[i]]), S a diagonal of random signs, H the order-n
/// Sylvester matrix and R the selection of m Hadamard rows.
///
/// Seeded construction draws the row order from rows 1..n-1 uniformly and
/// appends row 0 last, so every prefix with m < n avoids the constant row
/// and m = n uses the complete matrix.
class SensingMatrix {
 public:
  /// Randomised operator keyed by `seed`.
  SensingMatrix(std::size_t n, std::size_t m, std::uint64_t seed) : n_(n) {
    check_shape(n, m);
    Rng rng(derive_seed(seed, {0x5e75u}));
    permutation_.resize(n);
    std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
    rng.shuffle(permutation_.begin(), permutation_.end());
    signs_.resize(n);
    for (auto& s : signs_) s = (rng.next() >> 63) ? -1.0 : 1.0;
    std::vector<std::size_t> order(n - 1);
    std::iota(order.begin(), order.end(), std::size_t{1});
    rng.shuffle(order.begin(), order.end());
    order.push_back(0);
    order.resize(m);
    rows_ = std::move(order);
  }

  /// Plain Sylvester rows 0..m-1 with identity permutation and no signs.
  static SensingMatrix unrandomized(std::size_t n, std::size_t m) {
    check_shape(n, m);
    SensingMatrix a;
    a.n_ = n;
    a.permutation_.resize(n);
    std::iota(a.permutation_.begin(), a.permutation_.end(), std::size_t{0});
    a.signs_.assign(n, 1.0);
    a.rows_.resize(m);
    std::iota(a.rows_.begin(), a.rows_.end(), std::size_t{0});
    return a;
  }

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return n_; }
  std::span<const std::size_t> hadamard_rows() const { return rows_; }

  /// Operator made of the first m rows (row-prefix reuse across sample ratios).
  SensingMatrix prefix(std::size_t m) const {
    if (m == 0 || m > rows()) throw std::invalid_argument("SensingMatrix::prefix: bad row count");
    SensingMatrix a = *this;
    a.rows_.resize(m);
    return a;
  }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("SensingMatrix::apply: length mismatch");
    std::vector<double> work(n_);
    for (std::size_t i = 0; i < n_; ++i) work[i] = signs_[i] * x[permutation_[i]];
    fwht(work);
    std::vector<double> y(rows());
    for (std::size_t k = 0; k < rows(); ++k) y[k] = work[rows_[k]];
    return y;
  }

  std::vector<double> apply_adjoint(std::span<const double> y) const {
    if (y.size() != rows())
      throw std::invalid_argument("SensingMatrix::apply_adjoint: length mismatch");
    std::vector<double> work(n_, 0.0);
    for (std::size_t k = 0; k < rows(); ++k) work[rows_[k]] += y[k];
    fwht(work);
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[permutation_[i]] = signs_[i] * work[i];
    return x;
  }

  /// Row k as a dense +/-1 vector over pixels.
  std::vector<double> row(std::size_t k) const {
    if (k >= rows()) throw std::out_of_range("SensingMatrix::row: index out of range");
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      out[permutation_[i]] = signs_[i] * hadamard_entry(rows_[k], i);
    return out;
  }

  /// Detector masks of row k: first marks +1 pixels (the (1,0) detection),
  /// second marks -1 pixels (the (0,1) detection).
  std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> split_pattern(
      std::size_t k) const {
    if (k >= rows()) throw std::out_of_range("SensingMatrix::split_pattern: index out of range");
    const auto r = row(k);
    std::vector<std::uint8_t> pos(n_);
    std::vector<std::uint8_t> neg(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      pos[i] = r[i] > 0 ? 1 : 0;
      neg[i] = r[i] < 0 ? 1 : 0;
    }
    return {std::move(pos), std::move(neg)};
  }

 private:
  SensingMatrix() = default;

  static void check_shape(std::size_t n, std::size_t m) {
    if (n < 2 || (n & (n - 1)) != 0)
      throw std::invalid_argument("SensingMatrix: n must be a power of two >= 2");
    if (m == 0 || m > n) throw std::invalid_argument("SensingMatrix: need 1 <= m <= n");
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> permutation_;
  std::vector<double> signs_;
  std::vector<std::size_t> rows_;
};

}  // namespace fmcwcs
