// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace fmcwcs {

namespace detail {

// FFTW planning is not thread-safe, execution of an existing plan on new
// arrays is. Plans are created once per shape under a lock and reused.
class PlanCache {
 public:
  enum class Kind { r2c_1d, c2r_1d, r2c_2d, c2r_2d };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(Kind kind, int rows, int cols) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(kind, rows, cols);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const std::size_t real_size = static_cast<std::size_t>(rows) * cols;
    const std::size_t complex_size =
        static_cast<std::size_t>(rows) * (cols / 2 + 1);
    double* real = fftw_alloc_real(real_size);
    fftw_complex* cplx = fftw_alloc_complex(complex_size);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::r2c_1d:
        plan = fftw_plan_dft_r2c_1d(cols, real, cplx, flags);
        break;
      case Kind::c2r_1d:
        plan = fftw_plan_dft_c2r_1d(cols, cplx, real, flags);
        break;
      case Kind::r2c_2d:
        plan = fftw_plan_dft_r2c_2d(rows, cols, real, cplx, flags);
        break;
      case Kind::c2r_2d:
        plan = fftw_plan_dft_c2r_2d(rows, cols, cplx, real, flags);
        break;
    }
    fftw_free(real);
    fftw_free(cplx);
    if (plan == nullptr) throw std::runtime_error("fftw: planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<Kind, int, int>, fftw_plan> plans_;
};

inline fftw_complex* as_fftw(std::complex<double>* p) {
  return reinterpret_cast<fftw_complex*>(p);
}

}  // namespace detail

/// Real-to-complex DFT of a fixed length (any length, FFTW handles the
/// factorisation). forward() is unnormalised; inverse() divides by n.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    if (n < 1) throw std::invalid_argument("RealFft: empty transform");
    auto& cache = detail::PlanCache::instance();
    forward_ = cache.get(detail::PlanCache::Kind::r2c_1d, 1, static_cast<int>(n));
    inverse_ = cache.get(detail::PlanCache::Kind::c2r_1d, 1, static_cast<int>(n));
  }

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  std::vector<std::complex<double>> forward(std::span<const double> in) const {
    if (in.size() != n_) throw std::invalid_argument("RealFft: length mismatch");
    std::vector<double> scratch(in.begin(), in.end());
    std::vector<std::complex<double>> out(spectrum_size());
    fftw_execute_dft_r2c(forward_, scratch.data(), detail::as_fftw(out.data()));
    return out;
  }

  std::vector<double> inverse(std::span<const std::complex<double>> in) const {
    if (in.size() != spectrum_size())
      throw std::invalid_argument("RealFft: spectrum length mismatch");
    // c2r overwrites its input.
    std::vector<std::complex<double>> scratch(in.begin(), in.end());
    std::vector<double> out(n_);
    fftw_execute_dft_c2r(inverse_, detail::as_fftw(scratch.data()), out.data());
    const double scale = 1.0 / static_cast<double>(n_);
    for (double& v : out) v *= scale;
    return out;
  }

 private:
  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

/// Row-major 2D real DFT (rows x cols), half spectrum of rows x (cols/2+1).
class RealFft2d {
 public:
  RealFft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    auto& cache = detail::PlanCache::instance();
    forward_ = cache.get(detail::PlanCache::Kind::r2c_2d, static_cast<int>(rows),
                         static_cast<int>(cols));
    inverse_ = cache.get(detail::PlanCache::Kind::c2r_2d, static_cast<int>(rows),
                         static_cast<int>(cols));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t spectrum_cols() const { return cols_ / 2 + 1; }

  std::vector<std::complex<double>> forward(std::span<const double> in) const {
    if (in.size() != rows_ * cols_)
      throw std::invalid_argument("RealFft2d: size mismatch");
    std::vector<double> scratch(in.begin(), in.end());
    std::vector<std::complex<double>> out(rows_ * spectrum_cols());
    fftw_execute_dft_r2c(forward_, scratch.data(), detail::as_fftw(out.data()));
    return out;
  }

  std::vector<double> inverse(std::span<const std::complex<double>> in) const {
    if (in.size() != rows_ * spectrum_cols())
      throw std::invalid_argument("RealFft2d: spectrum size mismatch");
    std::vector<std::complex<double>> scratch(in.begin(), in.end());
    std::vector<double> out(rows_ * cols_);
    fftw_execute_dft_c2r(inverse_, detail::as_fftw(scratch.data()), out.data());
    const double scale = 1.0 / static_cast<double>(rows_ * cols_);
    for (double& v : out) v *= scale;
    return out;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace fmcwcs
