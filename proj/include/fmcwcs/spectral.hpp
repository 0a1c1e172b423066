// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fmcwcs/fft.hpp"
#include "fmcwcs/fmcw.hpp"
#include "fmcwcs/random.hpp"
#include "fmcwcs/scene.hpp"
#include "fmcwcs/sensing.hpp"
#include "fmcwcs/wavelet.hpp"

namespace fmcwcs {

/// Positive-frequency magnitude spectrum. Element i is DFT bin i+1, so the
/// DC bin is not represented.
struct Spectrum {
  std::vector<double> amplitudes;
  double bin_width_hz = 0.0;

  std::size_t size() const { return amplitudes.size(); }
  double frequency(std::size_t i) const { return static_cast<double>(i + 1) * bin_width_hz; }
  double max() const {
    double m = 0.0;
    for (double a : amplitudes) m = std::max(m, a);
    return m;
  }
  double sum() const {
    double s = 0.0;
    for (double a : amplitudes) s += a;
    return s;
  }
};

enum class Window { hann, rectangular };

/// Complex DFT (bins 0..len/2) of the windowed trace, scaled by the
/// inverse window gain.
inline std::vector<std::complex<double>> windowed_dft(const ScopeTrace& trace,
                                                      Window window = Window::hann) {
  const std::size_t len = trace.samples.size();
  if (len < 2) throw std::invalid_argument("positive_spectrum: trace shorter than 2 samples");
  if (!(trace.sample_rate_hz > 0.0))
    throw std::invalid_argument("positive_spectrum: sample rate must be positive");
  std::vector<double> x(trace.samples);
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("positive_spectrum: non-finite sample");
  double gain = 1.0;
  if (window == Window::hann) {
    for (std::size_t s = 0; s < len; ++s)
      x[s] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(s) /
                                   static_cast<double>(len));
    gain = 0.5;
  }
  auto full = RealFft(len).forward(x);
  for (auto& c : full) c /= gain;
  return full;
}

/// Magnitudes of bins 1..floor(len/2) of a windowed DFT.
inline Spectrum magnitude_spectrum(std::span<const std::complex<double>> dft, std::size_t len,
                                   double sample_rate_hz) {
  Spectrum out{std::vector<double>(len / 2), sample_rate_hz / static_cast<double>(len)};
  for (std::size_t i = 0; i < out.size(); ++i) out.amplitudes[i] = std::abs(dft[i + 1]);
  return out;
}

/// Magnitude of DFT bins 1..floor(len/2) of a scope trace.
///
/// The default periodic Hann window is normalised to unit coherent gain, so
/// an on-bin sinusoid of amplitude a still peaks at a*len/2.
inline Spectrum positive_spectrum(const ScopeTrace& trace, Window window = Window::hann) {
  const auto dft = windowed_dft(trace, window);
  return magnitude_spectrum(dft, trace.samples.size(), trace.sample_rate_hz);
}

/// Circular Lorentzian line-shape filter over an N-bin spectrum: kernel
/// (fwhm/2pi) / (f^2 + (fwhm/2)^2) sampled at bin offsets and normalised to
/// unit sum. Holds the kernel transform for repeated use.
class LorentzianFilter {
 public:
  LorentzianFilter(std::size_t bins, double bin_width_hz, double fwhm_hz)
      : bins_(bins), fwhm_(fwhm_hz) {
    if (bins == 0) throw std::invalid_argument("LorentzianFilter: empty spectrum");
    if (!(fwhm_hz >= 0.0) || !std::isfinite(fwhm_hz))
      throw std::invalid_argument("LorentzianFilter: linewidth must be finite and >= 0");
    if (!(bin_width_hz > 0.0))
      throw std::invalid_argument("LorentzianFilter: bin width must be positive");
    if (fwhm_hz == 0.0) return;
    kernel_ = lorentzian_kernel(bins, bin_width_hz, fwhm_hz);
    fft_.emplace(bins);
    transfer_ = fft_->forward(kernel_);
  }

  static std::vector<double> lorentzian_kernel(std::size_t bins, double bin_width_hz,
                                               double fwhm_hz) {
    std::vector<double> k(bins);
    const double gamma = 0.5 * fwhm_hz;
    double sum = 0.0;
    for (std::size_t j = 0; j < bins; ++j) {
      const double offset = (j <= bins / 2) ? static_cast<double>(j)
                                            : static_cast<double>(j) - static_cast<double>(bins);
      const double f = offset * bin_width_hz;
      k[j] = (gamma / std::numbers::pi) / (f * f + gamma * gamma);
      sum += k[j];
    }
    for (double& v : k) v /= sum;
    return k;
  }

  bool is_identity() const { return fwhm_ == 0.0; }
  std::span<const double> kernel() const { return kernel_; }

  std::vector<double> convolve(std::span<const double> x) const {
    check(x);
    if (is_identity()) return {x.begin(), x.end()};
    auto spec = fft_->forward(x);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= transfer_[i];
    return fft_->inverse(spec);
  }

  /// Wiener estimate X = Y conj(H) / (|H|^2 + nsr).
  std::vector<double> deconvolve(std::span<const double> y, double nsr) const {
    check(y);
    if (!(nsr >= 0.0)) throw std::invalid_argument("wiener_deconvolve: nsr must be >= 0");
    if (is_identity()) {
      std::vector<double> out(y.begin(), y.end());
      for (double& v : out) v /= 1.0 + nsr;
      return out;
    }
    auto spec = fft_->forward(y);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const std::complex<double> h = transfer_[i];
      spec[i] *= std::conj(h) / (std::norm(h) + nsr);
    }
    return fft_->inverse(spec);
  }

 private:
  void check(std::span<const double> x) const {
    if (x.size() != bins_) throw std::invalid_argument("LorentzianFilter: length mismatch");
  }

  std::size_t bins_;
  double fwhm_;
  std::vector<double> kernel_;
  std::optional<RealFft> fft_;
  std::vector<std::complex<double>> transfer_;
};

/// Circular convolution of the spectrum with a unit-area Lorentzian.
inline Spectrum broaden(const Spectrum& spec, double fwhm_hz) {
  const LorentzianFilter filter(spec.size(), spec.bin_width_hz, fwhm_hz);
  return {filter.convolve(spec.amplitudes), spec.bin_width_hz};
}

inline void clamp_nonnegative(std::vector<double>& v) {
  for (double& a : v) a = std::max(a, 0.0);
}

/// Wiener deconvolution of a known Lorentzian line shape, clamped at zero.
/// A zero linewidth means H = 1.
inline Spectrum wiener_deconvolve(const Spectrum& spec, double kernel_fwhm_hz, double nsr) {
  if (!(nsr >= 0.0)) throw std::invalid_argument("wiener_deconvolve: nsr must be >= 0");
  const LorentzianFilter filter(spec.size(), spec.bin_width_hz, kernel_fwhm_hz);
  Spectrum out{filter.deconvolve(spec.amplitudes, nsr), spec.bin_width_hz};
  clamp_nonnegative(out.amplitudes);
  return out;
}

struct NoiseModel {
  double beat_linewidth_fwhm_hz = 2e6;
  double psnr = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  void validate() const {
    if (!(beat_linewidth_fwhm_hz >= 0.0) || !std::isfinite(beat_linewidth_fwhm_hz))
      throw std::invalid_argument("noise: linewidth must be finite and >= 0");
    if (!(psnr > 0.0)) throw std::invalid_argument("noise: psnr must be > 0 (or infinite)");
  }
  bool noiseless() const { return std::isinf(psnr); }
};

/// Adds i.i.d. N(0, sigma) to every bin; optionally clamps at zero.
inline Spectrum add_white_noise(const Spectrum& spec, double sigma, Rng& rng,
                                bool clamp = true) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_white_noise: sigma must be >= 0");
  Spectrum out = spec;
  if (sigma == 0.0) return out;
  for (double& a : out.amplitudes) a += sigma * rng.normal();
  if (clamp) clamp_nonnegative(out.amplitudes);
  return out;
}

/// White noise whose standard deviation makes the brightest bin of `spec`
/// sit at the requested peak SNR. Infinite psnr leaves the spectrum as is.
inline Spectrum inject_noise(const Spectrum& spec, double psnr, Rng& rng) {
  if (!(psnr > 0.0)) throw std::invalid_argument("inject_noise: psnr must be > 0");
  if (std::isinf(psnr)) return spec;
  return add_white_noise(spec, spec.max() / psnr, rng);
}

inline Spectrum inject_noise(const Spectrum& spec, const NoiseModel& noise) {
  Rng rng(noise.seed);
  return inject_noise(spec, noise.psnr, rng);
}

namespace detail {

inline double median_abs(std::span<const double> v) {
  std::vector<double> a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  if (a.empty()) return 0.0;
  const std::size_t mid = a.size() / 2;
  std::nth_element(a.begin(), a.begin() + mid, a.end());
  if (a.size() % 2 == 1) return a[mid];
  const double upper = a[mid];
  const double lower = *std::max_element(a.begin(), a.begin() + mid);
  return 0.5 * (lower + upper);
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace detail

/// BayesShrink wavelet denoiser (symlet-20, deepest admissible level).
///
/// Noise sigma comes from the finest detail band (median |d| / 0.6745); each
/// detail band is soft-thresholded at sigma^2 / sigma_signal with
/// sigma_signal = sqrt(max(mean(d^2) - sigma^2, 0)), and bands judged to be
/// pure noise are zeroed. The approximation band is kept. Output is clamped
/// at zero.
inline Spectrum denoise_bayes_shrink(const Spectrum& spec,
                                     const FilterBank& bank = sym20_filters()) {
  const std::size_t levels = dwt_max_level(spec.size(), bank.length());
  if (levels == 0)
    throw std::invalid_argument("denoise_bayes_shrink: spectrum shorter than the wavelet");
  auto dec = wavedec(spec.amplitudes, bank, levels);
  const double sigma = detail::median_abs(dec.details.front()) / 0.6745;
  const double noise_var = sigma * sigma;
  for (auto& band : dec.details) {
    double energy = 0.0;
    for (double d : band) energy += d * d;
    const double band_var = energy / static_cast<double>(band.size());
    const double signal_sigma = std::sqrt(std::max(band_var - noise_var, 0.0));
    if (signal_sigma == 0.0) {
      std::fill(band.begin(), band.end(), 0.0);
      continue;
    }
    const double t = noise_var / signal_sigma;
    for (double& d : band) d = detail::soft_threshold(d, t);
  }
  Spectrum out{waverec(dec, bank), spec.bin_width_hz};
  clamp_nonnegative(out.amplitudes);
  return out;
}

// ---------------------------------------------------------------------------
// Acquisition

struct SpectralOptions {
  Window window = Window::hann;
  double wiener_nsr = 1e-3;
  bool denoise = true;
  bool deconvolve = true;
};

/// Every intermediate of one detector's processing chain.
struct StageSpectra {
  Spectrum clean;
  Spectrum broadened;
  Spectrum noisy;
  Spectrum denoised;
  Spectrum deconvolved;
};

/// Cleaned spectra of the (1,0) and (0,1) detections of one projection.
struct ProjectionSpectra {
  Spectrum pos;
  Spectrum neg;
};

enum class FrequencyWeighting { linear, sqrt };

inline double frequency_weight(double f_hz, FrequencyWeighting w) {
  return w == FrequencyWeighting::linear ? f_hz : std::sqrt(f_hz);
}

/// The 2m numbers kept from an acquisition.
struct MeasurementVectors {
  std::vector<double> y_i;
  std::vector<double> y_inu;
  std::size_t bins = 0;
  double bin_width_hz = 0.0;
  FrequencyWeighting weighting = FrequencyWeighting::linear;

  std::size_t projections() const { return y_i.size(); }
  std::size_t stored_scalars() const { return y_i.size() + y_inu.size(); }

  MeasurementVectors prefix(std::size_t m) const {
    if (m > projections()) throw std::invalid_argument("MeasurementVectors::prefix: m too large");
    MeasurementVectors out = *this;
    out.y_i.resize(m);
    out.y_inu.resize(m);
    return out;
  }
};

/// (y_I[k], y_Inu[k]) of one projection: sums of the differenced spectrum,
/// unweighted and weighted by bin-centre frequency in Hz.
inline std::pair<double, double> projection_sums(
    const Spectrum& pos, const Spectrum& neg,
    FrequencyWeighting weighting = FrequencyWeighting::linear) {
  if (pos.size() != neg.size() || pos.bin_width_hz != neg.bin_width_hz)
    throw std::invalid_argument("projection_sums: detector spectra differ in shape");
  double yi = 0.0;
  double yinu = 0.0;
  for (std::size_t b = 0; b < pos.size(); ++b) {
    const double diff = pos.amplitudes[b] - neg.amplitudes[b];
    yi += diff;
    yinu += diff * frequency_weight(pos.frequency(b), weighting);
  }
  return {yi, yinu};
}

inline MeasurementVectors accumulate(std::span<const ProjectionSpectra> spectra,
                                     FrequencyWeighting weighting = FrequencyWeighting::linear) {
  MeasurementVectors mv;
  mv.weighting = weighting;
  if (spectra.empty()) return mv;
  mv.bins = spectra.front().pos.size();
  mv.bin_width_hz = spectra.front().pos.bin_width_hz;
  for (const auto& p : spectra) {
    if (p.pos.size() != mv.bins || p.neg.size() != mv.bins)
      throw std::invalid_argument("accumulate: spectra lengths differ across projections");
    const auto [yi, yinu] = projection_sums(p.pos, p.neg, weighting);
    mv.y_i.push_back(yi);
    mv.y_inu.push_back(yinu);
  }
  return mv;
}

/// Simulates detections of a fixed scene for arbitrary DMD patterns.
///
/// Returns sharing a delay are merged, so each detector trace is a weighted
/// sum of one unit trace per distinct depth. For scenes with few distinct
/// depths the windowed DFT of every unit trace is cached as well and a
/// detector spectrum is formed directly in the frequency domain.
class ProjectionAcquirer {
 public:
  ProjectionAcquirer(const PixelReturns& returns, const ChirpConfig& cfg,
                     const NoiseModel& noise, SpectralOptions options = {})
      : cfg_(cfg), noise_(noise), options_(options), pixels_(returns.size()) {
    cfg.validate();
    noise.validate();
    if (!(options.wiener_nsr >= 0.0))
      throw std::invalid_argument("acquisition: wiener nsr must be >= 0");
    std::map<double, std::size_t> by_delay;
    pixel_group_.assign(pixels_, kNoGroup);
    pixel_amplitude_.assign(pixels_, 0.0);
    for (std::size_t i = 0; i < pixels_; ++i) {
      const Return& r = returns.returns[i];
      if (r.amplitude <= 0.0) continue;
      auto [it, inserted] = by_delay.try_emplace(r.delay_s, by_delay.size());
      pixel_group_[i] = it->second;
      pixel_amplitude_[i] = r.amplitude;
    }
    unit_traces_.resize(by_delay.size());
    for (const auto& [delay, g] : by_delay) {
      const Return unit{1.0, delay};
      unit_traces_[g] =
          synthesize_trace(std::span<const Return>(&unit, 1), returns.lo_amplitude, cfg, cfg.period_s)
              .samples;
    }
    bins_ = cfg.samples_per_sweep() / 2;
    filter_.emplace(bins_, cfg.bin_width_hz(), noise.beat_linewidth_fwhm_hz);
    if (unit_traces_.size() <= kMaxCachedSpectra) {
      for (const auto& unit : unit_traces_)
        unit_spectra_.push_back(windowed_dft(ScopeTrace{unit, cfg.sample_rate_hz}, options.window));
    }
  }

  std::size_t pixels() const { return pixels_; }
  std::size_t bins() const { return bins_; }
  double bin_width_hz() const { return cfg_.bin_width_hz(); }
  const ChirpConfig& chirp() const { return cfg_; }
  const NoiseModel& noise() const { return noise_; }
  const SpectralOptions& options() const { return options_; }

  /// Scope trace of the detector seeing the pixels set in `mask`.
  ScopeTrace detector_trace(std::span<const std::uint8_t> mask) const {
    const auto weight = group_weights(mask);
    ScopeTrace trace{std::vector<double>(cfg_.samples_per_sweep(), 0.0), cfg_.sample_rate_hz};
    for (std::size_t g = 0; g < unit_traces_.size(); ++g) {
      if (weight[g] == 0.0) continue;
      const auto& unit = unit_traces_[g];
      for (std::size_t s = 0; s < unit.size(); ++s) trace.samples[s] += weight[g] * unit[s];
    }
    return trace;
  }

  /// Noiseless positive spectrum of the detector seeing `mask`.
  Spectrum clean_spectrum(std::span<const std::uint8_t> mask) const {
    if (unit_spectra_.empty() && !unit_traces_.empty())
      return positive_spectrum(detector_trace(mask), options_.window);
    const auto weight = group_weights(mask);
    const std::size_t len = cfg_.samples_per_sweep();
    std::vector<std::complex<double>> dft(len / 2 + 1, 0.0);
    for (std::size_t g = 0; g < unit_spectra_.size(); ++g) {
      if (weight[g] == 0.0) continue;
      const auto& u = unit_spectra_[g];
      for (std::size_t i = 0; i < dft.size(); ++i) dft[i] += weight[g] * u[i];
    }
    return magnitude_spectrum(dft, len, cfg_.sample_rate_hz);
  }

  /// Runs both detections of row k. Noise is calibrated per projection:
  /// sigma = (brightest broadened bin over both detectors) / psnr, drawn
  /// independently for each detector from streams keyed by (seed, k).
  ProjectionSpectra acquire(const SensingMatrix& a, std::size_t k,
                            StageSpectra* pos_stages = nullptr,
                            StageSpectra* neg_stages = nullptr) const {
    if (a.cols() != pixels_) throw std::invalid_argument("acquire: sensing matrix size mismatch");
    const auto [mask_pos, mask_neg] = a.split_pattern(k);
    StageSpectra pos;
    StageSpectra neg;
    pos.clean = clean_spectrum(mask_pos);
    neg.clean = clean_spectrum(mask_neg);
    pos.broadened = Spectrum{filter_->convolve(pos.clean.amplitudes), pos.clean.bin_width_hz};
    neg.broadened = Spectrum{filter_->convolve(neg.clean.amplitudes), neg.clean.bin_width_hz};
    const double sigma = noise_sigma(pos.broadened, neg.broadened);
    Rng rng_pos(derive_seed(noise_.seed, {k, 0}));
    Rng rng_neg(derive_seed(noise_.seed, {k, 1}));
    pos.noisy = add_white_noise(pos.broadened, sigma, rng_pos);
    neg.noisy = add_white_noise(neg.broadened, sigma, rng_neg);
    finish(pos);
    finish(neg);
    ProjectionSpectra out{pos.deconvolved, neg.deconvolved};
    if (pos_stages) *pos_stages = std::move(pos);
    if (neg_stages) *neg_stages = std::move(neg);
    return out;
  }

  double noise_sigma(const Spectrum& pos_broadened, const Spectrum& neg_broadened) const {
    if (noise_.noiseless()) return 0.0;
    return std::max(pos_broadened.max(), neg_broadened.max()) / noise_.psnr;
  }

  /// Denoise and deconvolve a noisy detector spectrum in place.
  void finish(StageSpectra& s) const {
    s.denoised = options_.denoise ? denoise_bayes_shrink(s.noisy) : s.noisy;
    if (options_.deconvolve) {
      s.deconvolved =
          Spectrum{filter_->deconvolve(s.denoised.amplitudes, options_.wiener_nsr), s.denoised.bin_width_hz};
      clamp_nonnegative(s.deconvolved.amplitudes);
    } else {
      s.deconvolved = s.denoised;
    }
  }

  /// Acquires rows [0, a.rows()) and reduces them to (y_I, y_Inu). Rows are
  /// independent; `workers` > 1 spreads them over threads without changing
  /// the result.
  MeasurementVectors measure(const SensingMatrix& a, unsigned workers = 1,
                             FrequencyWeighting weighting = FrequencyWeighting::linear,
                             const std::function<void(std::size_t)>& progress = {}) const {
    const std::size_t m = a.rows();
    MeasurementVectors mv;
    mv.y_i.assign(m, 0.0);
    mv.y_inu.assign(m, 0.0);
    mv.bins = bins_;
    mv.bin_width_hz = bin_width_hz();
    mv.weighting = weighting;
    auto run = [&](std::size_t k) {
      const auto p = acquire(a, k);
      const auto [yi, yinu] = projection_sums(p.pos, p.neg, weighting);
      mv.y_i[k] = yi;
      mv.y_inu[k] = yinu;
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
      for (std::size_t k = 0; k < m; ++k) {
        run(k);
        if (progress) progress(k + 1);
      }
      return mv;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < m; k += workers) run(k);
      });
    for (auto& t : pool) t.join();
    if (progress) progress(m);
    return mv;
  }

 private:
  static constexpr std::size_t kNoGroup = static_cast<std::size_t>(-1);
  static constexpr std::size_t kMaxCachedSpectra = 64;

  std::vector<double> group_weights(std::span<const std::uint8_t> mask) const {
    if (mask.size() != pixels_) throw std::invalid_argument("detector: mask size mismatch");
    std::vector<double> weight(unit_traces_.size(), 0.0);
    for (std::size_t i = 0; i < pixels_; ++i)
      if (mask[i] && pixel_group_[i] != kNoGroup) weight[pixel_group_[i]] += pixel_amplitude_[i];
    return weight;
  }

  ChirpConfig cfg_;
  NoiseModel noise_;
  SpectralOptions options_;
  std::size_t pixels_;
  std::size_t bins_ = 0;
  std::vector<std::size_t> pixel_group_;
  std::vector<double> pixel_amplitude_;
  std::vector<std::vector<double>> unit_traces_;
  std::vector<std::vector<std::complex<double>>> unit_spectra_;
  std::optional<LorentzianFilter> filter_;
};

/// One projection through the full chain: synthesis per detector mask, then
/// positive_spectrum -> broaden -> inject_noise -> denoise -> deconvolve.
inline ProjectionSpectra acquire_projection(const PixelReturns& returns, const SensingMatrix& a,
                                            std::size_t k, const ChirpConfig& cfg,
                                            const NoiseModel& noise,
                                            const SpectralOptions& options = {}) {
  return ProjectionAcquirer(returns, cfg, noise, options).acquire(a, k);
}

}  // namespace fmcwcs
