// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmcwcs {

inline constexpr double kSpeedOfLight = 2.998e8;            // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
/// Radiometric prefactor eps0 * c relating field amplitude to power.
inline constexpr double kEps0C = kVacuumPermittivity * kSpeedOfLight;

enum class Waveform { sawtooth, triangle };

inline std::string to_string(Waveform w) {
  return w == Waveform::sawtooth ? "sawtooth" : "triangle";
}

inline Waveform waveform_from_string(const std::string& name) {
  if (name == "sawtooth") return Waveform::sawtooth;
  if (name == "triangle") return Waveform::triangle;
  throw std::invalid_argument("unknown waveform '" + name + "'");
}

/// Linear optical frequency sweep and the scope that records it.
///
/// The laser sweeps from start_frequency to start_frequency + bandwidth over
/// one period; the balanced detector output is sampled at sample_rate for
/// exactly one period per projection.
struct ChirpConfig {
  double start_frequency_hz = kSpeedOfLight / 780e-9;  // 780 nm
  double bandwidth_hz = 100e9;
  double period_s = 1e-3;
  double sample_rate_hz = 33.3e6;
  Waveform waveform = Waveform::sawtooth;
  /// When false the beat note is synthesised as the ideal sinusoid over the
  /// whole record, ignoring the samples where the delayed return still
  /// belongs to the previous ramp.
  bool model_sweep_reset = true;

  void validate() const {
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
      throw std::invalid_argument("chirp: bandwidth must be positive");
    if (!(period_s > 0.0) || !std::isfinite(period_s))
      throw std::invalid_argument("chirp: period must be positive");
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
      throw std::invalid_argument("chirp: sample rate must be positive");
    if (!std::isfinite(start_frequency_hz) || start_frequency_hz < 0.0)
      throw std::invalid_argument("chirp: start frequency must be finite and >= 0");
    if (samples_per_sweep() < 2)
      throw std::invalid_argument("chirp: fewer than 2 samples per sweep");
  }

  std::size_t samples_per_sweep() const {
    return static_cast<std::size_t>(std::llround(sample_rate_hz * period_s));
  }
  /// DFT bin spacing of one full-sweep record (= 1/T).
  double bin_width_hz() const {
    return sample_rate_hz / static_cast<double>(samples_per_sweep());
  }
  /// Metres of range per hertz of beat frequency (T c / (2 dnu)).
  double meters_per_hz() const {
    return period_s * kSpeedOfLight / (2.0 * bandwidth_hz);
  }
  /// Range spanned by one DFT bin.
  double range_resolution_m() const { return bin_width_hz() * meters_per_hz(); }
  /// Range whose beat note sits at the Nyquist frequency.
  double max_range_m() const { return 0.5 * sample_rate_hz * meters_per_hz(); }
};

/// Parameters of the reference simulation: 100 GHz over 1 ms, 33.3 MHz scope.
inline ChirpConfig paper_chirp() { return ChirpConfig{}; }

/// One reflected component: field amplitude and round-trip delay.
struct Return {
  double amplitude = 0.0;
  double delay_s = 0.0;
};

struct ScopeTrace {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
};

inline double round_trip_delay(double distance_m) {
  return 2.0 * distance_m / kSpeedOfLight;
}

/// Field amplitude whose optical power is `power_w` (P = eps0 c A^2 / 2).
inline double field_amplitude(double power_w) {
  if (!(power_w >= 0.0)) throw std::invalid_argument("field_amplitude: negative power");
  return std::sqrt(2.0 * power_w / kEps0C);
}

/// Beat-note frequency of a return delayed by `delay_s`: dnu * tau / T.
inline double beat_frequency(double delay_s, const ChirpConfig& cfg) {
  if (!(delay_s >= 0.0))
    throw std::invalid_argument("beat_frequency: delay must be >= 0");
  if (delay_s >= cfg.period_s)
    throw std::invalid_argument("beat_frequency: delay exceeds one sweep period");
  return cfg.bandwidth_hz * delay_s / cfg.period_s;
}

/// Target range for a beat frequency: nu T c / (2 dnu).
inline double distance_from_frequency(double nu_hz, const ChirpConfig& cfg) {
  if (!(nu_hz >= 0.0))
    throw std::invalid_argument("distance_from_frequency: frequency must be >= 0");
  return nu_hz * cfg.meters_per_hz();
}

/// Coherence length c / (pi * FWHM) of a Lorentzian line.
inline double coherence_length(double linewidth_fwhm_hz) {
  if (!(linewidth_fwhm_hz > 0.0))
    throw std::invalid_argument("coherence_length: linewidth must be positive");
  return kSpeedOfLight / (std::numbers::pi * linewidth_fwhm_hz);
}

namespace detail {

inline double frac(double x) { return x - std::floor(x); }

// Beat phase in cycles, LO phase minus delayed-signal phase, at time t for a
// return delayed by tau. The in-ramp branch is dnu*tau/T * t + phi with
// phi = nu0 tau - dnu tau^2 / (2T). Before t reaches tau the return still
// carries the previous ramp.
struct BeatPhase {
  double beat_hz;
  double phase0;        // frac(nu0 tau) - dnu tau^2 / (2T)
  double wrap_offset;   // sawtooth: frac(nu0 tau) - frac(nu0 T)
  double nu0_tau_frac;
  double tau;
  double chirp_rate;    // dnu / T
  double period;
  Waveform waveform;
  bool model_reset;

  BeatPhase(double delay, const ChirpConfig& cfg)
      : beat_hz(cfg.bandwidth_hz * delay / cfg.period_s),
        nu0_tau_frac(frac(cfg.start_frequency_hz * delay)),
        tau(delay),
        chirp_rate(cfg.bandwidth_hz / cfg.period_s),
        period(cfg.period_s),
        waveform(cfg.waveform),
        model_reset(cfg.model_sweep_reset) {
    phase0 = nu0_tau_frac - 0.5 * chirp_rate * delay * delay;
    wrap_offset = nu0_tau_frac - frac(cfg.start_frequency_hz * cfg.period_s);
  }

  double cycles(double t) const {
    if (t >= tau || !model_reset) return beat_hz * t + phase0;
    if (waveform == Waveform::sawtooth) {
      // Signal launched on the previous ramp: u = t - tau + T.
      const double u = t - tau + period;
      return wrap_offset + 0.5 * chirp_rate * (t * t - u * u);
    }
    // Triangle: the previous half-cycle sweeps back down to nu0 at u = 0.
    const double u = t - tau;
    return nu0_tau_frac + 0.5 * chirp_rate * (t * t + u * u);
  }
};

}  // namespace detail

/// Balanced-heterodyne scope trace for a set of returns over one sweep:
/// eps0 c sum_j A_LO A_j sin(2 pi (dnu tau_j / T) t + phi_j).
inline ScopeTrace synthesize_trace(std::span<const Return> returns, double lo_amplitude,
                                   const ChirpConfig& cfg, double duration_s) {
  cfg.validate();
  if (std::abs(duration_s - cfg.period_s) > 1e-12 * cfg.period_s)
    throw std::invalid_argument("synthesize_trace: duration must equal one sweep period");
  if (!std::isfinite(lo_amplitude))
    throw std::invalid_argument("synthesize_trace: non-finite LO amplitude");

  const std::size_t count = cfg.samples_per_sweep();
  ScopeTrace trace{std::vector<double>(count, 0.0), cfg.sample_rate_hz};
  const double dt = 1.0 / cfg.sample_rate_hz;
  for (const Return& r : returns) {
    if (!std::isfinite(r.amplitude) || r.amplitude < 0.0)
      throw std::invalid_argument("synthesize_trace: amplitude must be finite and >= 0");
    if (!(r.delay_s >= 0.0) || r.delay_s >= cfg.period_s)
      throw std::invalid_argument("synthesize_trace: delay outside [0, period)");
    if (r.amplitude == 0.0) continue;
    const double scale = kEps0C * lo_amplitude * r.amplitude;
    const detail::BeatPhase phase(r.delay_s, cfg);
    for (std::size_t s = 0; s < count; ++s) {
      const double t = static_cast<double>(s) * dt;
      trace.samples[s] += scale * std::sin(2.0 * std::numbers::pi * detail::frac(phase.cycles(t)));
    }
  }
  return trace;
}

}  // namespace fmcwcs
