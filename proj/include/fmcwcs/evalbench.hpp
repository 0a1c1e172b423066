// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "fmcwcs/fmcw.hpp"
#include "fmcwcs/image_io.hpp"
#include "fmcwcs/random.hpp"
#include "fmcwcs/recon.hpp"
#include "fmcwcs/scene.hpp"
#include "fmcwcs/sensing.hpp"
#include "fmcwcs/spectral.hpp"

namespace fmcwcs {

// ---------------------------------------------------------------------------
// Statistics

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;  // sample std / sqrt(count); 0 for a single value
};

inline MeanSem mean_and_sem(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean_and_sem: no values");
  MeanSem out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sem = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return out;
}

/// Spearman rank correlation; tied values share their average rank.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("spearman: need two equally long series of length >= 2");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Depth-map scoring

/// Mean squared depth error over all pixels; invalid pixels count their full
/// truth^2.
inline double mse(const DepthMap& d, const Scene& truth) {
  if (d.width != truth.width || d.height != truth.height)
    throw std::invalid_argument("mse: depth map and scene differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = (d.valid[i] ? d.depths[i] : 0.0) - truth.depth_m[i];
    s += e * e;
  }
  return s / static_cast<double>(d.size());
}

inline int label_id(const Scene& s, const std::string& name) {
  for (const auto& [id, n] : s.label_names)
    if (n == name) return id;
  throw std::invalid_argument("scene has no object labelled '" + name + "'");
}

inline std::vector<std::size_t> label_pixels(const Scene& s, const std::string& name) {
  const int id = label_id(s, name);
  std::vector<std::size_t> px;
  for (std::size_t i = 0; i < s.label.size(); ++i)
    if (s.label[i] == id) px.push_back(i);
  return px;
}

/// samples[r][p]: depth of labelled pixel p in repetition r, NaN if invalid.
/// Per pixel the sample std (r - 1 denominator) of the error over the
/// repetitions where it was valid; pixels valid fewer than twice are skipped.
/// Returns the mean over the remaining pixels, NaN if none remain.
inline double depth_uncertainty_from_samples(const std::vector<std::vector<double>>& samples,
                                             std::span<const double> truth) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t p = 0; p < truth.size(); ++p) {
    std::vector<double> err;
    for (const auto& rep : samples)
      if (std::isfinite(rep[p])) err.push_back(rep[p] - truth[p]);
    if (err.size() < 2) continue;
    const double mean = std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(err.size());
    double ss = 0.0;
    for (double e : err) ss += (e - mean) * (e - mean);
    total += std::sqrt(ss / static_cast<double>(err.size() - 1));
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : std::numeric_limits<double>::quiet_NaN();
}

inline std::vector<double> label_depth_samples(const DepthMap& d, std::span<const std::size_t> px) {
  std::vector<double> out(px.size());
  for (std::size_t k = 0; k < px.size(); ++k)
    out[k] = d.valid[px[k]] ? d.depths[px[k]] : std::numeric_limits<double>::quiet_NaN();
  return out;
}

/// Mean per-pixel depth standard deviation of object `label` across
/// repeated reconstructions.
inline double object_depth_uncertainty(std::span<const DepthMap> reconstructions, const Scene& truth,
                                       const std::string& label) {
  if (reconstructions.size() < 2)
    throw std::invalid_argument("object_depth_uncertainty: need at least two reconstructions");
  const auto px = label_pixels(truth, label);
  std::vector<double> t(px.size());
  for (std::size_t k = 0; k < px.size(); ++k) t[k] = truth.depth_m[px[k]];
  std::vector<std::vector<double>> samples;
  for (const auto& d : reconstructions) {
    if (d.width != truth.width || d.height != truth.height)
      throw std::invalid_argument("object_depth_uncertainty: size mismatch");
    samples.push_back(label_depth_samples(d, px));
  }
  return depth_uncertainty_from_samples(samples, t);
}

// ---------------------------------------------------------------------------
// Raster baseline

struct RasterOptions {
  Window window = Window::hann;
  bool denoise = true;
  /// Off by default: the peak of a Lorentzian already sits at its centre.
  bool deconvolve = false;
  double wiener_nsr = 1e-3;
  /// Correlate with the expected line shape before taking the peak bin.
  /// Argmax of the denoised spectrum alone wanders by ~20 cm at PSNR 5 and
  /// 2 MHz; with the matched filter it stays near 1 cm.
  bool matched_filter = true;
};

/// Scans every pixel on its own: single-return spectrum, broadening, noise
/// at the pixel's own peak / psnr, denoising and matched filtering, then the
/// peak bin gives the depth. Noise for pixel l comes from stream derive_seed(seed, {l}).
inline DepthMap raster_baseline(const PixelReturns& returns, const ChirpConfig& cfg,
                                const NoiseModel& noise, const RasterOptions& opt = {}) {
  cfg.validate();
  noise.validate();
  auto out = DepthMap::empty(returns.width, returns.height);
  if (returns.size() != out.size())
    throw std::invalid_argument("raster_baseline: returns do not match their dimensions");
  const std::size_t bins = cfg.samples_per_sweep() / 2;
  const LorentzianFilter filter(bins, cfg.bin_width_hz(), noise.beat_linewidth_fwhm_hz);
  // Line shape left in the spectrum; never narrower than the window main lobe.
  const double line_fwhm = std::max(opt.deconvolve ? 0.0 : noise.beat_linewidth_fwhm_hz,
                                    2.0 * cfg.bin_width_hz());
  std::optional<LorentzianFilter> matched;
  if (opt.matched_filter) matched.emplace(bins, cfg.bin_width_hz(), line_fwhm);
  std::map<double, Spectrum> unit_by_delay;
  for (std::size_t l = 0; l < returns.size(); ++l) {
    const Return& r = returns.returns[l];
    if (r.amplitude <= 0.0) continue;
    auto it = unit_by_delay.find(r.delay_s);
    if (it == unit_by_delay.end()) {
      const Return unit{1.0, r.delay_s};
      const auto trace = synthesize_trace(std::span<const Return>(&unit, 1), returns.lo_amplitude,
                                          cfg, cfg.period_s);
      auto clean = positive_spectrum(trace, opt.window);
      it = unit_by_delay.emplace(r.delay_s, Spectrum{filter.convolve(clean.amplitudes), clean.bin_width_hz})
               .first;
    }
    Spectrum s = it->second;
    for (double& a : s.amplitudes) a *= r.amplitude;
    if (!noise.noiseless()) {
      Rng rng(derive_seed(noise.seed, {l}));
      s = add_white_noise(s, s.max() / noise.psnr, rng);
    }
    if (opt.denoise) s = denoise_bayes_shrink(s);
    if (opt.deconvolve) s = Spectrum{filter.deconvolve(s.amplitudes, opt.wiener_nsr), s.bin_width_hz};
    if (matched) s = Spectrum{matched->convolve(s.amplitudes), s.bin_width_hz};
    const auto peak = std::max_element(s.amplitudes.begin(), s.amplitudes.end());
    if (*peak <= 0.0) continue;
    const auto bin = static_cast<std::size_t>(peak - s.amplitudes.begin());
    out.depths[l] = distance_from_frequency(s.frequency(bin), cfg);
    out.valid[l] = 1;
  }
  return out;
}

inline DepthMap raster_baseline(const Scene& scene, const IlluminationProfile& illum,
                                const CollectionGeometry& geom, const ChirpConfig& cfg,
                                const NoiseModel& noise, const RasterOptions& opt = {}) {
  return raster_baseline(returns_from_scene(scene, illum, geom, cfg), cfg, noise, opt);
}

// ---------------------------------------------------------------------------
// Photon budget

struct FluxReport {
  double array_per_detector = 0.0;        // R t / alpha
  double compressive_per_projection = 0.0;  // R t / (2 m)
  double ratio = 0.0;                     // compressive / array = alpha / (2 m)
};

/// Photons per detector for a beta-pixel array seeing alpha lit pixels,
/// against one detector of an m-projection compressive scan in the same
/// total time.
inline FluxReport flux_accounting(double rate_hz, double time_s, double m, double alpha,
                                  double beta) {
  if (!(rate_hz > 0.0) || !(time_s > 0.0) || !(m > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("flux_accounting: all inputs must be positive");
  if (alpha > beta) throw std::invalid_argument("flux_accounting: alpha must not exceed beta");
  FluxReport r;
  r.array_per_detector = rate_hz * time_s / alpha;
  r.compressive_per_projection = rate_hz * time_s / (2.0 * m);
  r.ratio = r.compressive_per_projection / r.array_per_detector;
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  std::vector<double> sample_ratios = default_ratios();
  std::vector<double> psnr_levels{1.25, 2.5, 5.0, 10.0, 20.0,
                                  std::numeric_limits<double>::infinity()};
  std::vector<double> linewidths_hz{2e6, 1e6, 1e5};
  int repetitions = 10;
  std::uint64_t seed = 0;
  std::string uncertainty_label = "toroid";
  bool raster = true;
  RasterOptions raster_options;
  ReconOptions recon;
  SpectralOptions spectral;
  unsigned workers = 1;

  /// 0.02, 0.04, ..., 1.0
  static std::vector<double> default_ratios() {
    std::vector<double> r;
    for (int k = 1; k <= 50; ++k) r.push_back(k / 50.0);
    return r;
  }

  void validate() const {
    if (sample_ratios.empty()) throw std::invalid_argument("sweep: no sample ratios");
    for (std::size_t i = 0; i < sample_ratios.size(); ++i) {
      if (!(sample_ratios[i] > 0.0 && sample_ratios[i] <= 1.0))
        throw std::invalid_argument("sweep: sample ratios must lie in (0, 1]");
      if (i && !(sample_ratios[i] > sample_ratios[i - 1]))
        throw std::invalid_argument("sweep: sample ratios must be strictly ascending");
    }
    if (psnr_levels.empty()) throw std::invalid_argument("sweep: no psnr levels");
    for (double p : psnr_levels)
      if (!(p > 0.0)) throw std::invalid_argument("sweep: psnr levels must be > 0");
    if (linewidths_hz.empty()) throw std::invalid_argument("sweep: no linewidths");
    for (double w : linewidths_hz)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("sweep: linewidths must be finite and >= 0");
    if (repetitions < 1) throw std::invalid_argument("sweep: repetitions must be >= 1");
    if (workers < 1) throw std::invalid_argument("sweep: workers must be >= 1");
    recon.tv.validate();
  }
};

struct SweepRow {
  double ratio = 0.0;
  double psnr = 0.0;
  double linewidth_hz = 0.0;
  double mean_mse_m2 = 0.0;
  double sem_m2 = 0.0;
  double uncertainty_m = 0.0;  // NaN with fewer than two usable repetitions
  double mean_seconds = 0.0;
  std::size_t failed = 0;      // reconstructions aborted with an empty mask
  std::vector<double> mse_samples;
};

struct RasterRow {
  double psnr = 0.0;
  double linewidth_hz = 0.0;
  double uncertainty_m = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;      // linewidth-major, then psnr, then ratio
  std::vector<RasterRow> raster;   // linewidth-major, then psnr

  const SweepRow& at(double ratio, double psnr, double linewidth_hz) const {
    for (const auto& r : rows)
      if (r.ratio == ratio && r.psnr == psnr && r.linewidth_hz == linewidth_hz) return r;
    throw std::out_of_range("sweep result has no such cell");
  }
  std::optional<double> raster_uncertainty(double psnr, double linewidth_hz) const {
    for (const auto& r : raster)
      if (r.psnr == psnr && r.linewidth_hz == linewidth_hz) return r.uncertainty_m;
    return std::nullopt;
  }
};

struct SweepIo {
  /// Directory for cells.csv (per-cell records, appended as cells finish)
  /// and, with write_maps, per-run depth maps. Empty = keep everything in
  /// memory.
  std::filesystem::path out_dir;
  bool resume = false;
  bool write_maps = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sweep_fingerprint(const SweepSpec& s, const Scene& scene, const ChirpConfig& cfg) {
  std::ostringstream o;
  o << "seed=" << s.seed << " reps=" << s.repetitions << " n=" << scene.size()
    << " label=" << s.uncertainty_label << " raster=" << s.raster << " fs=" << fmt17(cfg.sample_rate_hz)
    << " ratios=";
  for (double r : s.sample_ratios) o << fmt17(r) << ';';
  o << " psnr=";
  for (double p : s.psnr_levels) o << fmt17(p) << ';';
  o << " lw=";
  for (double w : s.linewidths_hz) o << fmt17(w) << ';';
  std::uint64_t h = 1469598103934665603ull;
  for (double d : scene.depth_m) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    h = (h ^ bits) * 1099511628211ull;
  }
  o << " scene=" << std::hex << h;
  return o.str();
}

struct CellRecord {
  double mse = 0.0;
  double seconds = 0.0;
  bool failed = false;
  std::vector<double> label_depths;
};

// Key: (kind, linewidth, psnr, rep, ratio); kind 0 = compressive, 1 = raster.
using CellKey = std::tuple<int, double, double, int, double>;

inline std::string encode_cell(const CellKey& k, const CellRecord& r) {
  std::string line = std::to_string(std::get<0>(k)) + ',' + fmt17(std::get<1>(k)) + ',' +
                     fmt17(std::get<2>(k)) + ',' + std::to_string(std::get<3>(k)) + ',' +
                     fmt17(std::get<4>(k)) + ',' + fmt17(r.mse) + ',' + fmt17(r.seconds) + ',' +
                     (r.failed ? "1" : "0") + ',';
  for (std::size_t i = 0; i < r.label_depths.size(); ++i) {
    if (i) line += ';';
    line += fmt17(r.label_depths[i]);
  }
  return line;
}

inline std::map<CellKey, CellRecord> load_cells(const std::filesystem::path& path,
                                                const std::string& fingerprint) {
  std::map<CellKey, CellRecord> cells;
  std::ifstream in(path);
  if (!in) return cells;
  std::string line;
  if (!std::getline(in, line)) return cells;
  if (line != "# " + fingerprint)
    throw std::runtime_error("resume: " + path.string() + " belongs to a different sweep");
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 9) continue;  // torn final line from an interrupted run
    try {
      CellKey key{std::stoi(f[0]), std::strtod(f[1].c_str(), nullptr),
                  std::strtod(f[2].c_str(), nullptr), std::stoi(f[3]),
                  std::strtod(f[4].c_str(), nullptr)};
      CellRecord r;
      r.mse = std::strtod(f[5].c_str(), nullptr);
      r.seconds = std::strtod(f[6].c_str(), nullptr);
      r.failed = f[7] == "1";
      std::stringstream ds(f[8]);
      while (std::getline(ds, tok, ';')) r.label_depths.push_back(std::strtod(tok.c_str(), nullptr));
      cells[key] = std::move(r);
    } catch (const std::exception&) {
      continue;
    }
  }
  return cells;
}

}  // namespace detail

/// MSE-vs-ratio sweep over psnr levels and linewidths.
///
/// Each repetition r draws one sensing matrix (seed stream {0, r}) and one
/// noise stream ({1, r}); every psnr level and linewidth of that repetition
/// reuses them, and ascending ratios reuse row prefixes of a single
/// measurement. The raster baseline of
/// repetition r uses stream {2, r}. Cells run on `workers` threads and the
/// aggregate does not depend on their order.
inline SweepResult run_sweep(const SweepSpec& spec, const Scene& scene,
                             const IlluminationProfile& illum, const CollectionGeometry& geom,
                             const ChirpConfig& cfg, const SweepIo& io = {}) {
  spec.validate();
  cfg.validate();
  const std::size_t n = scene.size();
  const auto side = square_side(n, "run_sweep");
  if (static_cast<std::size_t>(scene.width) != side)
    throw std::invalid_argument("run_sweep: scene must be square");
  const auto returns = returns_from_scene(scene, illum, geom, cfg);
  const auto px = label_pixels(scene, spec.uncertainty_label);
  std::vector<double> px_truth(px.size());
  for (std::size_t k = 0; k < px.size(); ++k) px_truth[k] = scene.depth_m[px[k]];

  const std::string fingerprint = detail::sweep_fingerprint(spec, scene, cfg);
  std::map<detail::CellKey, detail::CellRecord> cells;
  std::ofstream log;
  if (!io.out_dir.empty()) {
    std::filesystem::create_directories(io.out_dir);
    if (io.write_maps) std::filesystem::create_directories(io.out_dir / "maps");
    const auto path = io.out_dir / "cells.csv";
    if (io.resume) cells = detail::load_cells(path, fingerprint);
    log.open(path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write " + path.string());
    log << "# " << fingerprint << '\n'
        << "kind,linewidth_hz,psnr,rep,ratio,mse_m2,seconds,failed,label_depths_m\n";
    for (const auto& [k, r] : cells) log << detail::encode_cell(k, r) << '\n';
    log.flush();
  }

  // A job is one (linewidth, psnr, rep) acquisition, compressive or raster.
  struct Job {
    int kind;
    double lw;
    double psnr;
    int rep;
  };
  std::vector<Job> jobs;
  auto complete = [&](const Job& j) {
    if (j.kind == 1) return cells.count({1, j.lw, j.psnr, j.rep, 0.0}) > 0;
    for (double ratio : spec.sample_ratios)
      if (!cells.count({0, j.lw, j.psnr, j.rep, ratio})) return false;
    return true;
  };
  for (double lw : spec.linewidths_hz)
    for (double p : spec.psnr_levels)
      for (int rep = 0; rep < spec.repetitions; ++rep) {
        jobs.push_back({0, lw, p, rep});
        if (spec.raster) jobs.push_back({1, lw, p, rep});
      }
  std::vector<Job> todo;
  for (const auto& j : jobs)
    if (!complete(j)) todo.push_back(j);

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::size_t done = jobs.size() - todo.size();
  std::exception_ptr failure;
  if (io.progress) io.progress(done, jobs.size());

  auto record = [&](const detail::CellKey& key, detail::CellRecord rec) {
    std::lock_guard lock(mu);
    if (log.is_open()) {
      log << detail::encode_cell(key, rec) << '\n';
      log.flush();
    }
    cells[key] = std::move(rec);
  };

  auto row_count = [n](double ratio) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
  };
  auto run_job = [&](const Job& j) {
    NoiseModel noise;
    noise.psnr = j.psnr;
    noise.beat_linewidth_fwhm_hz = j.lw;
    const auto rep = static_cast<std::uint64_t>(j.rep);
    const std::string tag = "lw" + detail::fmt17(j.lw) + "_psnr" + detail::fmt17(j.psnr) + "_rep" +
                            std::to_string(j.rep);
    if (j.kind == 1) {
      noise.seed = derive_seed(spec.seed, {2, rep});
      const auto t0 = std::chrono::steady_clock::now();
      const auto d = raster_baseline(returns, cfg, noise, spec.raster_options);
      detail::CellRecord rec;
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rec.mse = mse(d, scene);
      rec.label_depths = label_depth_samples(d, px);
      if (io.write_maps) write_pfm(d, (io.out_dir / "maps" / ("raster_" + tag + ".pfm")).string());
      record({1, j.lw, j.psnr, j.rep, 0.0}, std::move(rec));
      return;
    }
    noise.seed = derive_seed(spec.seed, {1, rep});
    // Rows beyond the largest ratio are never used; a shorter matrix from the
    // same seed is a prefix of the critically sampled one.
    const SensingMatrix full(n, row_count(spec.sample_ratios.back()), derive_seed(spec.seed, {0, rep}));
    const ProjectionAcquirer acq(returns, cfg, noise, spec.spectral);
    const auto t0 = std::chrono::steady_clock::now();
    const auto mv = acq.measure(full);
    const double acquire_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (double ratio : spec.sample_ratios) {
      {
        std::lock_guard lock(mu);
        if (cells.count({0, j.lw, j.psnr, j.rep, ratio})) continue;
      }
      const auto m = row_count(ratio);
      const auto a = full.prefix(m);
      const auto t1 = std::chrono::steady_clock::now();
      detail::CellRecord rec;
      DepthMap d = DepthMap::empty(scene.width, scene.height);
      try {
        d = reconstruct(a, mv.prefix(m), cfg, spec.recon).depth;
      } catch (const std::runtime_error&) {
        rec.failed = true;  // empty mask: every pixel invalid
      }
      rec.seconds = acquire_s * static_cast<double>(m) / static_cast<double>(full.rows()) +
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
      rec.mse = mse(d, scene);
      rec.label_depths = label_depth_samples(d, px);
      if (io.write_maps)
        write_pfm(d, (io.out_dir / "maps" / ("cs_" + tag + "_ratio" + detail::fmt17(ratio) + ".pfm")).string());
      record({0, j.lw, j.psnr, j.rep, ratio}, std::move(rec));
    }
  };

  auto worker = [&] {
    for (;;) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        run_job(todo[i]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      std::lock_guard lock(mu);
      ++done;
      if (io.progress) io.progress(done, jobs.size());
    }
  };
  const unsigned threads = std::min<unsigned>(spec.workers, static_cast<unsigned>(std::max<std::size_t>(1, todo.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  for (double lw : spec.linewidths_hz)
    for (double p : spec.psnr_levels) {
      for (double ratio : spec.sample_ratios) {
        SweepRow row;
        row.ratio = ratio;
        row.psnr = p;
        row.linewidth_hz = lw;
        std::vector<std::vector<double>> samples;
        double seconds = 0.0;
        for (int rep = 0; rep < spec.repetitions; ++rep) {
          const auto& c = cells.at({0, lw, p, rep, ratio});
          row.mse_samples.push_back(c.mse);
          samples.push_back(c.label_depths);
          seconds += c.seconds;
          row.failed += c.failed ? 1 : 0;
        }
        const auto ms = mean_and_sem(row.mse_samples);
        row.mean_mse_m2 = ms.mean;
        row.sem_m2 = ms.sem;
        row.uncertainty_m = depth_uncertainty_from_samples(samples, px_truth);
        row.mean_seconds = seconds / spec.repetitions;
        result.rows.push_back(std::move(row));
      }
      if (spec.raster) {
        std::vector<std::vector<double>> samples;
        for (int rep = 0; rep < spec.repetitions; ++rep)
          samples.push_back(cells.at({1, lw, p, rep, 0.0}).label_depths);
        result.raster.push_back({p, lw, depth_uncertainty_from_samples(samples, px_truth)});
      }
    }
  return result;
}

/// sweep_mse.csv and toroid_uncertainty.csv (deterministic for a given spec
/// and seed) plus timings.csv (wall-clock, not reproducible).
inline void write_sweep_csvs(const SweepResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  using detail::fmt17;
  {
    std::ofstream o(dir / "sweep_mse.csv");
    o << "ratio,psnr,linewidth_hz,mean_mse_m2,sem_m2\n";
    for (const auto& row : r.rows)
      o << fmt17(row.ratio) << ',' << fmt17(row.psnr) << ',' << fmt17(row.linewidth_hz) << ','
        << fmt17(row.mean_mse_m2) << ',' << fmt17(row.sem_m2) << '\n';
    if (!o) throw std::runtime_error("cannot write sweep_mse.csv");
  }
  {
    std::ofstream o(dir / "toroid_uncertainty.csv");
    o << "ratio,psnr,linewidth_hz,compressive_std_m,raster_std_m\n";
    for (const auto& row : r.rows) {
      const auto ras = r.raster_uncertainty(row.psnr, row.linewidth_hz);
      o << fmt17(row.ratio) << ',' << fmt17(row.psnr) << ',' << fmt17(row.linewidth_hz) << ','
        << fmt17(row.uncertainty_m) << ',' << (ras ? fmt17(*ras) : std::string("nan")) << '\n';
    }
    if (!o) throw std::runtime_error("cannot write toroid_uncertainty.csv");
  }
  {
    std::ofstream o(dir / "timings.csv");
    o << "ratio,psnr,linewidth_hz,mean_seconds,failed\n";
    for (const auto& row : r.rows)
      o << fmt17(row.ratio) << ',' << fmt17(row.psnr) << ',' << fmt17(row.linewidth_hz) << ','
        << fmt17(row.mean_seconds) << ',' << row.failed << '\n';
  }
}

}  // namespace fmcwcs
