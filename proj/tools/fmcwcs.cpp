// SPDX-License-Identifier: Apache-2.0
// fmcwcs: scene generation, single acquisitions, sweeps, raster baseline and
// flux accounting from the command line.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fmcwcs/fmcwcs.hpp"

namespace fs = std::filesystem;
using namespace fmcwcs;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr std::uint64_t kDefaultSeed = 1;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CommonArgs {
  std::string config;
  std::string preset;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> workers;
  std::string scene;
  std::optional<int> size;
  std::optional<double> psnr;
  std::optional<double> linewidth;
  std::optional<double> ratio;
  bool force = false;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("-c,--config", a.config, "TOML configuration file");
  sub->add_option("--preset", a.preset, "desk (32x32) or paper (128x128)")
      ->check(CLI::IsMember({"desk", "paper"}));
  sub->add_option("--set", a.sets, "Override a config key, e.g. --set tv.alpha=0.01");
  sub->add_option("--seed", a.seed, "Master seed");
  sub->add_option("-o,--out", a.out, "Output directory (default $FMCWCS_OUT_DIR or ./fmcwcs-out)");
  sub->add_option("-j,--workers", a.workers, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--scene", a.scene, "Built-in scene name or scene file");
  sub->add_option("--size", a.size, "Scene width and height for built-in scenes");
  sub->add_option("--psnr", a.psnr, "Spectral PSNR (inf for noiseless)");
  sub->add_option("--linewidth", a.linewidth, "Beat-note Lorentzian FWHM in Hz");
  sub->add_option("--ratio", a.ratio, "Sample ratio m/n");
  sub->add_flag("--force", a.force, "Replace an existing output directory");
}

RunConfig resolve(const CommonArgs& a) {
  RunConfig c;
  if (!a.config.empty()) {
    c = load_config_file(a.config, a.preset);
  } else {
    apply_preset(c, a.preset.empty() ? "desk" : a.preset);
  }
  for (const auto& s : a.sets) apply_override(c, s);
  if (a.seed) c.seed = *a.seed;
  if (!a.out.empty()) c.output_dir = a.out;
  if (a.workers) c.workers = *a.workers;
  if (!a.scene.empty()) c.scene = a.scene;
  if (a.size) c.width = c.height = *a.size;
  if (a.psnr) c.noise.psnr = *a.psnr;
  if (a.linewidth) c.noise.beat_linewidth_fwhm_hz = *a.linewidth;
  if (a.ratio) c.sample_ratio = *a.ratio;
  c.validate();
  return c;
}

Scene load_checked_scene(const RunConfig& c) {
  Scene s = c.load_scene_source();
  try {
    s.validate(c.chirp.max_range_m());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scene.source", e.what());
  }
  return s;
}

void require_square_pow2(const Scene& s) {
  const std::size_t n = s.size();
  if (s.width != s.height || (n & (n - 1)) != 0)
    throw ConfigError("scene.source", "needs a square scene whose pixel count is a power of two, got " +
                                          std::to_string(s.width) + "x" + std::to_string(s.height));
}

/// Artifacts are written to a sibling directory and moved into place only
/// when the command succeeds.
class Staging {
 public:
  Staging(fs::path final_dir, bool force) {
    final_dir = final_dir.lexically_normal();
    if (final_dir.filename().empty()) final_dir = final_dir.parent_path();
    final_ = fs::absolute(final_dir);
    if (fs::exists(final_) && !(fs::is_directory(final_) && fs::is_empty(final_)) && !force)
      throw std::runtime_error("output directory '" + final_.string() +
                               "' is not empty (pass --force to replace it)");
    fs::create_directories(final_.parent_path());
    tmp_ = final_.parent_path() / ("." + final_.filename().string() + ".partial-" + std::to_string(::getpid()));
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;
  ~Staging() {
    std::error_code ec;
    if (!committed_) fs::remove_all(tmp_, ec);
  }

  fs::path path(const std::string& name) const { return tmp_ / name; }
  const fs::path& final_dir() const { return final_; }

  void commit() {
    fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path tmp_;
  bool committed_ = false;
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(const nlohmann::json& j, const fs::path& p) {
  std::ofstream o(p);
  o << j.dump(2) << '\n';
  if (!o) throw std::runtime_error("write failed for '" + p.string() + "'");
}

void write_text(const std::string& s, const fs::path& p) {
  std::ofstream o(p);
  o << s;
  if (!o) throw std::runtime_error("write failed for '" + p.string() + "'");
}

/// Long format: one row per stored scalar, 2m rows in total.
void write_measurements(const MeasurementVectors& mv, const fs::path& p) {
  std::ofstream o(p);
  o << "k,quantity,value\n";
  for (std::size_t k = 0; k < mv.projections(); ++k) {
    o << k << ",y_i," << g17(mv.y_i[k]) << '\n';
    o << k << ",y_inu," << g17(mv.y_inu[k]) << '\n';
  }
  if (!o) throw std::runtime_error("write failed for '" + p.string() + "'");
}

void write_stage_csvs(const StageSpectra& pos, const StageSpectra& neg, std::size_t k,
                      const fs::path& dir) {
  fs::create_directories(dir);
  const std::pair<const char*, const Spectrum StageSpectra::*> stages[] = {
      {"1_clean", &StageSpectra::clean},         {"2_broadened", &StageSpectra::broadened},
      {"3_noisy", &StageSpectra::noisy},         {"4_denoised", &StageSpectra::denoised},
      {"5_deconvolved", &StageSpectra::deconvolved}};
  for (const auto& [name, member] : stages) {
    const Spectrum& a = pos.*member;
    const Spectrum& b = neg.*member;
    const auto p = dir / ("k" + std::to_string(k) + "_" + name + ".csv");
    std::ofstream o(p);
    o << "frequency_hz,pos,neg\n";
    for (std::size_t i = 0; i < a.size(); ++i)
      o << g17(a.frequency(i)) << ',' << g17(a.amplitudes[i]) << ',' << g17(b.amplitudes[i]) << '\n';
    if (!o) throw std::runtime_error("write failed for '" + p.string() + "'");
  }
}

void write_depth_outputs(const DepthMap& d, const RunConfig& c, const Staging& st) {
  write_pfm(d, st.path("depth.pfm").string());
  const double full = c.pgm_full_scale_m > 0.0 ? c.pgm_full_scale_m : c.chirp.max_range_m();
  write_pgm16(d, full, st.path("depth.pgm").string());
  write_depth_csv(d, st.path("depth.csv").string());
}

nlohmann::json ls_json(const LsResult& r) {
  return {{"iterations", r.iterations},
          {"relative_residual", r.relative_residual},
          {"converged", r.converged},
          {"rank_deficient", r.rank_deficient}};
}

nlohmann::json base_metadata(const std::string& command, const RunConfig& c, const Scene& s) {
  return {{"tool", "fmcwcs"},
          {"command", command},
          {"seed", c.seed.value_or(kDefaultSeed)},
          {"config", config_to_json(c)},
          {"scene", {{"source", c.scene}, {"width", s.width}, {"height", s.height},
                     {"max_depth_m", s.max_depth()}}},
          {"chirp", {{"samples_per_sweep", c.chirp.samples_per_sweep()},
                     {"bin_width_hz", c.chirp.bin_width_hz()},
                     {"range_resolution_m", c.chirp.range_resolution_m()},
                     {"max_range_m", c.chirp.max_range_m()}}}};
}

int cmd_scene(RunConfig c, const CommonArgs& a, const std::string& output, std::optional<double> depth) {
  if (c.width < 1 || c.height < 1) throw ConfigError("scene.width", "dimensions must be >= 1");
  if (!c.scene_is_builtin())
    throw ConfigError("scene.source", "'" + c.scene +
                                          "' is not a generator (paper-demo, single-plane, two-plane, torus-only)");
  Scene s;
  if (depth && c.scene == "single-plane") s = single_plane_scene(c.width, c.height, *depth);
  else if (depth && c.scene == "torus-only") s = torus_scene(c.width, c.height, *depth);
  else s = builtin_scene(c.scene, c.width, c.height);
  s.validate(c.chirp.max_range_m());
  fs::path p = output.empty() ? c.resolved_output_dir() / "scene.txt" : fs::path(output);
  if (fs::exists(p) && !a.force)
    throw std::runtime_error("'" + p.string() + "' exists (pass --force to replace it)");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  // Same extension, so save_scene picks the same format.
  auto tmp = p;
  tmp.replace_filename("." + p.stem().string() + ".partial" + p.extension().string());
  save_scene(s, tmp);
  fs::rename(tmp, p);
  std::cout << "wrote " << p.string() << " (" << s.width << "x" << s.height << ", max depth "
            << s.max_depth() << " m)\n";
  return 0;
}

int cmd_acquire(const RunConfig& c, const CommonArgs& a, const std::vector<std::size_t>& dump_stages) {
  const auto t_total = Clock::now();
  const Scene scene = load_checked_scene(c);
  require_square_pow2(scene);
  const std::size_t n = scene.size();
  const std::size_t m = c.projection_count(n);
  if (m > n) throw ConfigError("acquisition.projections", "exceeds the pixel count " + std::to_string(n));
  for (std::size_t k : dump_stages)
    if (k >= m) throw ConfigError("dump-stages", "projection " + std::to_string(k) + " is not below m = " + std::to_string(m));
  const std::uint64_t seed = c.seed.value_or(kDefaultSeed);
  Staging st(c.resolved_output_dir(), a.force);

  auto t0 = Clock::now();
  const auto returns = returns_from_scene(scene, c.illumination_profile(scene.width, scene.height),
                                          c.geometry, c.chirp);
  const double t_returns = seconds_since(t0);

  NoiseModel noise = c.noise;
  noise.seed = derive_seed(seed, {1, 0});
  const std::uint64_t matrix_seed = derive_seed(seed, {0, 0});
  const SensingMatrix A(n, m, matrix_seed);
  const ProjectionAcquirer acq(returns, c.chirp, noise, c.spectral);
  t0 = Clock::now();
  const auto mv = acq.measure(A, c.workers, c.weighting);
  const double t_acquire = seconds_since(t0);

  t0 = Clock::now();
  const auto rec = reconstruct(A, mv, c.chirp, c.recon);
  const double t_recon = seconds_since(t0);

  write_measurements(mv, st.path("measurements.csv"));
  write_depth_outputs(rec.depth, c, st);
  for (std::size_t k : dump_stages) {
    StageSpectra pos, neg;
    acq.acquire(A, k, &pos, &neg);
    write_stage_csvs(pos, neg, k, st.path("stages"));
  }
  write_text(config_to_toml(c), st.path("config.toml"));

  const double err = mse(rec.depth, scene);
  auto meta = base_metadata("acquire", c, scene);
  meta["seed"] = seed;
  meta["derived_seeds"] = {{"matrix", matrix_seed}, {"noise", noise.seed}};
  meta["n"] = n;
  meta["m"] = m;
  meta["stored_scalars"] = mv.stored_scalars();
  meta["result"] = {{"valid_pixels", rec.depth.valid_count()},
                    {"clamped_pixels", rec.depth.clamped},
                    {"mse_m2", err},
                    {"mask_pixels", mask_count(rec.mask)},
                    {"support_size", rec.support.size()},
                    {"tv", {{"alpha", rec.tv.alpha},
                            {"outer_iterations", rec.tv.outer_iterations},
                            {"converged", rec.tv.converged}}},
                    {"ls_i", ls_json(rec.ls_i)},
                    {"ls_inu", ls_json(rec.ls_inu)}};
  meta["timings_s"] = {{"returns", t_returns}, {"acquire", t_acquire}, {"reconstruct", t_recon},
                       {"total", seconds_since(t_total)}};
  write_json(meta, st.path("metadata.json"));
  st.commit();

  std::cout << "acquire: n=" << n << " m=" << m << " stored=" << mv.stored_scalars()
            << " valid=" << rec.depth.valid_count() << " mse_m2=" << g17(err) << " -> "
            << st.final_dir().string() << '\n';
  return 0;
}

int cmd_raster(const RunConfig& c, const CommonArgs& a) {
  const auto t_total = Clock::now();
  const Scene scene = load_checked_scene(c);
  const std::uint64_t seed = c.seed.value_or(kDefaultSeed);
  Staging st(c.resolved_output_dir(), a.force);
  NoiseModel noise = c.noise;
  noise.seed = derive_seed(seed, {2, 0});
  const auto returns = returns_from_scene(scene, c.illumination_profile(scene.width, scene.height),
                                          c.geometry, c.chirp);
  const auto d = raster_baseline(returns, c.chirp, noise, c.raster);
  write_depth_outputs(d, c, st);
  write_text(config_to_toml(c), st.path("config.toml"));
  const double err = mse(d, scene);
  auto meta = base_metadata("raster", c, scene);
  meta["seed"] = seed;
  meta["derived_seeds"] = {{"noise", noise.seed}};
  meta["result"] = {{"valid_pixels", d.valid_count()}, {"mse_m2", err}};
  meta["timings_s"] = {{"total", seconds_since(t_total)}};
  write_json(meta, st.path("metadata.json"));
  st.commit();
  std::cout << "raster: valid=" << d.valid_count() << " mse_m2=" << g17(err) << " -> "
            << st.final_dir().string() << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& c, const CommonArgs& a, bool resume, bool quiet) {
  if (!c.seed) throw ConfigError("seed", "required for sweeps (pass --seed or set seed in the config)");
  const auto t0 = Clock::now();
  const Scene scene = load_checked_scene(c);
  require_square_pow2(scene);
  const fs::path out = c.resolved_output_dir();
  if (fs::exists(out / "cells.csv") && !resume) {
    if (!a.force)
      throw std::runtime_error("'" + out.string() + "' already holds a sweep (pass --resume or --force)");
    fs::remove_all(out);
  }
  SweepIo io;
  io.out_dir = out;
  io.resume = resume;
  io.write_maps = c.write_maps;
  if (!quiet)
    io.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "sweep: " << done << "/" << total << " acquisitions\n";
    };
  const auto spec = c.sweep_spec();
  const auto result = run_sweep(spec, scene, c.illumination_profile(scene.width, scene.height),
                                c.geometry, c.chirp, io);
  write_sweep_csvs(result, out);
  write_text(config_to_toml(c), out / "config.toml");

  auto meta = base_metadata("sweep", c, scene);
  nlohmann::json trends = nlohmann::json::array();
  for (double lw : spec.linewidths_hz)
    for (double p : spec.psnr_levels) {
      std::vector<double> mses;
      for (double r : spec.sample_ratios) mses.push_back(result.at(r, p, lw).mean_mse_m2);
      const double rho = mses.size() > 1 ? spearman(spec.sample_ratios, mses)
                                         : std::numeric_limits<double>::quiet_NaN();
      trends.push_back({{"linewidth_hz", lw}, {"psnr", detail::json_number(p)}, {"spearman_ratio_mse", detail::json_number(rho)}});
      std::cout << "linewidth " << lw << " Hz, psnr " << p << ": spearman(ratio, mse) = " << rho
                << ", mse " << mses.front() << " -> " << mses.back() << " m^2\n";
    }
  meta["trends"] = trends;
  meta["timings_s"] = {{"total", seconds_since(t0)}};
  write_json(meta, out / "metadata.json");
  std::cout << "sweep: " << result.rows.size() << " rows -> " << (out / "sweep_mse.csv").string() << '\n';
  return 0;
}

int cmd_flux(const RunConfig& c) {
  const Scene scene = load_checked_scene(c);
  const std::size_t n = scene.size();
  std::size_t lit = 0;
  for (double r : scene.reflectivity) lit += r > 0.0 ? 1 : 0;
  const std::size_t m = c.flux.projections ? c.flux.projections : c.projection_count(n);
  const std::size_t alpha = c.flux.alpha ? c.flux.alpha : lit;
  const std::size_t beta = c.flux.beta ? c.flux.beta : n;
  if (alpha == 0) throw ConfigError("flux.alpha", "scene has no lit pixels; set flux.alpha");
  if (alpha > beta) throw ConfigError("flux.alpha", "must not exceed flux.beta");
  const auto r = flux_accounting(c.flux.rate_hz, c.flux.time_s, static_cast<double>(m),
                                 static_cast<double>(alpha), static_cast<double>(beta));
  const nlohmann::json j = {{"rate_hz", c.flux.rate_hz},
                            {"time_s", c.flux.time_s},
                            {"projections", m},
                            {"alpha", alpha},
                            {"beta", beta},
                            {"array_photons_per_detector", r.array_per_detector},
                            {"compressive_photons_per_projection", r.compressive_per_projection},
                            {"ratio", r.ratio}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive FMCW LiDAR simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fmcwcs 1.0.0");

  CommonArgs common;
  auto* scene = app.add_subcommand("scene", "Write a built-in scene to a file");
  add_common(scene, common);
  std::string scene_output;
  std::optional<double> scene_depth;
  scene->add_option("-f,--file", scene_output, "Scene file to write (.json for JSON)");
  scene->add_option("--depth", scene_depth, "Depth in metres for single-plane and torus-only");

  auto* acquire = app.add_subcommand("acquire", "Acquire and reconstruct one depth map");
  add_common(acquire, common);
  std::vector<std::size_t> dump_stages;
  acquire->add_option("--dump-stages", dump_stages, "Write the five spectra of projection k");

  auto* sweep = app.add_subcommand("sweep", "Run an accuracy and uncertainty sweep");
  add_common(sweep, common);
  bool resume = false, quiet = false;
  sweep->add_flag("--resume", resume, "Continue from cells.csv in the output directory");
  sweep->add_flag("-q,--quiet", quiet, "No progress on standard error");

  auto* raster = app.add_subcommand("raster", "Raster-scan baseline depth map");
  add_common(raster, common);

  auto* flux = app.add_subcommand("flux", "Photon flux per detector, array vs compressive");
  add_common(flux, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = resolve(common);
    // Sweeps insist on an explicit seed; everything else records the default.
    if (!*sweep && !cfg.seed) cfg.seed = kDefaultSeed;
    if (*scene) return cmd_scene(cfg, common, scene_output, scene_depth);
    if (*acquire) return cmd_acquire(cfg, common, dump_stages);
    if (*sweep) return cmd_sweep(cfg, common, resume, quiet);
    if (*raster) return cmd_raster(cfg, common);
    if (*flux) return cmd_flux(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "fmcwcs: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "fmcwcs: invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "fmcwcs: error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
