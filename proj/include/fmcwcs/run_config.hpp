// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <tomlplusplus/toml.hpp>

#include "fmcwcs/evalbench.hpp"
#include "fmcwcs/fmcw.hpp"
#include "fmcwcs/recon.hpp"
#include "fmcwcs/scene.hpp"
#include "fmcwcs/spectral.hpp"

namespace fmcwcs {

/// Thrown for any invalid configuration value. The message starts with the
/// dotted key at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct FluxInputs {
  double rate_hz = 1e9;
  double time_s = 1.0;
  std::size_t projections = 0;  // 0 = the acquisition's m
  std::size_t alpha = 0;        // 0 = lit pixels of the scene
  std::size_t beta = 0;         // 0 = scene pixel count
};

struct RunConfig {
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  std::string output_dir;  // empty = $FMCWCS_OUT_DIR, then ./fmcwcs-out
  unsigned workers = 1;

  std::string scene = "paper-demo";  // built-in name or file path
  int width = 32;
  int height = 32;
  std::string illumination = "gaussian";
  double illumination_sigma = 0.327;
  double source_power_w = 1.0;
  CollectionGeometry geometry;

  ChirpConfig chirp;
  NoiseModel noise;
  double sample_ratio = 0.25;
  std::size_t projections = 0;  // 0 = from sample_ratio
  FrequencyWeighting weighting = FrequencyWeighting::linear;
  SpectralOptions spectral;
  ReconOptions recon;

  SweepSpec sweep;
  bool write_maps = false;
  RasterOptions raster;
  FluxInputs flux;
  double pgm_full_scale_m = 0.0;  // 0 = unambiguous range

  /// Number of projections for an n-pixel scene.
  std::size_t projection_count(std::size_t n) const {
    if (projections) return projections;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sample_ratio * static_cast<double>(n))));
  }

  std::filesystem::path resolved_output_dir() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv("FMCWCS_OUT_DIR"); env && *env) return env;
    return "fmcwcs-out";
  }

  IlluminationProfile illumination_profile(int w, int h) const {
    if (illumination == "uniform") return IlluminationProfile::uniform(w, h, source_power_w);
    return IlluminationProfile::gaussian(w, h, source_power_w, illumination_sigma);
  }

  bool scene_is_builtin() const {
    return scene == "paper-demo" || scene == "single-plane" || scene == "two-plane" ||
           scene == "torus-only";
  }

  Scene load_scene_source() const {
    if (scene_is_builtin()) return builtin_scene(scene, width, height);
    if (!std::filesystem::exists(scene)) throw ConfigError("scene.source", "no such file '" + scene + "'");
    return fmcwcs::load_scene(scene);
  }

  SweepSpec sweep_spec() const {
    SweepSpec s = sweep;
    s.seed = seed.value_or(0);
    s.recon = recon;
    s.spectral = spectral;
    s.raster_options = raster;
    s.workers = workers;
    return s;
  }

  void validate() const;
};

namespace detail {

inline std::string node_kind(const toml::node& n) {
  std::ostringstream os;
  os << n.type();
  return os.str();
}

inline double as_double(const std::string& key, const toml::node& n) {
  if (auto v = n.as_floating_point()) return v->get();
  if (auto v = n.as_integer()) return static_cast<double>(v->get());
  throw ConfigError(key, "expected a number, got " + node_kind(n));
}

inline std::int64_t as_int(const std::string& key, const toml::node& n) {
  if (auto v = n.as_integer()) return v->get();
  throw ConfigError(key, "expected an integer, got " + node_kind(n));
}

inline std::uint64_t as_count(const std::string& key, const toml::node& n) {
  const auto v = as_int(key, n);
  if (v < 0) throw ConfigError(key, "must be >= 0");
  return static_cast<std::uint64_t>(v);
}

inline bool as_bool(const std::string& key, const toml::node& n) {
  if (auto v = n.as_boolean()) return v->get();
  throw ConfigError(key, "expected true or false, got " + node_kind(n));
}

inline std::string as_string(const std::string& key, const toml::node& n) {
  if (auto v = n.as_string()) return v->get();
  throw ConfigError(key, "expected a string, got " + node_kind(n));
}

inline std::vector<double> as_doubles(const std::string& key, const toml::node& n) {
  const auto* arr = n.as_array();
  if (!arr) throw ConfigError(key, "expected an array of numbers, got " + node_kind(n));
  std::vector<double> out;
  for (std::size_t i = 0; i < arr->size(); ++i)
    out.push_back(as_double(key + "[" + std::to_string(i) + "]", *arr->get(i)));
  return out;
}

inline std::string choose(const std::string& key, const toml::node& n,
                          std::initializer_list<const char*> allowed) {
  const auto s = as_string(key, n);
  std::string list;
  for (const char* a : allowed) {
    if (s == a) return s;
    list += list.empty() ? a : std::string(", ") + a;
  }
  throw ConfigError(key, "'" + s + "' is not one of " + list);
}

/// JSON for doubles that may be non-finite ("inf" keeps psnr readable).
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline nlohmann::json json_numbers(const std::vector<double>& v) {
  auto a = nlohmann::json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

struct KeyBinding {
  std::function<void(RunConfig&, const toml::node&)> set;
  std::function<nlohmann::json(const RunConfig&)> get;
};

inline std::map<std::string, KeyBinding> build_key_table() {
  std::map<std::string, KeyBinding> t;
  using J = nlohmann::json;
  auto num = [&](const std::string& key, auto ref) {
    t[key] = {[key, ref](RunConfig& c, const toml::node& n) { ref(c) = as_double(key, n); },
              [ref](const RunConfig& c) { return json_number(ref(const_cast<RunConfig&>(c))); }};
  };
  auto count = [&](const std::string& key, auto ref) {
    t[key] = {[key, ref](RunConfig& c, const toml::node& n) {
                using T = std::remove_reference_t<decltype(ref(c))>;
                const auto v = as_count(key, n);
                if (v > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))
                  throw ConfigError(key, "value too large");
                ref(c) = static_cast<T>(v);
              },
              [ref](const RunConfig& c) { return J(ref(const_cast<RunConfig&>(c))); }};
  };
  auto flag = [&](const std::string& key, auto ref) {
    t[key] = {[key, ref](RunConfig& c, const toml::node& n) { ref(c) = as_bool(key, n); },
              [ref](const RunConfig& c) { return J(static_cast<bool>(ref(const_cast<RunConfig&>(c)))); }};
  };
  auto text = [&](const std::string& key, auto ref) {
    t[key] = {[key, ref](RunConfig& c, const toml::node& n) { ref(c) = as_string(key, n); },
              [ref](const RunConfig& c) { return J(ref(const_cast<RunConfig&>(c))); }};
  };
  auto list = [&](const std::string& key, auto ref) {
    t[key] = {[key, ref](RunConfig& c, const toml::node& n) { ref(c) = as_doubles(key, n); },
              [ref](const RunConfig& c) { return json_numbers(ref(const_cast<RunConfig&>(c))); }};
  };
  auto window = [&](const std::string& key, auto ref) {
    t[key] = {[key, ref](RunConfig& c, const toml::node& n) {
                ref(c) = choose(key, n, {"hann", "rectangular"}) == "hann" ? Window::hann
                                                                           : Window::rectangular;
              },
              [ref](const RunConfig& c) {
                return J(ref(const_cast<RunConfig&>(c)) == Window::hann ? "hann" : "rectangular");
              }};
  };

  t["preset"] = {[](RunConfig& c, const toml::node& n) {
                   c.preset = choose("preset", n, {"desk", "paper"});
                 },
                 [](const RunConfig& c) { return J(c.preset); }};
  t["seed"] = {[](RunConfig& c, const toml::node& n) { c.seed = as_count("seed", n); },
               [](const RunConfig& c) { return c.seed ? J(*c.seed) : J(nullptr); }};
  text("output_dir", [](RunConfig& c) -> std::string& { return c.output_dir; });
  count("workers", [](RunConfig& c) -> unsigned& { return c.workers; });

  text("scene.source", [](RunConfig& c) -> std::string& { return c.scene; });
  count("scene.width", [](RunConfig& c) -> int& { return c.width; });
  count("scene.height", [](RunConfig& c) -> int& { return c.height; });
  t["scene.illumination"] = {[](RunConfig& c, const toml::node& n) {
                               c.illumination = choose("scene.illumination", n, {"gaussian", "uniform"});
                             },
                             [](const RunConfig& c) { return J(c.illumination); }};
  num("scene.illumination_sigma", [](RunConfig& c) -> double& { return c.illumination_sigma; });
  num("scene.source_power_w", [](RunConfig& c) -> double& { return c.source_power_w; });
  num("scene.aperture_diameter_m", [](RunConfig& c) -> double& { return c.geometry.aperture_diameter_m; });
  num("scene.lo_power_w", [](RunConfig& c) -> double& { return c.geometry.lo_power_w; });

  num("chirp.start_frequency_hz", [](RunConfig& c) -> double& { return c.chirp.start_frequency_hz; });
  num("chirp.bandwidth_hz", [](RunConfig& c) -> double& { return c.chirp.bandwidth_hz; });
  num("chirp.period_s", [](RunConfig& c) -> double& { return c.chirp.period_s; });
  num("chirp.sample_rate_hz", [](RunConfig& c) -> double& { return c.chirp.sample_rate_hz; });
  t["chirp.waveform"] = {[](RunConfig& c, const toml::node& n) {
                           c.chirp.waveform = waveform_from_string(
                               choose("chirp.waveform", n, {"sawtooth", "triangle"}));
                         },
                         [](const RunConfig& c) { return J(to_string(c.chirp.waveform)); }};
  flag("chirp.model_sweep_reset", [](RunConfig& c) -> bool& { return c.chirp.model_sweep_reset; });

  num("noise.psnr", [](RunConfig& c) -> double& { return c.noise.psnr; });
  num("noise.linewidth_hz", [](RunConfig& c) -> double& { return c.noise.beat_linewidth_fwhm_hz; });

  num("acquisition.sample_ratio", [](RunConfig& c) -> double& { return c.sample_ratio; });
  count("acquisition.projections", [](RunConfig& c) -> std::size_t& { return c.projections; });
  t["acquisition.weighting"] = {
      [](RunConfig& c, const toml::node& n) {
        c.weighting = choose("acquisition.weighting", n, {"linear", "sqrt"}) == "linear"
                          ? FrequencyWeighting::linear
                          : FrequencyWeighting::sqrt;
      },
      [](const RunConfig& c) { return J(c.weighting == FrequencyWeighting::linear ? "linear" : "sqrt"); }};
  window("acquisition.window", [](RunConfig& c) -> Window& { return c.spectral.window; });
  num("acquisition.wiener_nsr", [](RunConfig& c) -> double& { return c.spectral.wiener_nsr; });
  flag("acquisition.denoise", [](RunConfig& c) -> bool& { return c.spectral.denoise; });
  flag("acquisition.deconvolve", [](RunConfig& c) -> bool& { return c.spectral.deconvolve; });

  num("tv.alpha", [](RunConfig& c) -> double& { return c.recon.tv.alpha; });
  count("tv.max_outer_iters", [](RunConfig& c) -> int& { return c.recon.tv.max_outer_iters; });
  count("tv.max_inner_iters", [](RunConfig& c) -> int& { return c.recon.tv.max_inner_iters; });
  num("tv.inner_tolerance", [](RunConfig& c) -> double& { return c.recon.tv.inner_tolerance; });
  num("tv.outer_tolerance", [](RunConfig& c) -> double& { return c.recon.tv.outer_tolerance; });
  num("tv.rho_scale", [](RunConfig& c) -> double& { return c.recon.tv.rho_scale; });
  num("tv.beta_scale", [](RunConfig& c) -> double& { return c.recon.tv.beta_scale; });
  num("tv.penalty_growth", [](RunConfig& c) -> double& { return c.recon.tv.penalty_growth; });

  num("recon.mask_threshold", [](RunConfig& c) -> double& { return c.recon.mask_threshold; });
  num("recon.support_fraction", [](RunConfig& c) -> double& { return c.recon.support_fraction; });
  num("recon.depth_floor", [](RunConfig& c) -> double& { return c.recon.depth_floor; });
  t["recon.ls_solver"] = {[](RunConfig& c, const toml::node& n) {
                            c.recon.ls.solver = choose("recon.ls_solver", n, {"cg", "lbfgs"}) == "cg"
                                                    ? LsSolver::conjugate_gradient
                                                    : LsSolver::lbfgs;
                          },
                          [](const RunConfig& c) {
                            return J(c.recon.ls.solver == LsSolver::conjugate_gradient ? "cg" : "lbfgs");
                          }};
  num("recon.ls_tolerance", [](RunConfig& c) -> double& { return c.recon.ls.tolerance; });
  count("recon.ls_max_iters", [](RunConfig& c) -> std::size_t& { return c.recon.ls.max_iterations; });
  count("recon.lbfgs_memory", [](RunConfig& c) -> std::size_t& { return c.recon.ls.lbfgs_memory; });
  flag("recon.check_rank", [](RunConfig& c) -> bool& { return c.recon.ls.check_rank; });
  flag("recon.parallel_solves", [](RunConfig& c) -> bool& { return c.recon.parallel_solves; });

  list("sweep.sample_ratios", [](RunConfig& c) -> std::vector<double>& { return c.sweep.sample_ratios; });
  list("sweep.psnr_levels", [](RunConfig& c) -> std::vector<double>& { return c.sweep.psnr_levels; });
  list("sweep.linewidths_hz", [](RunConfig& c) -> std::vector<double>& { return c.sweep.linewidths_hz; });
  count("sweep.repetitions", [](RunConfig& c) -> int& { return c.sweep.repetitions; });
  text("sweep.uncertainty_label", [](RunConfig& c) -> std::string& { return c.sweep.uncertainty_label; });
  flag("sweep.raster", [](RunConfig& c) -> bool& { return c.sweep.raster; });
  flag("sweep.write_maps", [](RunConfig& c) -> bool& { return c.write_maps; });

  window("raster.window", [](RunConfig& c) -> Window& { return c.raster.window; });
  flag("raster.denoise", [](RunConfig& c) -> bool& { return c.raster.denoise; });
  flag("raster.deconvolve", [](RunConfig& c) -> bool& { return c.raster.deconvolve; });
  num("raster.wiener_nsr", [](RunConfig& c) -> double& { return c.raster.wiener_nsr; });
  flag("raster.matched_filter", [](RunConfig& c) -> bool& { return c.raster.matched_filter; });

  num("flux.rate_hz", [](RunConfig& c) -> double& { return c.flux.rate_hz; });
  num("flux.time_s", [](RunConfig& c) -> double& { return c.flux.time_s; });
  count("flux.projections", [](RunConfig& c) -> std::size_t& { return c.flux.projections; });
  count("flux.alpha", [](RunConfig& c) -> std::size_t& { return c.flux.alpha; });
  count("flux.beta", [](RunConfig& c) -> std::size_t& { return c.flux.beta; });

  num("output.pgm_full_scale_m", [](RunConfig& c) -> double& { return c.pgm_full_scale_m; });
  return t;
}

inline const std::map<std::string, KeyBinding>& key_table() {
  static const auto table = build_key_table();
  return table;
}

inline void apply_table(RunConfig& c, const toml::table& tbl, const std::string& prefix) {
  for (const auto& [k, node] : tbl) {
    const std::string key = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
    if (const auto* sub = node.as_table()) {
      apply_table(c, *sub, key);
      continue;
    }
    if (key == "preset") continue;  // applied first
    const auto& keys = key_table();
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(key, "unknown key");
    it->second.set(c, node);
  }
}

}  // namespace detail

/// Desk: 32x32 and a three-PSNR sweep. Paper: 128x128 and the full grid.
/// Both keep the reference chirp.
inline void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "desk") {
    c.width = c.height = 32;
    c.sweep.sample_ratios.clear();
    for (int k = 1; k <= 20; ++k) c.sweep.sample_ratios.push_back(k / 20.0);
    c.sweep.psnr_levels = {2.5, 5.0, std::numeric_limits<double>::infinity()};
    c.sweep.linewidths_hz = {2e6};
  } else if (name == "paper") {
    c.width = c.height = 128;
    const SweepSpec defaults;
    c.sweep.sample_ratios = defaults.sample_ratios;
    c.sweep.psnr_levels = defaults.psnr_levels;
    c.sweep.linewidths_hz = defaults.linewidths_hz;
  } else {
    throw ConfigError("preset", "'" + name + "' is not one of desk, paper");
  }
  c.preset = name;
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, b] : detail::key_table()) out.push_back(k);
  return out;
}

/// Sets one dotted key from a TOML value literal. Bare words that are not
/// valid TOML are taken as strings, so `scene.source=two-plane` works.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& literal) {
  const auto& keys = detail::key_table();
  const auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError(key, "unknown key");
  toml::table doc;
  try {
    doc = toml::parse("v = " + literal);
  } catch (const toml::parse_error&) {
    doc = toml::table{{"v", literal}};
  }
  if (key == "preset") {
    apply_preset(c, detail::as_string(key, *doc.get("v")));
    return;
  }
  it->second.set(c, *doc.get("v"));
}

/// Parses `key=value`.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(assignment, "override must look like key=value");
  set_config_value(c, assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Defaults, then the preset named in the document (or `preset_override`),
/// then every other key. Unknown keys are errors.
inline RunConfig config_from_toml(const toml::table& doc, const std::string& preset_override = {}) {
  RunConfig c;
  std::string preset = "desk";
  if (const auto* p = doc.get("preset")) preset = detail::choose("preset", *p, {"desk", "paper"});
  if (!preset_override.empty()) preset = preset_override;
  apply_preset(c, preset);
  detail::apply_table(c, doc, "");
  return c;
}

inline RunConfig load_config_file(const std::filesystem::path& path,
                                  const std::string& preset_override = {}) {
  if (!std::filesystem::exists(path)) throw ConfigError("config", "no such file '" + path.string() + "'");
  toml::table doc;
  try {
    doc = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << path.string() << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError("config", os.str());
  }
  return config_from_toml(doc, preset_override);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, b] : detail::key_table()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) out[key] = b.get(c);
    else out[key.substr(0, dot)][key.substr(dot + 1)] = b.get(c);
  }
  return out;
}

/// A TOML document that reloads to the same configuration.
inline std::string config_to_toml(const RunConfig& c) {
  auto value = [](const nlohmann::json& v) -> std::string {
    auto scalar = [](const nlohmann::json& s) -> std::string {
      if (s.is_string()) {
        const auto str = s.get<std::string>();
        if (str == "inf" || str == "-inf" || str == "nan") return str;
        return s.dump();
      }
      if (s.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", s.get<double>());
        std::string out = buf;
        if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
        return out;
      }
      return s.dump();
    };
    if (!v.is_array()) return scalar(v);
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + scalar(v[i]);
    return out + "]";
  };
  const auto j = config_to_json(c);
  std::ostringstream os;
  os << "preset = " << value(j["preset"]) << '\n';
  for (const auto& [k, v] : j.items())
    if (!v.is_object() && k != "preset" && !v.is_null()) os << k << " = " << value(v) << '\n';
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) continue;
    os << '\n' << '[' << section << "]\n";
    for (const auto& [k, v] : body.items()) os << k << " = " << value(v) << '\n';
  }
  return os.str();
}

inline void RunConfig::validate() const {
  auto positive = [](const std::string& key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be a positive finite number");
  };
  auto nonneg = [](const std::string& key, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be finite and >= 0");
  };
  auto unit = [](const std::string& key, double v) {
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError(key, "must lie in (0, 1]");
  };
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
  if (scene.empty()) throw ConfigError("scene.source", "must not be empty");
  if (width < 1) throw ConfigError("scene.width", "must be >= 1");
  if (height < 1) throw ConfigError("scene.height", "must be >= 1");
  positive("scene.illumination_sigma", illumination_sigma);
  nonneg("scene.source_power_w", source_power_w);
  positive("scene.aperture_diameter_m", geometry.aperture_diameter_m);
  positive("scene.lo_power_w", geometry.lo_power_w);

  nonneg("chirp.start_frequency_hz", chirp.start_frequency_hz);
  positive("chirp.bandwidth_hz", chirp.bandwidth_hz);
  positive("chirp.period_s", chirp.period_s);
  positive("chirp.sample_rate_hz", chirp.sample_rate_hz);
  if (chirp.samples_per_sweep() < 2)
    throw ConfigError("chirp.sample_rate_hz", "fewer than 2 samples per sweep");

  if (!(noise.psnr > 0.0)) throw ConfigError("noise.psnr", "must be > 0 (inf for noiseless)");
  nonneg("noise.linewidth_hz", noise.beat_linewidth_fwhm_hz);

  unit("acquisition.sample_ratio", sample_ratio);
  nonneg("acquisition.wiener_nsr", spectral.wiener_nsr);

  nonneg("tv.alpha", recon.tv.alpha);
  if (recon.tv.max_outer_iters < 1) throw ConfigError("tv.max_outer_iters", "must be >= 1");
  if (recon.tv.max_inner_iters < 1) throw ConfigError("tv.max_inner_iters", "must be >= 1");
  positive("tv.inner_tolerance", recon.tv.inner_tolerance);
  positive("tv.outer_tolerance", recon.tv.outer_tolerance);
  positive("tv.rho_scale", recon.tv.rho_scale);
  positive("tv.beta_scale", recon.tv.beta_scale);
  if (!(recon.tv.penalty_growth >= 1.0) || !std::isfinite(recon.tv.penalty_growth))
    throw ConfigError("tv.penalty_growth", "must be >= 1");

  if (!(recon.mask_threshold > 0.0 && recon.mask_threshold < 1.0))
    throw ConfigError("recon.mask_threshold", "must lie in (0, 1)");
  unit("recon.support_fraction", recon.support_fraction);
  if (!(recon.depth_floor >= 0.0 && recon.depth_floor < 1.0))
    throw ConfigError("recon.depth_floor", "must lie in [0, 1)");
  positive("recon.ls_tolerance", recon.ls.tolerance);
  if (recon.ls.lbfgs_memory < 1) throw ConfigError("recon.lbfgs_memory", "must be >= 1");

  if (sweep.sample_ratios.empty()) throw ConfigError("sweep.sample_ratios", "must not be empty");
  for (std::size_t i = 0; i < sweep.sample_ratios.size(); ++i) {
    unit("sweep.sample_ratios", sweep.sample_ratios[i]);
    if (i && !(sweep.sample_ratios[i] > sweep.sample_ratios[i - 1]))
      throw ConfigError("sweep.sample_ratios", "must be strictly ascending");
  }
  if (sweep.psnr_levels.empty()) throw ConfigError("sweep.psnr_levels", "must not be empty");
  for (double p : sweep.psnr_levels)
    if (!(p > 0.0)) throw ConfigError("sweep.psnr_levels", "entries must be > 0 (inf for noiseless)");
  if (sweep.linewidths_hz.empty()) throw ConfigError("sweep.linewidths_hz", "must not be empty");
  for (double l : sweep.linewidths_hz) nonneg("sweep.linewidths_hz", l);
  if (sweep.repetitions < 1) throw ConfigError("sweep.repetitions", "must be >= 1");
  if (sweep.uncertainty_label.empty()) throw ConfigError("sweep.uncertainty_label", "must not be empty");

  nonneg("raster.wiener_nsr", raster.wiener_nsr);
  positive("flux.rate_hz", flux.rate_hz);
  positive("flux.time_s", flux.time_s);
  nonneg("output.pgm_full_scale_m", pgm_full_scale_m);
}

}  // namespace fmcwcs
