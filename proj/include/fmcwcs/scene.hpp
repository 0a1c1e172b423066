// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmcwcs/fmcw.hpp"

namespace fmcwcs {

/// Ground-truth scene: one opaque depth per pixel (0 = empty), a Lambertian
/// albedo, and optional integer labels naming objects.
struct Scene {
  int width = 0;
  int height = 0;
  std::vector<double> depth_m;
  std::vector<double> reflectivity;
  std::vector<int> label;                    // 0 = unlabelled
  std::map<int, std::string> label_names;

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }

  double max_depth() const {
    double best = 0.0;
    for (double d : depth_m) best = std::max(best, d);
    return best;
  }

  int label_id(const std::string& name) const {
    for (const auto& [id, n] : label_names)
      if (n == name) return id;
    return -1;
  }

  bool has_label(const std::string& name) const { return label_id(name) > 0; }

  std::vector<std::size_t> pixels_with_label(const std::string& name) const {
    const int id = label_id(name);
    if (id <= 0) throw std::invalid_argument("scene: no object labelled '" + name + "'");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < label.size(); ++i)
      if (label[i] == id) out.push_back(i);
    return out;
  }

  /// Checks dimensions and value ranges. `max_range_m` bounds depth.
  void validate(double max_range_m = std::numeric_limits<double>::infinity()) const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("scene: non-positive dimensions");
    if (depth_m.size() != size() || reflectivity.size() != size())
      throw std::invalid_argument("scene: map size does not match width*height");
    if (!label.empty() && label.size() != size())
      throw std::invalid_argument("scene: label map size does not match width*height");
    for (std::size_t i = 0; i < size(); ++i) {
      const double d = depth_m[i];
      const double r = reflectivity[i];
      if (!std::isfinite(d) || d < 0.0)
        throw std::invalid_argument("scene: depth out of range at pixel " + std::to_string(i));
      if (d >= max_range_m)
        throw std::invalid_argument("scene: depth " + std::to_string(d) +
                                    " m at pixel " + std::to_string(i) +
                                    " is beyond the unambiguous range " +
                                    std::to_string(max_range_m) + " m");
      if (!std::isfinite(r) || r < 0.0 || r > 1.0)
        throw std::invalid_argument("scene: reflectivity out of [0,1] at pixel " +
                                    std::to_string(i));
      if (d == 0.0 && r != 0.0)
        throw std::invalid_argument("scene: empty pixel with nonzero reflectivity at " +
                                    std::to_string(i));
    }
  }

  bool operator==(const Scene&) const = default;
};

/// Per-pixel optical power incident on the scene (W).
struct IlluminationProfile {
  int width = 0;
  int height = 0;
  std::vector<double> power_w;

  double total() const {
    double s = 0.0;
    for (double p : power_w) s += p;
    return s;
  }

  /// Centred 2D Gaussian normalised to `total_power_w`. The width is a
  /// fraction of the frame; 0.327 gives a 119 uW peak for 1 W on 128x128.
  static IlluminationProfile gaussian(int width, int height, double total_power_w = 1.0,
                                      double sigma_fraction = 0.327) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("illumination: bad dimensions");
    if (!(total_power_w >= 0.0) || !(sigma_fraction > 0.0))
      throw std::invalid_argument("illumination: bad power or width");
    IlluminationProfile p{width, height,
                          std::vector<double>(static_cast<std::size_t>(width) * height)};
    double sum = 0.0;
    for (int y = 0; y < height; ++y) {
      const double v = (y + 0.5) / height - 0.5;
      for (int x = 0; x < width; ++x) {
        const double u = (x + 0.5) / width - 0.5;
        const double g = std::exp(-(u * u + v * v) / (2.0 * sigma_fraction * sigma_fraction));
        p.power_w[static_cast<std::size_t>(y) * width + x] = g;
        sum += g;
      }
    }
    for (double& w : p.power_w) w *= total_power_w / sum;
    return p;
  }

  static IlluminationProfile uniform(int width, int height, double total_power_w = 1.0) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    return {width, height, std::vector<double>(n, total_power_w / static_cast<double>(n))};
  }
};

struct CollectionGeometry {
  double aperture_diameter_m = 0.0508;  // 2 inch optic
  double lo_power_w = 100e-6;

  void validate() const {
    if (!(aperture_diameter_m > 0.0) || !(lo_power_w > 0.0))
      throw std::invalid_argument("collection geometry: values must be positive");
  }
  double aperture_area_m2() const {
    return std::numbers::pi * 0.25 * aperture_diameter_m * aperture_diameter_m;
  }
  double lo_amplitude() const { return field_amplitude(lo_power_w); }
};

/// Returns imaged onto the DMD plane, one per pixel, row-major.
struct PixelReturns {
  int width = 0;
  int height = 0;
  std::vector<Return> returns;
  std::vector<double> received_power_w;
  double lo_amplitude = 0.0;

  std::size_t size() const { return returns.size(); }
};

/// Lambertian return model. The received power of pixel l at depth d is
/// illum * albedo * (aperture area) / (2 pi d^2), capped at the reflected
/// power; the return carries the matching field amplitude and delay 2d/c.
inline PixelReturns returns_from_scene(const Scene& scene, const IlluminationProfile& illum,
                                       const CollectionGeometry& geom, const ChirpConfig& cfg) {
  cfg.validate();
  geom.validate();
  scene.validate(cfg.max_range_m());
  if (illum.width != scene.width || illum.height != scene.height ||
      illum.power_w.size() != scene.size())
    throw std::invalid_argument("returns_from_scene: illumination size does not match scene");

  PixelReturns out{scene.width, scene.height, std::vector<Return>(scene.size()),
                   std::vector<double>(scene.size(), 0.0), geom.lo_amplitude()};
  const double area = geom.aperture_area_m2();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const double d = scene.depth_m[i];
    if (d <= 0.0 || scene.reflectivity[i] <= 0.0) continue;
    const double capture = std::min(1.0, area / (2.0 * std::numbers::pi * d * d));
    const double power = illum.power_w[i] * scene.reflectivity[i] * capture;
    out.received_power_w[i] = power;
    out.returns[i] = Return{field_amplitude(power), round_trip_delay(d)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in scenes

namespace detail {

inline Scene blank_scene(int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("scene: invalid dimensions");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  return Scene{width, height, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
               std::vector<int>(n, 0), {}};
}

// Paints an object wherever `inside(u, v)` holds at the pixel centre, keeping
// the nearer surface where objects overlap.
template <class Inside>
void paint(Scene& s, int id, const std::string& name, double depth, double albedo,
           Inside inside) {
  s.label_names[id] = name;
  for (int y = 0; y < s.height; ++y) {
    const double v = (y + 0.5) / s.height;
    for (int x = 0; x < s.width; ++x) {
      const double u = (x + 0.5) / s.width;
      if (!inside(u, v)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * s.width + x;
      if (s.depth_m[i] != 0.0 && s.depth_m[i] <= depth) continue;
      s.depth_m[i] = depth;
      s.reflectivity[i] = albedo;
      s.label[i] = id;
    }
  }
}

inline bool in_triangle(double u, double v, double ax, double ay, double bx, double by,
                        double cx, double cy) {
  auto edge = [](double px, double py, double qx, double qy, double rx, double ry) {
    return (qx - px) * (ry - py) - (qy - py) * (rx - px);
  };
  const double e0 = edge(ax, ay, bx, by, u, v);
  const double e1 = edge(bx, by, cx, cy, u, v);
  const double e2 = edge(cx, cy, ax, ay, u, v);
  return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

}  // namespace detail

/// Five flat Lambertian objects at distinct depths; the farthest sits near
/// 22 m and one of them is a toroid. Geometry is resolution independent.
inline Scene paper_demo_scene(int width = 128, int height = 128) {
  Scene s = detail::blank_scene(width, height);
  detail::paint(s, 1, "box", 7.5, 0.7, [](double u, double v) {
    return u >= 0.08 && u <= 0.34 && v >= 0.56 && v <= 0.9;
  });
  detail::paint(s, 2, "disk", 11.0, 0.8, [](double u, double v) {
    return std::hypot(u - 0.75, v - 0.72) <= 0.15;
  });
  detail::paint(s, 3, "toroid", 14.0, 0.9, [](double u, double v) {
    const double r = std::hypot(u - 0.5, v - 0.42);
    return r >= 0.1 && r <= 0.2;
  });
  detail::paint(s, 4, "triangle", 18.0, 0.6, [](double u, double v) {
    return detail::in_triangle(u, v, 0.08, 0.36, 0.34, 0.36, 0.21, 0.08);
  });
  detail::paint(s, 5, "panel", 22.0, 0.35, [](double u, double v) {
    return u >= 0.72 && u <= 0.94 && v >= 0.08 && v <= 0.3;
  });
  return s;
}

inline Scene single_plane_scene(int width, int height, double depth_m,
                                double reflectivity = 0.5) {
  Scene s = detail::blank_scene(width, height);
  detail::paint(s, 1, "plane", depth_m, reflectivity, [](double, double) { return true; });
  return s;
}

inline Scene two_plane_scene(int width, int height, double near_m, double far_m,
                             double reflectivity = 0.5) {
  Scene s = detail::blank_scene(width, height);
  detail::paint(s, 1, "near", near_m, reflectivity, [](double u, double) { return u < 0.5; });
  detail::paint(s, 2, "far", far_m, reflectivity, [](double u, double) { return u >= 0.5; });
  return s;
}

inline Scene torus_scene(int width, int height, double depth_m = 14.0,
                         double reflectivity = 0.9) {
  Scene s = detail::blank_scene(width, height);
  detail::paint(s, 1, "toroid", depth_m, reflectivity, [](double u, double v) {
    const double r = std::hypot(u - 0.5, v - 0.5);
    return r >= 0.15 && r <= 0.3;
  });
  return s;
}

/// Generator lookup used by the CLI: "paper-demo", "single-plane",
/// "two-plane", "torus-only".
inline Scene builtin_scene(const std::string& name, int width, int height) {
  if (name == "paper-demo") return paper_demo_scene(width, height);
  if (name == "single-plane") return single_plane_scene(width, height, 10.0);
  if (name == "two-plane") return two_plane_scene(width, height, 8.0, 16.0);
  if (name == "torus-only") return torus_scene(width, height);
  throw std::invalid_argument("unknown built-in scene '" + name + "'");
}

// ---------------------------------------------------------------------------
// Scene files
//
// Text format (whitespace separated, '#' starts a comment):
//
//   fmcw-scene 1
//   width <W>
//   height <H>
//   depth_scale <s>            # stored depth * s = metres
//   labels <id>:<name> ...     # optional
//   depth
//   <H rows of W numbers>
//   reflectivity
//   <H rows of W numbers>
//   label                      # optional
//   <H rows of W integers>
//
// JSON format: {"width", "height", "depth_scale", "depth": [...],
// "reflectivity": [...], "label": [...], "labels": {"<id>": "<name>"}} with
// row-major flat arrays.

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::vector<std::string> scene_tokens(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  return tokens;
}

inline double parse_number(const std::string& tok, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("scene file: bad number '" + tok + "' in " + what);
  }
  if (used != tok.size())
    throw std::invalid_argument("scene file: bad number '" + tok + "' in " + what);
  return v;
}

}  // namespace detail

inline Scene parse_scene_text(std::istream& in) {
  const auto tokens = detail::scene_tokens(in);
  std::size_t pos = 0;
  auto next = [&](const std::string& what) -> const std::string& {
    if (pos >= tokens.size())
      throw std::invalid_argument("scene file: unexpected end of file reading " + what);
    return tokens[pos++];
  };
  auto expect = [&](const std::string& keyword) {
    const std::string& tok = next(keyword);
    if (tok != keyword)
      throw std::invalid_argument("scene file: expected '" + keyword + "', got '" + tok + "'");
  };

  expect("fmcw-scene");
  if (next("version") != "1") throw std::invalid_argument("scene file: unsupported version");
  Scene s;
  double scale = 1.0;
  bool have_w = false;
  bool have_h = false;
  while (pos < tokens.size() && tokens[pos] != "depth") {
    const std::string key = next("header");
    if (key == "width") {
      s.width = static_cast<int>(detail::parse_number(next("width"), "width"));
      have_w = true;
    } else if (key == "height") {
      s.height = static_cast<int>(detail::parse_number(next("height"), "height"));
      have_h = true;
    } else if (key == "depth_scale") {
      scale = detail::parse_number(next("depth_scale"), "depth_scale");
    } else if (key == "labels") {
      while (pos < tokens.size() && tokens[pos].find(':') != std::string::npos) {
        const std::string& entry = tokens[pos++];
        const auto colon = entry.find(':');
        const int id = static_cast<int>(detail::parse_number(entry.substr(0, colon), "labels"));
        if (id <= 0) throw std::invalid_argument("scene file: label ids must be positive");
        s.label_names[id] = entry.substr(colon + 1);
      }
    } else {
      throw std::invalid_argument("scene file: unknown header key '" + key + "'");
    }
  }
  if (!have_w || !have_h || s.width <= 0 || s.height <= 0)
    throw std::invalid_argument("scene file: missing or invalid width/height");
  if (!(scale > 0.0)) throw std::invalid_argument("scene file: depth_scale must be positive");

  const std::size_t n = s.size();
  auto read_block = [&](const std::string& name) {
    expect(name);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = detail::parse_number(next(name), name);
    return values;
  };
  s.depth_m = read_block("depth");
  for (double& d : s.depth_m) d *= scale;
  s.reflectivity = read_block("reflectivity");
  if (pos < tokens.size()) {
    const auto labels = read_block("label");
    s.label.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.label[i] = static_cast<int>(labels[i]);
  } else {
    s.label.assign(n, 0);
  }
  if (pos != tokens.size()) throw std::invalid_argument("scene file: trailing data");
  s.validate();
  return s;
}

inline Scene parse_scene_json(const nlohmann::json& doc) {
  Scene s;
  try {
    s.width = doc.at("width").get<int>();
    s.height = doc.at("height").get<int>();
    const double scale = doc.value("depth_scale", 1.0);
    if (!(scale > 0.0)) throw std::invalid_argument("scene json: depth_scale must be positive");
    s.depth_m = doc.at("depth").get<std::vector<double>>();
    for (double& d : s.depth_m) d *= scale;
    s.reflectivity = doc.at("reflectivity").get<std::vector<double>>();
    if (doc.contains("label")) s.label = doc.at("label").get<std::vector<int>>();
    if (doc.contains("labels"))
      for (const auto& [key, value] : doc.at("labels").items())
        s.label_names[std::stoi(key)] = value.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scene json: ") + e.what());
  }
  if (s.label.empty() && s.width > 0 && s.height > 0) s.label.assign(s.size(), 0);
  s.validate();
  return s;
}

/// Loads a scene file; ".json" selects the JSON format, anything else the
/// text format.
inline Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file '" + path.string() + "'");
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("scene json: " + std::string(e.what()));
    }
    return parse_scene_json(doc);
  }
  return parse_scene_text(in);
}

inline void write_scene_text(const Scene& s, std::ostream& out) {
  out << "fmcw-scene 1\nwidth " << s.width << "\nheight " << s.height << "\ndepth_scale 1\n";
  if (!s.label_names.empty()) {
    out << "labels";
    for (const auto& [id, name] : s.label_names) out << ' ' << id << ':' << name;
    out << '\n';
  }
  auto block = [&](const char* name, auto&& value_at) {
    out << name << '\n';
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        if (x) out << ' ';
        out << value_at(static_cast<std::size_t>(y) * s.width + x);
      }
      out << '\n';
    }
  };
  block("depth", [&](std::size_t i) { return detail::format_double(s.depth_m[i]); });
  block("reflectivity", [&](std::size_t i) { return detail::format_double(s.reflectivity[i]); });
  if (!s.label.empty()) block("label", [&](std::size_t i) { return s.label[i]; });
}

inline nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json doc;
  doc["width"] = s.width;
  doc["height"] = s.height;
  doc["depth_scale"] = 1.0;
  doc["depth"] = s.depth_m;
  doc["reflectivity"] = s.reflectivity;
  doc["label"] = s.label;
  nlohmann::json names = nlohmann::json::object();
  for (const auto& [id, name] : s.label_names) names[std::to_string(id)] = name;
  doc["labels"] = names;
  return doc;
}

inline void save_scene(const Scene& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file '" + path.string() + "'");
  if (path.extension() == ".json")
    out << std::setprecision(17) << scene_to_json(s).dump(1) << '\n';
  else
    write_scene_text(s, out);
  if (!out) throw std::runtime_error("error writing scene file '" + path.string() + "'");
}

}  // namespace fmcwcs
