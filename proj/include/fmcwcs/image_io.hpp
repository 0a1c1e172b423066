// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmcwcs/recon.hpp"

namespace fmcwcs {

/// Portable float map, grayscale, little-endian. Rows are stored bottom to
/// top as the format requires. Invalid pixels are written as NaN.
inline void write_pfm(const DepthMap& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "Pf\n" << d.width << ' ' << d.height << "\n-1.0\n";
  for (int r = d.height - 1; r >= 0; --r)
    for (int c = 0; c < d.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * d.width + c;
      float v = d.valid[i] ? static_cast<float>(d.depths[i]) : std::nanf("");
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline DepthMap read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0)
    throw std::runtime_error("'" + path + "' is not a grayscale PFM");
  auto d = DepthMap::empty(w, h);
  const bool little = scale < 0.0;
  for (int r = h - 1; r >= 0; --r)
    for (int c = 0; c < w; ++c) {
      std::uint32_t bits = 0;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
        throw std::runtime_error("'" + path + "' is truncated");
      if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
      float v;
      std::memcpy(&v, &bits, sizeof v);
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      if (std::isfinite(v)) {
        d.depths[i] = v;
        d.valid[i] = 1;
      }
    }
  return d;
}

/// 16-bit binary PGM with depth scaled so that full_scale_m maps to 65535.
/// Invalid pixels are 0.
inline void write_pgm16(const DepthMap& d, double full_scale_m, const std::string& path) {
  if (!(full_scale_m > 0.0)) throw std::invalid_argument("write_pgm16: full scale must be > 0");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "P5\n" << d.width << ' ' << d.height << "\n65535\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::uint16_t v = 0;
    if (d.valid[i]) {
      const double s = std::clamp(d.depths[i] / full_scale_m, 0.0, 1.0);
      v = static_cast<std::uint16_t>(std::lround(s * 65535.0));
    }
    const unsigned char be[2] = {static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v & 0xff)};
    out.write(reinterpret_cast<const char*>(be), 2);
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Rows of x, y, depth_m, valid.
inline void write_depth_csv(const DepthMap& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "x,y,depth_m,valid\n";
  char buf[64];
  for (int r = 0; r < d.height; ++r)
    for (int c = 0; c < d.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * d.width + c;
      std::snprintf(buf, sizeof buf, "%.17g", d.depths[i]);
      out << c << ',' << r << ',' << buf << ',' << int{d.valid[i]} << '\n';
    }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace fmcwcs
