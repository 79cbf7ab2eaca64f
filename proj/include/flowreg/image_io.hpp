#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flowreg/errors.hpp"
#include "flowreg/field.hpp"
#include "flowreg/spectral.hpp"

namespace flowreg {

/// Raster loaded from a portable graymap, intensities scaled to [0,1] by the
/// format's maxval. Row r maps to grid axis 0, column c to axis 1.
struct RasterImage {
  int width = 0, height = 0;
  std::vector<double> pix;  // row-major [r*width + c]

  double at(int r, int c) const { return pix[static_cast<std::size_t>(r) * width + c]; }
};

namespace detail {

inline int pgm_next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return 1;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok.empty() ? 0 : 1;
}

}  // namespace detail

/// Read an 8- or 16-bit portable graymap (P2 ascii or P5 raw, 16-bit samples
/// big-endian per the format).
inline RasterImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_pgm: cannot open " + path);
  std::string tok;
  if (!detail::pgm_next_token(in, tok)) throw FormatError("read_pgm: empty file " + path);
  const bool ascii = tok == "P2";
  if (!ascii && tok != "P5") throw FormatError("read_pgm: not a P2/P5 graymap: " + path);

  auto next_int = [&](const char* what) {
    if (!detail::pgm_next_token(in, tok)) throw FormatError(std::string("read_pgm: missing ") + what);
    return std::stoi(tok);
  };
  RasterImage img;
  img.width = next_int("width");
  img.height = next_int("height");
  const int maxval = next_int("maxval");
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535)
    throw FormatError("read_pgm: bad header in " + path);

  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  img.pix.resize(count);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      if (!detail::pgm_next_token(in, tok)) throw FormatError("read_pgm: truncated data");
      img.pix[i] = std::stod(tok) / maxval;
    }
  } else {
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
      throw FormatError("read_pgm: truncated data in " + path);
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned val = bytes == 1 ? raw[i] : (raw[2 * i] << 8 | raw[2 * i + 1]);
      img.pix[i] = static_cast<double>(val) / maxval;
    }
  }
  return img;
}

/// Write an 8-bit binary graymap; values are mapped linearly from
/// [lo,hi] to 0..255 and clipped outside.
inline void write_pgm(const std::string& path, const ScalarField& f, double lo, double hi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_pgm: cannot open " + path);
  out << "P5\n" << f.grid.n[1] << " " << f.grid.n[0] << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<unsigned char> raw(f.v.size());
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    const double t = std::clamp((f.v[i] - lo) / span, 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(t * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write_pgm: write failed for " + path);
}

namespace detail {

inline constexpr char kSidecarMagic[8] = {'F', 'R', 'E', 'G', 'F', '6', '4', '\0'};

inline void put_u32_le(std::ostream& out, std::uint32_t x) {
  const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                              static_cast<unsigned char>(x >> 16),
                              static_cast<unsigned char>(x >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace detail

/// Lossless float sidecar: 16-byte header (8-byte magic, u32 n1, u32 n2,
/// little-endian) followed by row-major IEEE little-endian doubles.
inline void write_sidecar(const std::string& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_sidecar: cannot open " + path);
  out.write(detail::kSidecarMagic, 8);
  detail::put_u32_le(out, static_cast<std::uint32_t>(f.grid.n[0]));
  detail::put_u32_le(out, static_cast<std::uint32_t>(f.grid.n[1]));
  out.write(reinterpret_cast<const char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (!out) throw IoError("write_sidecar: write failed for " + path);
}

inline ScalarField read_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_sidecar: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kSidecarMagic, 8) != 0)
    throw FormatError("read_sidecar: bad magic in " + path);
  const int n1 = static_cast<int>(detail::get_u32_le(in));
  const int n2 = static_cast<int>(detail::get_u32_le(in));
  ScalarField f{Grid2(n1, n2)};
  in.read(reinterpret_cast<char*>(f.v.data()),
          static_cast<std::streamsize>(f.v.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != f.v.size() * sizeof(double))
    throw FormatError("read_sidecar: truncated data in " + path);
  return f;
}

/// Ingest a grayscale raster: bilinear resample onto the grid, scale to
/// [0,1] by the format maxval, zero a margin band of n_x/16 nodes per side
/// (folds the content into the periodic domain), then mollify with a
/// periodic Gaussian of width sigma (skipped when sigma <= 0).
inline ScalarField ingest_image(const std::string& path, const Grid2& grid, double sigma) {
  const RasterImage img = read_pgm(path);
  ScalarField f(grid);
  for (int i = 0; i < grid.n[0]; ++i) {
    const double sr = (i + 0.5) * img.height / grid.n[0] - 0.5;
    const int r0 = std::clamp(static_cast<int>(std::floor(sr)), 0, img.height - 1);
    const int r1 = std::min(r0 + 1, img.height - 1);
    const double fr = std::clamp(sr - r0, 0.0, 1.0);
    for (int j = 0; j < grid.n[1]; ++j) {
      const double sc = (j + 0.5) * img.width / grid.n[1] - 0.5;
      const int c0 = std::clamp(static_cast<int>(std::floor(sc)), 0, img.width - 1);
      const int c1 = std::min(c0 + 1, img.width - 1);
      const double fc = std::clamp(sc - c0, 0.0, 1.0);
      f(i, j) = (1 - fr) * ((1 - fc) * img.at(r0, c0) + fc * img.at(r0, c1)) +
                fr * ((1 - fc) * img.at(r1, c0) + fc * img.at(r1, c1));
    }
  }
  const int m0 = grid.n[0] / 16, m1 = grid.n[1] / 16;
  for (int i = 0; i < grid.n[0]; ++i)
    for (int j = 0; j < grid.n[1]; ++j)
      if (i < m0 || i >= grid.n[0] - m0 || j < m1 || j >= grid.n[1] - m1) f(i, j) = 0.0;
  return sigma > 0.0 ? gaussian_smooth(f, sigma) : f;
}

/// Emit a field as an 8-bit graymap plus a lossless float sidecar (same stem
/// with extension .f64). Without an explicit clamp range the field's own
/// [min,max] is mapped to the pixel depth.
inline void emit_field(const ScalarField& f, const std::string& path,
                       std::optional<std::pair<double, double>> clamp = std::nullopt) {
  double lo, hi;
  if (clamp) {
    lo = clamp->first;
    hi = clamp->second;
  } else {
    lo = *std::min_element(f.v.begin(), f.v.end());
    hi = *std::max_element(f.v.begin(), f.v.end());
  }
  write_pgm(path, f, lo, hi);
  std::string sidecar = path;
  const std::size_t dot = sidecar.find_last_of('.');
  sidecar = (dot == std::string::npos ? sidecar : sidecar.substr(0, dot)) + ".f64";
  write_sidecar(sidecar, f);
}

}  // namespace flowreg
