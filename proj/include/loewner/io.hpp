#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "loewner/detail/atomic_file.hpp"
#include "loewner/ode.hpp"
#include "loewner/version.hpp"
#include "loewner/zipper.hpp"

namespace loewner::io {

using detail::fmt17;
using detail::write_text_atomic;

// "key=value key=value ..." provenance string; keys emitted in given order.
inline std::string meta_line(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s;
  for (const auto& [k, v] : kv) {
    if (!s.empty()) s += ' ';
    s += k + "=" + v;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Curve CSV: comment lines with provenance, then "t,re,im", full precision.
// ---------------------------------------------------------------------------
inline std::string curve_csv(const Curve& c, const std::string& meta) {
  std::string out;
  out.reserve(c.times.size() * 60 + 128);
  out += "# loewner-sim version=" + std::string(kVersion);
  if (!meta.empty()) out += " " + meta;
  out += "\n";
  if (c.polyline) out += "# polyline=true (grid tips; join consecutive samples by straight lines)\n";
  out += "t,re,im\n";
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    out += fmt17(c.times[i]);
    out += ',';
    out += fmt17(c.points[i].real());
    out += ',';
    out += fmt17(c.points[i].imag());
    out += '\n';
  }
  return out;
}

inline void write_curve_csv(const std::string& path, const Curve& c, const std::string& meta) {
  write_text_atomic(path, curve_csv(c, meta));
}

// ---------------------------------------------------------------------------
// SVG rendering: one polyline plus the real-axis baseline, y axis flipped,
// equal aspect. A plotting convenience, not a data format.
// ---------------------------------------------------------------------------
inline std::string curve_svg(const Curve& c, const std::string& meta, int width_px = 800) {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  for (const auto& p : c.points) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  const double spanx = std::max(xmax - xmin, 1e-9);
  const double spany = std::max(ymax - ymin, 1e-9);
  const double pad = 0.05 * std::max(spanx, spany);
  const double scale = (width_px) / (spanx + 2 * pad);
  const int height_px = std::max(64, static_cast<int>(std::lround(scale * (spany + 2 * pad))));
  auto X = [&](double x) { return (x - xmin + pad) * scale; };
  auto Y = [&](double y) { return height_px - (y - ymin + pad) * scale; };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px << "\" height=\""
      << height_px << "\" viewBox=\"0 0 " << width_px << " " << height_px << "\">\n";
  svg << "<!-- loewner-sim version=" << kVersion;
  if (!meta.empty()) svg << " " << meta;
  svg << " -->\n";
  svg << "<line x1=\"0\" y1=\"" << Y(0.0) << "\" x2=\"" << width_px << "\" y2=\"" << Y(0.0)
      << "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (i) svg << ' ';
    svg << static_cast<float>(X(c.points[i].real())) << ','
        << static_cast<float>(Y(c.points[i].imag()));
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

inline void write_curve_svg(const std::string& path, const Curve& c, const std::string& meta,
                            int width_px = 800) {
  write_text_atomic(path, curve_svg(c, meta, width_px));
}

// ---------------------------------------------------------------------------
// Plain-text PGM (P2): 0 = unswallowed, 255 = swallowed.
// ---------------------------------------------------------------------------
inline std::string raster_pgm(const ode::HullRaster& r, const std::string& meta) {
  std::ostringstream out;
  out << "P2\n";
  out << "# loewner-sim version=" << kVersion;
  if (!meta.empty()) out << " " << meta;
  out << "\n";
  out << "# bounds=[" << fmt17(r.bounds.xmin) << "," << fmt17(r.bounds.xmax) << "]x["
      << fmt17(r.bounds.ymin) << "," << fmt17(r.bounds.ymax) << "] resolution="
      << fmt17(r.resolution) << "\n";
  out << r.nx << " " << r.ny << "\n255\n";
  for (int row = 0; row < r.ny; ++row) {
    for (int ix = 0; ix < r.nx; ++ix) {
      if (ix) out << ' ';
      out << (r.swallowed(ix, row) ? 255 : 0);
    }
    out << '\n';
  }
  return out.str();
}

inline void write_raster_pgm(const std::string& path, const ode::HullRaster& r,
                             const std::string& meta) {
  write_text_atomic(path, raster_pgm(r, meta));
}

} // namespace loewner::io
