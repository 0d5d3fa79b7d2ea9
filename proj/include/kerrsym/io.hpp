#pragma once

// CSV and SVG emitters for sweep results.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrsym/esqpt.hpp"
#include "kerrsym/sectors.hpp"
#include "kerrsym/sweep.hpp"

namespace kerrsym {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Coloring { Parity, Mod3, Mod4, Mod2x2 };

inline std::optional<Coloring> parse_coloring(const std::string& s) {
  if (s == "parity") return Coloring::Parity;
  if (s == "mod3") return Coloring::Mod3;
  if (s == "mod4") return Coloring::Mod4;
  if (s == "mod2x2") return Coloring::Mod2x2;
  return std::nullopt;
}

inline bool coloring_compatible(Coloring c, std::size_t modulus) {
  switch (c) {
    case Coloring::Parity: return modulus == 2 || modulus == kDiagonalModulus;
    case Coloring::Mod3: return modulus == 3;
    case Coloring::Mod4: return modulus == 4;
    case Coloring::Mod2x2: return modulus == 4;
  }
  return false;
}

/// Colour class of a sector. Parity-type colourings give "even"/"odd".
inline std::string color_class(Coloring c, std::size_t modulus, std::size_t residue) {
  if (!coloring_compatible(c, modulus))
    throw std::invalid_argument("coloring does not match sector modulus " + std::to_string(modulus));
  switch (c) {
    case Coloring::Parity:
    case Coloring::Mod2x2: return residue % 2 == 0 ? "even" : "odd";
    case Coloring::Mod3:
    case Coloring::Mod4: return std::to_string(residue);
  }
  return "";
}

/// Fixed 12-significant-digit formatting.
inline std::string fmt_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline constexpr const char* kSweepCsvHeader =
    "param,sector_residue,level_index,energy,excitation_energy,converged,color_class";

inline std::string sweep_csv(const SpectrumGrid& grid, std::optional<Coloring> coloring) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  for (std::size_t k = 0; k < grid.points(); ++k) {
    for (std::size_t s = 0; s < grid.sectors.size(); ++s) {
      const auto& sec = grid.sectors[s];
      const std::string cls =
          coloring ? color_class(*coloring, grid.modulus, sec.residue) : std::string{};
      for (std::size_t l = 0; l < sec.energy[k].size(); ++l) {
        os << fmt_num(grid.params[k]) << ',' << sec.residue << ',' << l << ','
           << fmt_num(sec.energy[k][l]) << ',' << fmt_num(grid.excitation(k, s, l)) << ','
           << int(sec.converged[k][l]) << ',' << cls << '\n';
      }
    }
  }
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << content;
  f.close();
  if (!f) throw IoError("write failed: " + path);
}

struct CsvRow {
  double param = 0.0;
  std::size_t sector_residue = 0;
  std::size_t level_index = 0;
  double energy = 0.0;
  double excitation_energy = 0.0;
  bool converged = false;
  std::string color_class;
};

inline std::vector<CsvRow> parse_sweep_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kSweepCsvHeader) throw IoError("unexpected CSV header");
  std::vector<CsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw IoError("malformed CSV row: " + line);
    rows.push_back({std::stod(f[0]), std::stoul(f[1]), std::stoul(f[2]), std::stod(f[3]),
                    std::stod(f[4]), f[5] == "1", f[6]});
  }
  return rows;
}

// ---------------------------------------------------------------------------

struct SvgStyle {
  double width = 800;
  double height = 600;
  std::optional<Coloring> coloring;
  bool excitation = true;
  std::optional<double> y_max;  // clip
  std::vector<SeparatrixModel> overlays;
  double overlay_eta = 0.0;  // eta for overlays on a xi sweep
  double overlay_xi = 0.0;   // xi for overlays on an eta sweep
  std::string x_label = "parameter";
  std::string y_label = "E/K";
};

namespace detail {

inline std::string palette(const std::string& cls) {
  if (cls == "even") return "#e07b00";
  if (cls == "odd") return "#1f5fbf";
  if (cls == "0") return "#0b6e2e";
  if (cls == "1") return "#38a85a";
  if (cls == "2") return "#86d19a";
  if (cls == "3") return "#7a3fb0";
  return "#333333";
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (f * mag >= raw) {
      step = f * mag;
      break;
    }
  std::vector<double> t;
  for (double x = std::ceil(lo / step) * step; x <= hi + 1e-9 * span; x += step) t.push_back(x);
  return t;
}

}  // namespace detail

inline std::string sweep_svg(const SpectrumGrid& grid, const SvgStyle& style) {
  if (grid.points() == 0) throw std::invalid_argument("sweep_svg: empty grid");
  const double ml = 60, mr = 20, mt = 20, mb = 50;
  const double pw = style.width - ml - mr, ph = style.height - mt - mb;
  const double x0 = grid.params.front(), x1 = grid.params.back();
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  auto val = [&](std::size_t k, std::size_t s, std::size_t l) {
    return style.excitation ? grid.excitation(k, s, l) : grid.sectors[s].energy[k][l];
  };
  for (std::size_t s = 0; s < grid.sectors.size(); ++s)
    for (std::size_t k = 0; k < grid.points(); ++k)
      for (std::size_t l = 0; l < grid.sectors[s].energy[k].size(); ++l) {
        y0 = std::min(y0, val(k, s, l));
        y1 = std::max(y1, val(k, s, l));
      }
  if (style.y_max) y1 = std::min(y1, *style.y_max);
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double xs = x1 > x0 ? x1 - x0 : 1.0;
  auto px = [&](double x) { return ml + (x - x0) / xs * pw; };
  auto py = [&](double y) { return mt + (1.0 - (std::clamp(y, y0, y1) - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\""
     << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\"/></g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double t : detail::nice_ticks(x0, x0 + xs)) {
    os << "<line x1=\"" << px(t) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(t) << "\" y2=\""
       << mt + ph + 5 << "\" stroke=\"black\"/><text x=\"" << px(t) << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\">" << fmt_num(t) << "</text>\n";
  }
  for (double t : detail::nice_ticks(y0, y1)) {
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(t) << "\" x2=\"" << ml << "\" y2=\"" << py(t)
       << "\" stroke=\"black\"/><text x=\"" << ml - 8 << "\" y=\"" << py(t) + 4
       << "\" text-anchor=\"end\">" << fmt_num(t) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << style.height - 10 << "\" text-anchor=\"middle\">"
     << style.x_label << "</text>\n";
  os << "<text x=\"15\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
     << mt + ph / 2 << ")\">" << style.y_label << "</text>\n</g>\n";

  for (std::size_t s = 0; s < grid.sectors.size(); ++s) {
    const std::string cls = style.coloring
                                ? color_class(*style.coloring, grid.modulus, grid.sectors[s].residue)
                                : std::string{};
    for (std::size_t l = 0; l < grid.levels(s); ++l) {
      os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << detail::palette(cls)
         << "\" points=\"";
      for (std::size_t k = 0; k < grid.points(); ++k) {
        if (l >= grid.sectors[s].energy[k].size()) continue;
        os << fmt_num(px(grid.params[k])) << ',' << fmt_num(py(val(k, s, l))) << ' ';
      }
      os << "\"/>\n";
    }
  }
  const bool eta_sweep = grid.plan.varying == Parameter::Eta;
  for (const auto& m : style.overlays) {
    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\" "
          "points=\"";
    for (std::size_t k = 0; k < grid.points(); ++k) {
      const double t = grid.params[k];
      const double e = eta_sweep ? m(t, style.overlay_xi) : m(style.overlay_eta, t);
      if (e > y1) continue;
      os << fmt_num(px(t)) << ',' << fmt_num(py(e)) << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace kerrsym
