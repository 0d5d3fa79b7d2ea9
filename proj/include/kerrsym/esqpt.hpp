#pragma once

// Parity-pair gaps along a squeezing sweep, critical-coupling estimators and
// separatrix models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrsym/classify.hpp"
#include "kerrsym/sweep.hpp"

namespace kerrsym {

/// E_v(odd) - E_v(even) along xi, with the pair's excitation energies.
struct GapCurve {
  std::size_t v = 0;
  std::vector<double> xi;
  std::vector<double> gap;
  std::vector<double> e_odd;   // excitation energies
  std::vector<double> e_even;

  [[nodiscard]] double semi_sum(std::size_t k) const { return 0.5 * (e_odd[k] + e_even[k]); }
};

struct UnconvergedLevels : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pairs the v-th odd-parity level with the v-th even-parity level for
/// v = 0..v_max. Needs a squeezing sweep split by parity.
inline std::vector<GapCurve> gap_curves(const SpectrumGrid& grid, std::size_t v_max) {
  if (grid.modulus != 2) throw std::invalid_argument("gap_curves: grid must be split by parity");
  if (grid.plan.varying != Parameter::Xi2) throw std::invalid_argument("gap_curves: needs a xi sweep");
  const auto even = grid.sector_index(0);
  const auto odd = grid.sector_index(1);
  if (!even || !odd) throw std::invalid_argument("gap_curves: missing parity sector");
  if (grid.levels(*even) <= v_max || grid.levels(*odd) <= v_max)
    throw std::invalid_argument("gap_curves: grid keeps too few levels for v_max");

  std::vector<GapCurve> out;
  for (std::size_t v = 0; v <= v_max; ++v) {
    GapCurve c;
    c.v = v;
    for (std::size_t k = 0; k < grid.points(); ++k) {
      if (!grid.sectors[*even].converged[k][v] || !grid.sectors[*odd].converged[k][v])
        throw UnconvergedLevels("gap_curves: pair v = " + std::to_string(v) +
                                " is unconverged at xi = " + std::to_string(grid.params[k]));
      c.xi.push_back(grid.params[k]);
      c.e_odd.push_back(grid.excitation(k, *odd, v));
      c.e_even.push_back(grid.excitation(k, *even, v));
      c.gap.push_back(c.e_odd.back() - c.e_even.back());
    }
    out.push_back(std::move(c));
  }
  return out;
}

enum class CriticalMethod { MaxRate, LinearExtrapolation, DifferenceBound };

inline const char* to_string(CriticalMethod m) noexcept {
  switch (m) {
    case CriticalMethod::MaxRate: return "max_rate";
    case CriticalMethod::LinearExtrapolation: return "linear_extrapolation";
    case CriticalMethod::DifferenceBound: return "difference_bound";
  }
  return "?";
}

struct CriticalPointEstimate {
  std::size_t v = 0;
  CriticalMethod method = CriticalMethod::MaxRate;
  double xi_c = 0.0;
  double E_c = 0.0;  // pair semi-sum (excitation) at xi_c
};

namespace detail {

inline double interp(std::span<const double> x, std::span<const double> y, double t) {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const auto k = static_cast<std::size_t>(it - x.begin());
  const double w = (t - x[k - 1]) / (x[k] - x[k - 1]);
  return (1.0 - w) * y[k - 1] + w * y[k];
}

inline double semi_sum_at(const GapCurve& c, double t) {
  std::vector<double> s(c.xi.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = c.semi_sum(k);
  return interp(c.xi, s, t);
}

// Vertex of the parabola through three points.
inline double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double a = (x1 - x0) * (y1 - y2);
  const double b = (x1 - x2) * (y1 - y0);
  const double den = a - b;
  if (den == 0.0) return x1;
  return x1 - 0.5 * ((x1 - x0) * a - (x1 - x2) * b) / den;
}

}  // namespace detail

/// -d(gap)/dxi by central differences.
inline std::vector<double> gap_rate(const GapCurve& c) {
  std::vector<double> r(c.xi.size(), 0.0);
  for (std::size_t k = 1; k + 1 < c.xi.size(); ++k)
    r[k] = -(c.gap[k + 1] - c.gap[k - 1]) / (c.xi[k + 1] - c.xi[k - 1]);
  return r;
}

/// Point of fastest gap closure: maximum of -d(gap)/dxi, refined by a
/// parabola through the discrete maximum and its neighbours. No estimate when
/// the maximum sits at the edge of the sampled range, when it does not rise
/// above rounding, or when the gap never exceeds the degeneracy tolerance.
inline std::optional<CriticalPointEstimate> xi_c_max_rate(const GapCurve& c) {
  const std::size_t n = c.xi.size();
  if (n < 5) return std::nullopt;
  const double top = *std::max_element(c.gap.begin(), c.gap.end());
  if (!(top > kDefaultTolDeg)) return std::nullopt;
  const auto r = gap_rate(c);
  std::size_t best = 1;
  for (std::size_t k = 2; k + 1 < n; ++k)
    if (r[k] > r[best]) best = k;
  if (best <= 1 || best + 2 >= n) return std::nullopt;
  const double noise = 1e-9 * std::max(std::abs(r[best]), top);
  if (r[best] - std::min(r[best - 1], r[best + 1]) <= noise) return std::nullopt;
  const double xc = detail::parabola_vertex(c.xi[best - 1], r[best - 1], c.xi[best], r[best],
                                            c.xi[best + 1], r[best + 1]);
  return CriticalPointEstimate{c.v, CriticalMethod::MaxRate, xc, detail::semi_sum_at(c, xc)};
}

/// Fit window for the linear extrapolation, as fractions of the gap at the
/// reference point.
inline constexpr double kLinearWindowLo = 0.20;
inline constexpr double kLinearWindowHi = 0.60;
inline constexpr std::size_t kLinearWindowMinPoints = 3;

/// Least-squares line through the gap where it lies between 20% and 60% of
/// its value at the max-rate point (or at its maximum when the max-rate
/// estimator has no answer), extrapolated to zero.
inline std::optional<CriticalPointEstimate> xi_c_linear_extrapolation(const GapCurve& c) {
  const std::size_t n = c.xi.size();
  if (n < 2) return std::nullopt;
  double x_ref = 0.0, g_ref = 0.0;
  if (auto mr = xi_c_max_rate(c)) {
    x_ref = mr->xi_c;
    g_ref = detail::interp(c.xi, c.gap, x_ref);
  } else {
    const auto it = std::max_element(c.gap.begin(), c.gap.end());
    x_ref = c.xi[static_cast<std::size_t>(it - c.gap.begin())];
    g_ref = *it;
  }
  if (!(g_ref > 0.0)) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (c.xi[k] < x_ref) continue;
    if (c.gap[k] < kLinearWindowLo * g_ref || c.gap[k] > kLinearWindowHi * g_ref) continue;
    sx += c.xi[k];
    sy += c.gap[k];
    sxx += c.xi[k] * c.xi[k];
    sxy += c.xi[k] * c.gap[k];
    ++m;
  }
  if (m < kLinearWindowMinPoints) return std::nullopt;
  const double dm = static_cast<double>(m);
  const double den = dm * sxx - sx * sx;
  if (den == 0.0) return std::nullopt;
  const double slope = (dm * sxy - sx * sy) / den;
  const double icept = (sy - slope * sx) / dm;
  if (!(slope < 0.0)) return std::nullopt;
  const double xc = -icept / slope;
  if (xc < c.xi.front() || xc > c.xi.back()) return std::nullopt;
  return CriticalPointEstimate{c.v, CriticalMethod::LinearExtrapolation, xc,
                               detail::semi_sum_at(c, xc)};
}

inline constexpr double kDifferenceBoundFraction = 0.005;

/// First xi from which gap <= fraction * semi-sum holds at every later
/// sample, linearly interpolated between the bracketing samples. Gaps within
/// tol_deg count as closed.
inline std::optional<CriticalPointEstimate> xi_c_difference_bound(
    const GapCurve& c, double fraction = kDifferenceBoundFraction, double tol_deg = kDefaultTolDeg) {
  const std::size_t n = c.xi.size();
  if (n == 0) return std::nullopt;
  auto h = [&](std::size_t k) {
    const double s = c.semi_sum(k);
    return c.gap[k] - std::max(fraction * s, tol_deg * std::max(1.0, std::abs(s)));
  };
  if (h(n - 1) > 0.0) return std::nullopt;
  std::size_t first = n - 1;
  while (first > 0 && h(first - 1) <= 0.0) --first;
  double xc = c.xi[first];
  if (first > 0) {
    const double h0 = h(first - 1), h1 = h(first);
    xc = c.xi[first - 1] + (c.xi[first] - c.xi[first - 1]) * h0 / (h0 - h1);
  }
  return CriticalPointEstimate{c.v, CriticalMethod::DifferenceBound, xc, detail::semi_sum_at(c, xc)};
}

// ---------------------------------------------------------------------------

struct SeparatrixPoint {
  std::size_t v = 0;
  CriticalMethod method = CriticalMethod::MaxRate;
  double xi_c = 0.0;
  double E_c = 0.0;
  double rel_dev = 0.0;  // (E_c - xi_c^2) / xi_c^2
};

inline std::vector<SeparatrixPoint> separatrix_from_estimates(
    std::span<const CriticalPointEstimate> estimates) {
  if (estimates.size() < 3)
    throw std::invalid_argument("separatrix_from_estimates: need at least three estimates");
  std::vector<SeparatrixPoint> out;
  for (const auto& e : estimates) {
    const double s = e.xi_c * e.xi_c;
    out.push_back({e.v, e.method, e.xi_c, e.E_c, s > 0.0 ? (e.E_c - s) / s : 0.0});
  }
  return out;
}

enum class SeparatrixKind { Kerr, Squeeze, CombinedEs, CombinedEsPrime };

/// Analytic separatrix energies (excitation units). Only the Kerr form is
/// exact; the others are large-N or approximate expressions.
struct SeparatrixModel {
  SeparatrixKind kind = SeparatrixKind::Kerr;

  [[nodiscard]] double operator()(double eta, double xi) const {
    switch (kind) {
      case SeparatrixKind::Kerr: return eta / 2.0 + eta * eta / 4.0;
      case SeparatrixKind::Squeeze: return xi * xi;
      case SeparatrixKind::CombinedEs: return eta / 2.0 + eta * eta / 4.0 + eta * xi;
      case SeparatrixKind::CombinedEsPrime: return eta * xi;
    }
    return 0.0;
  }

  [[nodiscard]] bool exact() const noexcept { return kind == SeparatrixKind::Kerr; }
};

/// Residuals of the doublet energies E_v (pair semi-sum) at one sweep point
/// against 4 xi v and against 4 xi v (1 - v / N_eff), N_eff = n_max / 2.
struct LevelModelComparison {
  double rms_harmonic = 0.0;
  double rms_finite_n = 0.0;
};

inline LevelModelComparison compare_level_models(std::span<const GapCurve> curves, std::size_t point,
                                                 std::size_t v_lo, std::size_t v_hi,
                                                 std::size_t n_max) {
  const double n_eff = static_cast<double>(n_max) / 2.0;
  double s1 = 0.0, s2 = 0.0;
  std::size_t m = 0;
  for (const auto& c : curves) {
    if (c.v < v_lo || c.v > v_hi) continue;
    const double xi = c.xi.at(point);
    const double e = c.semi_sum(point);
    const double v = static_cast<double>(c.v);
    const double harmonic = 4.0 * xi * v;
    const double finite = harmonic * (1.0 - v / n_eff);
    s1 += (e - harmonic) * (e - harmonic);
    s2 += (e - finite) * (e - finite);
    ++m;
  }
  if (m == 0) throw std::invalid_argument("compare_level_models: no curves in v range");
  return {std::sqrt(s1 / static_cast<double>(m)), std::sqrt(s2 / static_cast<double>(m))};
}

}  // namespace kerrsym
