#pragma once

// Quasi-spin labelling, degeneracy grouping and level-crossing analysis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "kerrsym/eigensolve.hpp"
#include "kerrsym/fock_algebra.hpp"
#include "kerrsym/quantum_numbers.hpp"
#include "kerrsym/sectors.hpp"
#include "kerrsym/sweep.hpp"

namespace kerrsym {

/// |n1, n2> of the two-boson construction.
struct TwoBosonState {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;

  [[nodiscard]] std::int64_t N() const noexcept { return n1 + n2; }
  [[nodiscard]] HalfInteger j() const noexcept { return HalfInteger::from_twice(N()); }
  [[nodiscard]] HalfInteger m() const noexcept { return HalfInteger::from_twice(n2 - n1); }
  [[nodiscard]] int parity() const noexcept { return parity_sign(n1); }
};

/// Level of -eta n + n(n-1) at integer eta, counted from the lowest state.
struct KerrLevel {
  std::int64_t excitation = 0;
  std::int64_t fock_n = 0;
  std::optional<QuasiSpinLabel> label;   // for states inside the j = (eta+1)/2 multiplet
  std::optional<TwoBosonState> bosons;
};

/// m^2 - 1/4 for half-integer m (even eta), m^2 for integer m (odd eta).
inline std::int64_t quasi_spin_energy(HalfInteger m) {
  const std::int64_t t = m.twice();
  return m.is_integer() ? t * t / 4 : (t * t - 1) / 4;
}

/// The lowest `count` levels in integer arithmetic, ties ordered by n. States
/// with n <= eta + 1 carry (j, m) with n1 = n and n2 = eta + 1 - n.
inline std::vector<KerrLevel> kerr_exact_levels(std::int64_t eta, std::size_t count) {
  if (eta < 0) throw std::invalid_argument("kerr_exact_levels: eta must be non-negative");
  const std::int64_t big_n = eta + 1;
  const std::int64_t n_hi = big_n + static_cast<std::int64_t>(count) + 1;
  std::vector<KerrLevel> all;
  for (std::int64_t n = 0; n <= n_hi; ++n) all.push_back({n * n - big_n * n, n, {}, {}});
  std::stable_sort(all.begin(), all.end(),
                   [](const KerrLevel& a, const KerrLevel& b) { return a.excitation < b.excitation; });
  const std::int64_t emin = all.front().excitation;
  all.resize(std::min(count, all.size()));
  for (auto& l : all) {
    l.excitation -= emin;
    if (l.fock_n > big_n) continue;
    TwoBosonState b{l.fock_n, big_n - l.fock_n};
    QuasiSpinLabel q;
    q.j = b.j();
    q.m = b.m();
    q.parity = b.parity();
    l.label = q;
    l.bosons = b;
  }
  return all;
}

// ---------------------------------------------------------------------------

inline constexpr double kDefaultTolDeg = 1e-6;

struct DegeneracyGroup {
  std::vector<std::size_t> members;  // indices into the input
  double energy = 0.0;               // mean
  double max_gap = 0.0;              // highest minus lowest member

  [[nodiscard]] std::size_t multiplicity() const noexcept { return members.size(); }
};

/// Clusters ascending energies; a level joins the current group while it is
/// within tol_deg * max(1, |E|) of the group's lowest member.
inline std::vector<DegeneracyGroup> degeneracy_groups(std::span<const double> energies,
                                                      double tol_deg = kDefaultTolDeg) {
  std::vector<DegeneracyGroup> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (i > 0 && energies[i] < energies[i - 1])
      throw std::invalid_argument("degeneracy_groups: energies must be ascending");
    const bool joins = !out.empty() &&
                       energies[i] - energies[start] <= tol_deg * std::max(1.0, std::abs(energies[i]));
    if (!joins) {
      out.push_back({});
      start = i;
    }
    auto& g = out.back();
    g.members.push_back(i);
    g.max_gap = energies[i] - energies[start];
  }
  for (auto& g : out) {
    double s = 0.0;
    for (auto i : g.members) s += energies[i];
    g.energy = s / static_cast<double>(g.members.size());
  }
  return out;
}

/// Groups of the converged prefix of a spectrum.
inline std::vector<DegeneracyGroup> degeneracy_groups(const ConvergedSpectrum& spec,
                                                      double tol_deg = kDefaultTolDeg) {
  std::vector<double> e;
  for (std::size_t i = 0; i < spec.n_converged; ++i) e.push_back(spec.levels[i].energy);
  return degeneracy_groups(std::span<const double>(e), tol_deg);
}

// ---------------------------------------------------------------------------
// Crossings along a sweep.

struct CrossingOptions {
  std::size_t max_levels = 12;     // per sector, lowest levels only
  double tol_deg = kDefaultTolDeg; // gaps below this are treated as zero
  double energy_tol = 1e-9;        // refinement target on |E_a - E_b|
  bool refine = true;
  double max_avoided_gap = std::numeric_limits<double>::infinity();
};

namespace detail {

/// Fock labels for a crossing of a diagonal Hamiltonian at integer eta.
inline std::optional<std::pair<QuasiSpinLabel, QuasiSpinLabel>> diagonal_crossing_labels(
    const SpectrumGrid& grid, const CrossingEvent& ev) {
  if (grid.plan.varying != Parameter::Eta) return std::nullopt;
  const double eta = ev.param_value;
  const double eta_int = std::round(eta);
  if (std::abs(eta - eta_int) > 1e-9 || eta_int < 0) return std::nullopt;
  const HamiltonianSpec spec = with_parameter(grid.plan.fixed, grid.plan.varying, eta_int);
  const OperatorPoly h = standard_hamiltonian(spec);
  if (h.bandwidth() != 0) return std::nullopt;

  const auto big_n = static_cast<std::int64_t>(eta_int) + 1;
  auto fock_of = [&](std::size_t residue, std::size_t rank) -> std::int64_t {
    std::vector<std::pair<double, std::int64_t>> states;
    for (std::size_t n = 0; n <= grid.plan.n_max; ++n)
      if (residue_of(n, grid.modulus) == residue) {
        const double x = static_cast<double>(n);
        states.emplace_back(x * x - static_cast<double>(big_n) * x, static_cast<std::int64_t>(n));
      }
    std::stable_sort(states.begin(), states.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return rank < states.size() ? states[rank].second : -1;
  };
  const std::int64_t na = fock_of(ev.sector_a, ev.index_a);
  const std::int64_t nb = fock_of(ev.sector_b, ev.index_b);
  if (na < 0 || nb < 0 || na > big_n || nb > big_n || na + nb != big_n) return std::nullopt;
  auto label = [big_n](std::int64_t n) {
    TwoBosonState b{n, big_n - n};
    QuasiSpinLabel q;
    q.j = b.j();
    q.m = b.m();
    q.parity = b.parity();
    return q;
  };
  return std::pair{label(na), label(nb)};
}

inline bool unconverged_near(const SpectrumGrid& grid, std::size_t sec, std::size_t lvl,
                             std::size_t k_lo, std::size_t k_hi) {
  const std::size_t lo = k_lo == 0 ? 0 : k_lo - 1;
  const std::size_t hi = std::min(grid.points() - 1, k_hi + 1);
  for (std::size_t k = lo; k <= hi; ++k)
    if (!grid.sectors[sec].converged[k][lvl]) return true;
  return false;
}

}  // namespace detail

/// True crossings between sectors (sign changes of E_a - E_b, refined by a
/// bracketing root search) and avoided crossings inside a sector (local gap
/// minima, refined by golden-section/parabolic search).
inline std::vector<CrossingEvent> detect_crossings(const SpectrumGrid& grid,
                                                   const CrossingOptions& opt = {}) {
  std::vector<CrossingEvent> events;
  const std::size_t npts = grid.points();
  if (npts < 2) return events;

  auto noise = [&opt](double e) { return opt.tol_deg * std::max(1.0, std::abs(e)); };

  // Inter-sector sign changes.
  for (std::size_t sa = 0; sa < grid.sectors.size(); ++sa)
    for (std::size_t sb = sa + 1; sb < grid.sectors.size(); ++sb)
      for (std::size_t ia = 0; ia < std::min(opt.max_levels, grid.levels(sa)); ++ia)
        for (std::size_t ib = 0; ib < std::min(opt.max_levels, grid.levels(sb)); ++ib) {
          const auto& ea = grid.sectors[sa].energy;
          const auto& eb = grid.sectors[sb].energy;
          std::optional<std::size_t> last;  // last point with a significant difference
          int last_sign = 0;
          for (std::size_t k = 0; k < npts; ++k) {
            const double d = ea[k][ia] - eb[k][ib];
            if (std::abs(d) <= noise(ea[k][ia])) continue;
            const int sign = d > 0 ? 1 : -1;
            if (last && sign != last_sign) {
              const std::size_t k0 = *last;
              double lo = grid.params[k0];
              double hi = grid.params[k];
              double root = 0.5 * (lo + hi);
              double gap = std::abs(d);
              if (opt.refine) {
                auto f = [&](double t) {
                  const auto p = evaluate_point(grid.plan, grid.modulus, t, false);
                  return p.energies[sa][ia] - p.energies[sb][ib];
                };
                const double flo = ea[k0][ia] - eb[k0][ib];
                std::uintmax_t iters = 200;
                auto r = boost::math::tools::toms748_solve(
                    f, lo, hi, flo, d,
                    [&f, &opt](double a, double b) {
                      return std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(a)) ||
                             std::abs(f(0.5 * (a + b))) < opt.energy_tol;
                    },
                    iters);
                root = 0.5 * (r.first + r.second);
                gap = std::abs(f(root));
              }
              CrossingEvent ev;
              ev.kind = CrossingKind::True;
              ev.param_value = root;
              ev.sector_a = grid.sectors[sa].residue;
              ev.index_a = ia;
              ev.sector_b = grid.sectors[sb].residue;
              ev.index_b = ib;
              ev.min_gap = gap;
              ev.near_unconverged = detail::unconverged_near(grid, sa, ia, k0, k) ||
                                    detail::unconverged_near(grid, sb, ib, k0, k);
              ev.labels = detail::diagonal_crossing_labels(grid, ev);
              events.push_back(ev);
            }
            last = k;
            last_sign = sign;
          }
        }

  // Intra-sector gap minima between adjacent levels.
  for (std::size_t s = 0; s < grid.sectors.size(); ++s) {
    const auto& e = grid.sectors[s].energy;
    const std::size_t nl = std::min(opt.max_levels, grid.levels(s));
    for (std::size_t i = 0; i + 1 < nl; ++i)
      for (std::size_t k = 1; k + 1 < npts; ++k) {
        const double gm = e[k - 1][i + 1] - e[k - 1][i];
        const double g0 = e[k][i + 1] - e[k][i];
        const double gp = e[k + 1][i + 1] - e[k + 1][i];
        if (!(g0 < gm && g0 <= gp)) continue;
        double where = grid.params[k];
        double gap = g0;
        if (opt.refine) {
          auto g = [&](double t) {
            const auto p = evaluate_point(grid.plan, grid.modulus, t, false);
            return p.energies[s][i + 1] - p.energies[s][i];
          };
          std::uintmax_t iters = 100;
          auto r = boost::math::tools::brent_find_minima(g, grid.params[k - 1], grid.params[k + 1],
                                                         40, iters);
          if (r.second < gap) {
            where = r.first;
            gap = r.second;
          }
        }
        if (gap > opt.max_avoided_gap) continue;
        CrossingEvent ev;
        ev.kind = CrossingKind::Avoided;
        ev.param_value = where;
        ev.sector_a = ev.sector_b = grid.sectors[s].residue;
        ev.index_a = i;
        ev.index_b = i + 1;
        ev.min_gap = gap;
        ev.near_unconverged = detail::unconverged_near(grid, s, i, k - 1, k + 1) ||
                              detail::unconverged_near(grid, s, i + 1, k - 1, k + 1);
        events.push_back(ev);
      }
  }

  std::stable_sort(events.begin(), events.end(), [](const CrossingEvent& a, const CrossingEvent& b) {
    return a.param_value < b.param_value;
  });
  return events;
}

// ---------------------------------------------------------------------------
// Following a degeneracy point as a coupling is switched on.

struct TrackedPoint {
  double xi = 0.0;
  std::optional<double> eta_star;  // empty once the crossing is lost
  double residual = 0.0;           // |E_a - E_b| at eta_star
};

struct TrackingOptions {
  std::size_t n_max = kDefaultNMax;
  double bracket = 0.25;      // initial half-width around the previous location
  double max_bracket = 1.0;
  double eta_tol = 1e-12;
};

inline std::size_t modulus_of(Perturbation kind) {
  switch (kind) {
    case Perturbation::P2:
    case Perturbation::nP2: return 2;
    case Perturbation::P3: return 3;
    case Perturbation::P4: return 4;
  }
  return 1;
}

struct TrackedPair {
  std::int64_t n_a = 0;  // Fock states crossing at xi = 0
  std::int64_t n_b = 0;
  std::size_t residue_a = 0, rank_a = 0;
  std::size_t residue_b = 0, rank_b = 0;
  bool same_sector = false;
};

/// The +-|m| pair of the j = (eta0 + 1)/2 multiplet and its sector-sorted
/// position at xi = 0, eta = eta0 under the modulus of `kind`.
inline TrackedPair tracked_pair(std::int64_t eta0, HalfInteger m, Perturbation kind,
                                std::size_t n_max = kDefaultNMax) {
  const HalfInteger j = HalfInteger::from_twice(eta0 + 1);
  const HalfInteger am = m.abs();
  if (am.twice() == 0 || am > j || !(j - am).is_integer())
    throw std::invalid_argument("tracked_pair: need 0 < |m| <= j with j - m integer");
  TrackedPair tp;
  tp.n_a = (j - am).twice() / 2;
  tp.n_b = (j + am).twice() / 2;
  const std::size_t k = modulus_of(kind);
  tp.residue_a = static_cast<std::size_t>(tp.n_a) % k;
  tp.residue_b = static_cast<std::size_t>(tp.n_b) % k;
  tp.same_sector = tp.residue_a == tp.residue_b;
  auto rank = [&](std::int64_t n0) {
    const std::int64_t e0 = n0 * n0 - (eta0 + 1) * n0;
    std::size_t r = 0;
    for (std::int64_t n = static_cast<std::int64_t>(static_cast<std::size_t>(n0) % k);
         n <= static_cast<std::int64_t>(n_max); n += static_cast<std::int64_t>(k))
      if (n * n - (eta0 + 1) * n < e0) ++r;
    return r;
  };
  tp.rank_a = rank(tp.n_a);
  tp.rank_b = rank(tp.n_b);
  return tp;
}

/// eta*(xi) where the tracked pair stays degenerate, following the root from
/// xi to xi. A pair whose members share a sector cannot cross once the
/// coupling is on, and is reported lost for every xi > 0.
inline std::vector<TrackedPoint> track_crossing_location(std::int64_t eta0, HalfInteger m,
                                                         Perturbation kind,
                                                         const std::vector<double>& xi_grid,
                                                         const TrackingOptions& opt = {}) {
  const TrackedPair tp = tracked_pair(eta0, m, kind, opt.n_max);
  const std::size_t k = modulus_of(kind);
  std::vector<TrackedPoint> out;
  double prev = static_cast<double>(eta0);
  bool lost = false;
  for (double xi : xi_grid) {
    TrackedPoint pt;
    pt.xi = xi;
    if (lost || (tp.same_sector && xi != 0.0)) {
      out.push_back(pt);
      lost = true;
      continue;
    }
    HamiltonianSpec base;
    base.set(kind, xi);
    auto diff = [&](double eta) {
      HamiltonianSpec s = base;
      s.eta = eta;
      const auto sp = sector_spectra(standard_hamiltonian(s), FockSpace{opt.n_max}, k);
      return sp[tp.residue_a].eigenvalues.at(tp.rank_a) - sp[tp.residue_b].eigenvalues.at(tp.rank_b);
    };
    const double c = prev;
    if (diff(c) == 0.0) {
      pt.eta_star = c;
      out.push_back(pt);
      continue;
    }
    for (double h = opt.bracket; h <= opt.max_bracket + 1e-12; h *= 2.0) {
      const double lo = c - h, hi = c + h;
      const double flo = diff(lo), fhi = diff(hi);
      if (flo == 0.0 || fhi == 0.0) {
        pt.eta_star = flo == 0.0 ? lo : hi;
        break;
      }
      if ((flo < 0) == (fhi < 0)) continue;
      std::uintmax_t iters = 200;
      const double tol = opt.eta_tol;
      auto r = boost::math::tools::toms748_solve(
          diff, lo, hi, flo, fhi, [tol](double a, double b) { return std::abs(b - a) <= tol; }, iters);
      pt.eta_star = 0.5 * (r.first + r.second);
      pt.residual = std::abs(diff(*pt.eta_star));
      break;
    }
    if (pt.eta_star) prev = *pt.eta_star;
    else lost = true;
    out.push_back(pt);
  }
  return out;
}

}  // namespace kerrsym
