#pragma once

// Converged per-sector spectra over a 1-D parameter grid.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kerrsym/eigensolve.hpp"
#include "kerrsym/fock_algebra.hpp"
#include "kerrsym/quantum_numbers.hpp"
#include "kerrsym/sectors.hpp"

namespace kerrsym {

enum class Parameter { Eta, Xi2, Xi3, Xi4, XiN2 };

inline const char* to_string(Parameter p) noexcept {
  switch (p) {
    case Parameter::Eta: return "eta";
    case Parameter::Xi2: return "xi";
    case Parameter::Xi3: return "xi3";
    case Parameter::Xi4: return "xi4";
    case Parameter::XiN2: return "xi2_prime";
  }
  return "?";
}

inline HamiltonianSpec with_parameter(HamiltonianSpec spec, Parameter p, double value) {
  switch (p) {
    case Parameter::Eta: spec.eta = value; break;
    case Parameter::Xi2: spec.set(Perturbation::P2, value); break;
    case Parameter::Xi3: spec.set(Perturbation::P3, value); break;
    case Parameter::Xi4: spec.set(Perturbation::P4, value); break;
    case Parameter::XiN2: spec.set(Perturbation::nP2, value); break;
  }
  return spec;
}

enum class Normalization { Absolute, Excitation };

struct SweepPlan {
  Parameter varying = Parameter::Eta;
  std::vector<double> grid;
  HamiltonianSpec fixed;
  std::size_t n_max = kDefaultNMax;
  std::size_t n_probe = kDefaultNProbe;
  double tol_conv = kDefaultTolConv;
  Normalization normalize = Normalization::Excitation;
  std::optional<std::size_t> modulus;  // detected from the Hamiltonian when unset
  std::size_t max_levels = 0;          // per sector; 0 keeps every level
  unsigned threads = 0;                // 0 = hardware concurrency
};

struct SweepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void validate(const SweepPlan& plan) {
  if (plan.grid.size() < 2) throw std::invalid_argument("sweep grid needs at least two points");
  for (std::size_t i = 0; i < plan.grid.size(); ++i) {
    if (!std::isfinite(plan.grid[i])) throw std::invalid_argument("sweep grid value is not finite");
    if (i > 0 && !(plan.grid[i] > plan.grid[i - 1]))
      throw std::invalid_argument("sweep grid must be strictly increasing");
  }
  if (plan.n_probe <= plan.n_max) throw std::invalid_argument("n_probe must exceed n_max");
}

/// Modulus used for every point of the sweep: the structure of the
/// Hamiltonian with the varying coupling switched on.
inline std::size_t sweep_modulus(const SweepPlan& plan) {
  if (plan.modulus) return *plan.modulus;
  const double probe = plan.varying == Parameter::Eta ? plan.fixed.eta : 1.0;
  return detect_modulus(standard_hamiltonian(with_parameter(plan.fixed, plan.varying, probe)));
}

/// Sector-resolved spectrum at a single parameter value.
struct PointSpectrum {
  double param = 0.0;
  std::vector<std::vector<double>> energies;     // [sector][level], ascending
  std::vector<std::vector<std::uint8_t>> converged;
  double ground_energy = 0.0;
};

/// Without the probe truncation every level is reported as unconverged.
inline PointSpectrum evaluate_point(const SweepPlan& plan, std::size_t modulus, double t,
                                    bool with_probe = true) {
  const OperatorPoly h = standard_hamiltonian(with_parameter(plan.fixed, plan.varying, t));
  const auto base = sector_spectra(h, FockSpace{plan.n_max}, modulus);
  const auto probe =
      with_probe ? sector_spectra(h, FockSpace{plan.n_probe}, modulus) : std::vector<EigenResult>{};
  PointSpectrum out;
  out.param = t;
  out.ground_energy = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < base.size(); ++s) {
    const auto& ev = base[s].eigenvalues;
    if (!ev.empty()) out.ground_energy = std::min(out.ground_energy, ev.front());
    const std::size_t keep = plan.max_levels == 0 ? ev.size() : std::min(plan.max_levels, ev.size());
    std::vector<double> e(ev.begin(), ev.begin() + static_cast<std::ptrdiff_t>(keep));
    std::vector<std::uint8_t> c(keep);
    for (std::size_t i = 0; i < keep; ++i)
      c[i] = with_probe && level_converged(ev[i], probe[s].eigenvalues[i], plan.tol_conv) ? 1 : 0;
    out.energies.push_back(std::move(e));
    out.converged.push_back(std::move(c));
  }
  return out;
}

/// Energies of one sector along the grid.
struct SectorCurves {
  std::size_t residue = 0;
  std::vector<std::vector<double>> energy;  // [point][level]
  std::vector<std::vector<std::uint8_t>> converged;
};

struct SpectrumGrid {
  SweepPlan plan;
  std::size_t modulus = 1;
  std::vector<double> params;  // may be denser than plan.grid after refinement
  std::vector<SectorCurves> sectors;
  std::vector<double> ground_energy;

  [[nodiscard]] std::size_t points() const noexcept { return params.size(); }

  [[nodiscard]] double excitation(std::size_t point, std::size_t sector, std::size_t level) const {
    return sectors.at(sector).energy.at(point).at(level) - ground_energy.at(point);
  }

  /// Energy as selected by the plan's normalisation.
  [[nodiscard]] double value(std::size_t point, std::size_t sector, std::size_t level) const {
    const double e = sectors.at(sector).energy.at(point).at(level);
    return plan.normalize == Normalization::Excitation ? e - ground_energy.at(point) : e;
  }

  [[nodiscard]] std::size_t levels(std::size_t sector) const {
    const auto& s = sectors.at(sector);
    return s.energy.empty() ? 0 : s.energy.front().size();
  }

  [[nodiscard]] std::optional<std::size_t> sector_index(std::size_t residue) const {
    for (std::size_t i = 0; i < sectors.size(); ++i)
      if (sectors[i].residue == residue) return i;
    return std::nullopt;
  }
};

namespace detail {

/// Evaluates points concurrently; results land at their own index, so the
/// outcome does not depend on scheduling.
inline std::vector<PointSpectrum> evaluate_points(const SweepPlan& plan, std::size_t modulus,
                                                  const std::vector<double>& ts) {
  std::vector<PointSpectrum> out(ts.size());
  std::vector<std::exception_ptr> errors(ts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < ts.size(); i = next++) {
      try {
        out[i] = evaluate_point(plan, modulus, ts[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = plan.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.threads;
  n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(ts.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw SweepError("grid point " + std::to_string(i) + " (" + to_string(plan.varying) + " = " +
                       std::to_string(ts[i]) + "): " + e.what());
    }
  }
  return out;
}

inline SpectrumGrid assemble_grid(const SweepPlan& plan, std::size_t modulus,
                                  std::vector<PointSpectrum> pts) {
  std::stable_sort(pts.begin(), pts.end(),
                   [](const PointSpectrum& a, const PointSpectrum& b) { return a.param < b.param; });
  SpectrumGrid g;
  g.plan = plan;
  g.modulus = modulus;
  const std::size_t nsec = pts.empty() ? 0 : pts.front().energies.size();
  g.sectors.resize(nsec);
  for (std::size_t s = 0; s < nsec; ++s) g.sectors[s].residue = s;
  for (auto& p : pts) {
    g.params.push_back(p.param);
    g.ground_energy.push_back(p.ground_energy);
    for (std::size_t s = 0; s < nsec; ++s) {
      g.sectors[s].energy.push_back(std::move(p.energies[s]));
      g.sectors[s].converged.push_back(std::move(p.converged[s]));
    }
  }
  return g;
}

inline PointSpectrum extract_point(const SpectrumGrid& g, std::size_t i) {
  PointSpectrum p;
  p.param = g.params[i];
  p.ground_energy = g.ground_energy[i];
  for (const auto& s : g.sectors) {
    p.energies.push_back(s.energy[i]);
    p.converged.push_back(s.converged[i]);
  }
  return p;
}

}  // namespace detail

/// Expand, assemble, split, diagonalise every grid point.
inline SpectrumGrid run_sweep(const SweepPlan& plan) {
  validate(plan);
  const std::size_t k = sweep_modulus(plan);
  return detail::assemble_grid(plan, k, detail::evaluate_points(plan, k, plan.grid));
}

// ---------------------------------------------------------------------------

enum class CrossingKind { True, Avoided };

struct CrossingEvent {
  CrossingKind kind = CrossingKind::True;
  double param_value = 0.0;
  std::size_t sector_a = 0;  // residues
  std::size_t index_a = 0;
  std::size_t sector_b = 0;
  std::size_t index_b = 0;
  double min_gap = 0.0;
  bool near_unconverged = false;
  std::optional<std::pair<QuasiSpinLabel, QuasiSpinLabel>> labels;
};

/// Adds factor - 1 evenly spaced points inside every grid interval that
/// brackets an event and recomputes only those points.
inline SpectrumGrid refine_near(const SpectrumGrid& grid, const std::vector<CrossingEvent>& events,
                                std::size_t factor) {
  if (events.empty() || factor < 2 || grid.points() < 2) return grid;
  std::set<std::size_t> intervals;
  for (const auto& ev : events) {
    auto it = std::upper_bound(grid.params.begin(), grid.params.end(), ev.param_value);
    std::size_t k = it == grid.params.begin() ? 0 : static_cast<std::size_t>(it - grid.params.begin()) - 1;
    k = std::min(k, grid.points() - 2);
    intervals.insert(k);
  }
  std::vector<double> fresh;
  for (auto k : intervals) {
    const double a = grid.params[k];
    const double b = grid.params[k + 1];
    for (std::size_t i = 1; i < factor; ++i)
      fresh.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(factor));
  }
  auto pts = detail::evaluate_points(grid.plan, grid.modulus, fresh);
  for (std::size_t i = 0; i < grid.points(); ++i) pts.push_back(detail::extract_point(grid, i));
  return detail::assemble_grid(grid.plan, grid.modulus, std::move(pts));
}

inline std::vector<double> linspace_step(double start, double stop, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(start + step * static_cast<double>(i));
  return g;
}

}  // namespace kerrsym
