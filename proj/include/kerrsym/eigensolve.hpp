#pragma once

// Full spectra of real symmetric band matrices, per symmetry sector, with a
// two-truncation convergence certificate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kerrsym/fock_algebra.hpp"
#include "kerrsym/sectors.hpp"

namespace kerrsym {

struct EigenSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EigenResult {
  std::vector<double> eigenvalues;               // ascending
  std::optional<Eigen::MatrixXd> eigenvectors;   // columns, same order
  double residual_bound = 0.0;
  std::size_t sector_residue = 0;
};

namespace detail {

inline Eigen::VectorXd band_apply(const BandedSymMatrix& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  const auto& d0 = m.diag(0);
  for (std::size_t i = 0; i < m.dim(); ++i) y[i] = d0[i] * x[i];
  for (std::size_t d = 1; d <= m.bandwidth(); ++d) {
    const auto& dv = m.diag(d);
    for (std::size_t j = 0; j < dv.size(); ++j) {
      y[j + d] += dv[j] * x[j];
      y[j] += dv[j] * x[j + d];
    }
  }
  return y;
}

inline double norm_estimate(const BandedSymMatrix& m) {
  return m.max_abs() * static_cast<double>(2 * m.bandwidth() + 1);
}

}  // namespace detail

/// Eigenvalues (and optionally eigenvectors) of a symmetric band matrix.
/// Diagonal input is read off exactly; tridiagonal input goes through
/// implicit-shift QR on the tridiagonal form; anything wider is solved dense.
inline EigenResult eigen(const BandedSymMatrix& m, bool want_vectors = false) {
  if (!m.all_finite()) throw EigenSolveError("eigen: non-finite matrix entry");
  const std::size_t n = m.dim();
  EigenResult out;
  if (n == 0) return out;

  if (m.bandwidth() == 0) {
    const auto& d = m.diag(0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&d](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    out.eigenvalues.reserve(n);
    for (auto i : order) out.eigenvalues.push_back(d[i]);
    if (want_vectors) {
      Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t c = 0; c < n; ++c) v(order[c], c) = 1.0;
      out.eigenvectors = std::move(v);
    }
    return out;
  }

  const int options = want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  if (m.bandwidth() == 1) {
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(m.diag(0).data(), n);
    Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(m.diag(1).data(), n - 1);
    solver.computeFromTridiagonal(diag, sub, options);
  } else {
    solver.compute(m.to_dense(), options);
  }
  if (solver.info() != Eigen::Success)
    throw EigenSolveError("eigen: QR iteration did not converge (dim " + std::to_string(n) + ")");

  const auto& ev = solver.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  if (want_vectors) {
    out.eigenvectors = solver.eigenvectors();
    double worst = 0.0;
    for (Eigen::Index c = 0; c < out.eigenvectors->cols(); ++c) {
      const Eigen::VectorXd v = out.eigenvectors->col(c);
      worst = std::max(worst, (detail::band_apply(m, v) - ev[c] * v).norm());
    }
    out.residual_bound = worst;
  } else {
    out.residual_bound = std::numeric_limits<double>::epsilon() * static_cast<double>(n) *
                         detail::norm_estimate(m);
  }
  return out;
}

/// Spectra of every sector of `poly` on `space` under the given modulus.
inline std::vector<EigenResult> sector_spectra(const OperatorPoly& poly, const FockSpace& space,
                                               std::size_t modulus, bool want_vectors = false) {
  const auto dec = split(assemble(poly, space), modulus);
  std::vector<EigenResult> out;
  out.reserve(dec.sectors.size());
  for (const auto& s : dec.sectors) {
    auto r = eigen(s.block, want_vectors);
    r.sector_residue = s.residue;
    out.push_back(std::move(r));
  }
  return out;
}

struct Level {
  double energy = 0.0;
  std::size_t sector_residue = 0;
  std::size_t local_index = 0;  // rank inside its sector
  bool converged = false;
};

struct EnergyWindow {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct ConvergedSpectrum {
  std::vector<Level> levels;  // ascending energy
  std::size_t modulus = 1;
  std::size_t n_max_used = 0;
  std::size_t n_probe = 0;
  std::size_t n_converged = 0;  // length of the converged prefix
  double tol_conv = 0.0;
  double ground_energy = 0.0;

  /// The converged prefix, which is what downstream analysis should use.
  [[nodiscard]] std::vector<Level> converged_levels() const {
    return {levels.begin(), levels.begin() + static_cast<std::ptrdiff_t>(n_converged)};
  }
};

inline constexpr std::size_t kDefaultNMax = 800;
inline constexpr std::size_t kDefaultNProbe = 900;
inline constexpr double kDefaultTolConv = 1e-8;

inline bool level_converged(double e, double e_probe, double tol_conv) {
  return std::abs(e - e_probe) <= tol_conv * std::max(1.0, std::abs(e));
}

/// Diagonalises at n_max and n_probe; a level counts as converged when the
/// same (sector, rank) level moved by at most tol_conv * max(1, |E|). The
/// window is in excitation energy above the n_max ground state.
inline ConvergedSpectrum converged_spectrum(const HamiltonianSpec& spec,
                                            std::size_t n_max = kDefaultNMax,
                                            std::size_t n_probe = kDefaultNProbe,
                                            double tol_conv = kDefaultTolConv,
                                            EnergyWindow window = {}) {
  if (n_probe <= n_max) throw std::invalid_argument("converged_spectrum: n_probe must exceed n_max");
  const OperatorPoly h = standard_hamiltonian(spec);
  const std::size_t k = detect_modulus(h);
  const auto base = sector_spectra(h, FockSpace{n_max}, k);
  const auto probe = sector_spectra(h, FockSpace{n_probe}, k);

  ConvergedSpectrum out;
  out.modulus = k;
  out.n_max_used = n_max;
  out.n_probe = n_probe;
  out.tol_conv = tol_conv;
  std::vector<Level> all;
  for (std::size_t s = 0; s < base.size(); ++s) {
    const auto& ev = base[s].eigenvalues;
    const auto& pv = probe[s].eigenvalues;
    for (std::size_t i = 0; i < ev.size(); ++i)
      all.push_back({ev[i], base[s].sector_residue, i, level_converged(ev[i], pv[i], tol_conv)});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Level& a, const Level& b) { return a.energy < b.energy; });
  out.ground_energy = all.empty() ? 0.0 : all.front().energy;
  for (const auto& l : all) {
    const double ex = l.energy - out.ground_energy;
    if (ex >= window.lo && ex <= window.hi) out.levels.push_back(l);
  }
  while (out.n_converged < out.levels.size() && out.levels[out.n_converged].converged)
    ++out.n_converged;
  return out;
}

}  // namespace kerrsym
