#pragma once

// Compact two-boson u(2) realisation with an auxiliary s boson. Basis
// |[N], n>, n = 0..N, with n_s = N - n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kerrsym/eigensolve.hpp"
#include "kerrsym/fock_algebra.hpp"
#include "kerrsym/quantum_numbers.hpp"
#include "kerrsym/sectors.hpp"

namespace kerrsym {

struct U2Rep {
  std::size_t N = 1;

  [[nodiscard]] std::size_t dim() const noexcept { return N + 1; }
  [[nodiscard]] HalfInteger j() const noexcept { return HalfInteger::from_twice(static_cast<std::int64_t>(N)); }
};

namespace u2 {

inline Eigen::MatrixXd zero(const U2Rep& rep) {
  const auto d = static_cast<Eigen::Index>(rep.dim());
  return Eigen::MatrixXd::Zero(d, d);
}

/// a^dag s.
inline Eigen::MatrixXd raise(const U2Rep& rep) {
  Eigen::MatrixXd m = zero(rep);
  const double N = static_cast<double>(rep.N);
  for (std::size_t n = 0; n < rep.N; ++n)
    m(n + 1, n) = std::sqrt((n + 1.0) * (N - n));
  return m;
}

/// s^dag a.
inline Eigen::MatrixXd lower(const U2Rep& rep) { return raise(rep).transpose(); }

/// (n_a - n_s) / 2. With this sign a^dag s and s^dag a close into su(2)
/// as [Fz, F+-] = +-F+-, [F+, F-] = 2 Fz.
inline Eigen::MatrixXd fz(const U2Rep& rep) {
  Eigen::MatrixXd m = zero(rep);
  for (std::size_t n = 0; n <= rep.N; ++n)
    m(n, n) = 0.5 * (static_cast<double>(n) - static_cast<double>(rep.N - n));
  return m;
}

inline Eigen::MatrixXd number_a(const U2Rep& rep) {
  Eigen::MatrixXd m = zero(rep);
  for (std::size_t n = 0; n <= rep.N; ++n) m(n, n) = static_cast<double>(n);
  return m;
}

inline Eigen::MatrixXd number_s(const U2Rep& rep) {
  return static_cast<double>(rep.N) * Eigen::MatrixXd::Identity(rep.dim(), rep.dim()) -
         number_a(rep);
}

/// a^dag a^dag s s.
inline Eigen::MatrixXd pair_raise(const U2Rep& rep) {
  Eigen::MatrixXd m = zero(rep);
  const double N = static_cast<double>(rep.N);
  for (std::size_t n = 0; n + 2 <= rep.N; ++n)
    m(n + 2, n) = std::sqrt((n + 1.0) * (n + 2.0)) * std::sqrt((N - n) * (N - n - 1.0));
  return m;
}

}  // namespace u2

/// a^dag s + s^dag a.
inline Eigen::MatrixXd so2_generator(const U2Rep& rep) {
  return u2::raise(rep) + u2::lower(rep);
}

/// (a^dag s + s^dag a)^2 written out in normal-ordered boson form.
inline Eigen::MatrixXd casimir_matrix(const U2Rep& rep) {
  const Eigen::MatrixXd pr = u2::pair_raise(rep);
  const Eigen::MatrixXd na = u2::number_a(rep);
  const Eigen::MatrixXd ns = u2::number_s(rep);
  return pr + pr.transpose() + 2.0 * na * ns + na + ns;
}

/// a^dag a^dag a a + s^dag s^dag s s - a^dag a^dag s s - s^dag s^dag a a.
inline Eigen::MatrixXd pairing_prime_matrix(const U2Rep& rep) {
  const Eigen::MatrixXd pr = u2::pair_raise(rep);
  Eigen::MatrixXd m = -(pr + pr.transpose());
  for (std::size_t n = 0; n <= rep.N; ++n) {
    const double na = static_cast<double>(n);
    const double ns = static_cast<double>(rep.N - n);
    m(n, n) = na * (na - 1.0) + ns * (ns - 1.0);
  }
  return m;
}

struct So2Label {
  std::int64_t sigma = 0;
  [[nodiscard]] HalfInteger m() const { return HalfInteger::from_twice(sigma); }
  [[nodiscard]] std::int64_t v(std::size_t N) const {
    return (static_cast<std::int64_t>(N) - std::abs(sigma)) / 2;
  }
  [[nodiscard]] int pi_prime() const { return sigma >= 0 ? +1 : -1; }
};

struct CasimirLevel {
  So2Label label;
  std::int64_t v = 0;
  int pi_prime = +1;
  double value = 0.0;
};

/// Closed form N^2 - 4 N v (1 - v / N).
inline double casimir_closed_form(std::size_t N, std::int64_t v) {
  const double n = static_cast<double>(N);
  const double vv = static_cast<double>(v);
  return n * n - 4.0 * n * vv * (1.0 - vv / n);
}

/// so(2) labels from diagonalising the generator; each level's Casimir value
/// is the expectation of the boson-form C2 in that eigenvector. Ordered by
/// sigma descending.
inline std::vector<CasimirLevel> casimir_spectrum(const U2Rep& rep) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(so2_generator(rep));
  if (es.info() != Eigen::Success) throw EigenSolveError("casimir_spectrum: so(2) solve failed");
  const Eigen::MatrixXd c2 = casimir_matrix(rep);
  std::vector<CasimirLevel> out;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    const Eigen::VectorXd vec = es.eigenvectors().col(i);
    CasimirLevel lvl;
    lvl.label.sigma = std::llround(es.eigenvalues()[i]);
    lvl.v = lvl.label.v(rep.N);
    lvl.pi_prime = lvl.label.pi_prime();
    lvl.value = vec.dot(c2 * vec);
    out.push_back(lvl);
  }
  return out;
}

struct PairingPrimeLevel {
  std::int64_t v = 0;
  double value = 0.0;
};

/// Spectrum of P2' computed from its boson form and, independently, as
/// N^2 - C2; the two must agree. Ascending; consecutive pairs share v and the
/// sigma = 0 state (even N) is the unpaired top level.
inline std::vector<PairingPrimeLevel> pairing_prime_spectrum(const U2Rep& rep,
                                                             double agree_tol = 1e-9) {
  const double n2 = static_cast<double>(rep.N) * static_cast<double>(rep.N);
  const Eigen::MatrixXd via_casimir =
      n2 * Eigen::MatrixXd::Identity(rep.dim(), rep.dim()) - casimir_matrix(rep);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> direct(pairing_prime_matrix(rep),
                                                        Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> other(via_casimir, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd a = direct.eigenvalues();
  const Eigen::VectorXd b = other.eigenvalues();
  if ((a - b).cwiseAbs().maxCoeff() > agree_tol * std::max(1.0, n2))
    throw std::logic_error("pairing_prime_spectrum: boson form and N^2 - C2 disagree");
  std::vector<PairingPrimeLevel> out;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.push_back({static_cast<std::int64_t>(i / 2), a[i]});
  return out;
}

// ---------------------------------------------------------------------------
// Representation doubling of -P2 on the truncated Fock space.

struct ParityBranch {
  int parity = +1;
  HalfInteger j;
  struct Entry {
    std::int64_t v = 0;
    HalfInteger m;
    int pi_prime = +1;  // sign of m; +1 for m = 0
    double energy = 0.0;
  };
  std::vector<Entry> levels;  // ascending energy, v = 0, 1, ...
};

struct RepClassification {
  std::size_t N = 0;
  ParityBranch even;
  ParityBranch odd;
};

/// j of each parity branch for truncation N: N/4 and N/4 - 1/2 for even N,
/// (N - 1)/4 for both parities when N is odd.
inline std::pair<HalfInteger, HalfInteger> doubled_rep_j(std::size_t N) {
  const auto n = static_cast<std::int64_t>(N);
  if (N % 2 == 0) return {HalfInteger::from_twice(n / 2), HalfInteger::from_twice(n / 2 - 1)};
  return {HalfInteger::from_twice((n - 1) / 2), HalfInteger::from_twice((n - 1) / 2)};
}

/// Diagonalises -(a^dag^2 + a^2) on |0>..|N> by parity; level v of a branch
/// gets m = j - v. The asymptotic law E = -2m is not reached at moderate N
/// and is not enforced.
inline RepClassification classify_pairing_sp2(std::size_t n_max) {
  const auto spectra = sector_spectra(-1.0 * pairing_op(2), FockSpace{n_max}, 2);
  const auto [j_even, j_odd] = doubled_rep_j(n_max);
  RepClassification out;
  out.N = n_max;
  auto fill = [](ParityBranch& br, int parity, HalfInteger j, const std::vector<double>& ev) {
    br.parity = parity;
    br.j = j;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      ParityBranch::Entry e;
      e.v = static_cast<std::int64_t>(i);
      e.m = j - HalfInteger::from_int(e.v);
      e.pi_prime = e.m.twice() >= 0 ? +1 : -1;
      e.energy = ev[i];
      br.levels.push_back(e);
    }
  };
  fill(out.even, +1, j_even, spectra[0].eigenvalues);
  if (spectra.size() > 1) fill(out.odd, -1, j_odd, spectra[1].eigenvalues);
  return out;
}

// ---------------------------------------------------------------------------
// Contraction u(2) -> h(2).

/// -eta n + n(n-1) - eps2 (a^dag a^dag s s + s^dag s^dag a a) with
/// eps2 = xi / N, as a band matrix on |[N], n>.
inline BandedSymMatrix u2_hamiltonian(const HamiltonianSpec& spec, std::size_t N) {
  for (const auto& [kind, value] : spec.couplings)
    if (kind != Perturbation::P2 && value != 0.0)
      throw std::invalid_argument("u2_hamiltonian: only the P2 coupling has a u(2) form here");
  if (spec.higher_order) throw std::invalid_argument("u2_hamiltonian: higher-order terms unsupported");
  const double eps2 = spec.coupling(Perturbation::P2) / static_cast<double>(N);
  BandedSymMatrix m(N + 1, 2);
  const double dN = static_cast<double>(N);
  for (std::size_t n = 0; n <= N; ++n) {
    const double x = static_cast<double>(n);
    m.diag(0)[n] = -spec.eta * x + x * (x - 1.0);
  }
  if (N >= 2)
    for (std::size_t n = 0; n + 2 <= N; ++n) {
      const double x = static_cast<double>(n);
      m.diag(2)[n] = -eps2 * std::sqrt((x + 1.0) * (x + 2.0)) * std::sqrt((dN - x) * (dN - x - 1.0));
    }
  return m;
}

namespace detail {

inline std::vector<double> lowest_excitations(const BandedSymMatrix& m, std::size_t count) {
  const auto dec = split(m, 2);
  std::vector<double> all;
  for (const auto& s : dec.sectors) {
    const auto r = eigen(s.block);
    all.insert(all.end(), r.eigenvalues.begin(), r.eigenvalues.end());
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(count, all.size()));
  const double g = all.empty() ? 0.0 : all.front();
  for (double& e : all) e -= g;
  return all;
}

}  // namespace detail

/// Largest difference between the lowest n_levels excitation energies of the
/// u(2) Hamiltonian and of the Fock-space Hamiltonian truncated at the same N.
inline double contraction_check(const HamiltonianSpec& spec, std::size_t N, std::size_t n_levels) {
  const auto u2_levels = detail::lowest_excitations(u2_hamiltonian(spec, N), n_levels);
  const auto fock_levels =
      detail::lowest_excitations(assemble(standard_hamiltonian(spec), FockSpace{N}), n_levels);
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(u2_levels.size(), fock_levels.size()); ++i)
    worst = std::max(worst, std::abs(u2_levels[i] - fock_levels[i]));
  return worst;
}

}  // namespace kerrsym
