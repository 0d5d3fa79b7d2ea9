#pragma once

// Conserved n mod k structure of a Hamiltonian and the split of its matrix
// into independent residue blocks.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrsym/fock_algebra.hpp"

namespace kerrsym {

/// Modulus value meaning "every term is diagonal": each Fock state is its
/// own sector.
inline constexpr std::size_t kDiagonalModulus = 0;

/// Entries with |i - j| not a multiple of the claimed modulus must be
/// exactly zero; assembly is exact, so anything above this is a logic error.
inline constexpr double kSymmetryViolationThreshold = 1e-14;

struct SymmetryViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// gcd of |p - q| over terms with nonzero coefficient. Diagonal-only
/// polynomials give kDiagonalModulus.
inline std::size_t detect_modulus(const OperatorPoly& poly) {
  std::size_t g = 0;
  for (const auto& t : poly.terms())
    if (t.coeff != 0.0) g = std::gcd(g, t.step());
  return g;
}

struct Sector {
  std::size_t residue = 0;
  std::vector<std::size_t> fock_index;  // local -> global
  BandedSymMatrix block;
};

struct SectorDecomposition {
  std::size_t modulus = 1;
  std::vector<Sector> sectors;
};

/// Number of sectors a modulus produces on a space of the given dimension.
inline std::size_t sector_count(std::size_t modulus, std::size_t dim) {
  return modulus == kDiagonalModulus ? dim : modulus;
}

/// Residue of Fock state n under the modulus.
inline std::size_t residue_of(std::size_t n, std::size_t modulus) {
  return modulus == kDiagonalModulus ? n : n % modulus;
}

/// Blocks of a band matrix by n mod k. With kDiagonalModulus the matrix must
/// be diagonal and every state becomes a 1x1 block.
inline SectorDecomposition split(const BandedSymMatrix& m, std::size_t k) {
  const std::size_t dim = m.dim();
  const std::size_t step = k == kDiagonalModulus ? std::max<std::size_t>(dim, 1) : k;
  for (std::size_t d = 1; d <= m.bandwidth(); ++d) {
    if (d % step == 0) continue;
    const auto& dv = m.diag(d);
    for (std::size_t j = 0; j < dv.size(); ++j)
      if (std::abs(dv[j]) > kSymmetryViolationThreshold)
        throw SymmetryViolation("element (" + std::to_string(j + d) + ", " + std::to_string(j) +
                                ") couples different residues mod " + std::to_string(k));
  }

  SectorDecomposition out;
  out.modulus = k;
  const std::size_t count = sector_count(k, dim);
  const std::size_t block_band = (m.bandwidth() + step - 1) / step;
  out.sectors.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    Sector s;
    s.residue = r;
    for (std::size_t n = r; n < dim; n += step) s.fock_index.push_back(n);
    const std::size_t local = s.fock_index.size();
    s.block = BandedSymMatrix(local, block_band);
    for (std::size_t d = 0; d <= s.block.bandwidth(); ++d)
      for (std::size_t j = 0; j + d < local; ++j)
        s.block.diag(d)[j] = m(s.fock_index[j + d], s.fock_index[j]);
    out.sectors.push_back(std::move(s));
  }
  return out;
}

/// Fock parity (+1 / -1) shared by all states of a residue class, or 0 when
/// the modulus mixes parities.
inline int parity_of_residue(std::size_t residue, std::size_t modulus) {
  if (modulus != kDiagonalModulus && modulus % 2 != 0) return 0;
  return residue % 2 == 0 ? +1 : -1;
}

}  // namespace kerrsym
