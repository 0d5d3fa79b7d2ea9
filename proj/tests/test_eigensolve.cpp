#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "kerrsym/eigensolve.hpp"

using namespace kerrsym;

namespace {

// Number of eigenvalues below x from the signs of the LDL^T pivots of M - xI
// (Sylvester's law of inertia). Independent of any eigensolver.
std::size_t count_below(const Eigen::MatrixXd& m, double x) {
  Eigen::MatrixXd a = m - x * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  const auto n = a.rows();
  std::size_t neg = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    double piv = a(k, k);
    if (piv == 0.0) piv = -1e-300;
    if (piv < 0) ++neg;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / piv;
      if (f == 0.0) continue;
      for (Eigen::Index j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return neg;
}

double bisect_lowest(const Eigen::MatrixXd& m) {
  double lo = -m.cwiseAbs().rowwise().sum().maxCoeff(), hi = -lo;
  while (hi - lo > 1e-13 * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    (count_below(m, mid) >= 1 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

BandedSymMatrix diag_matrix(const std::vector<double>& d) {
  BandedSymMatrix m(d.size(), 0);
  m.diag(0) = d;
  return m;
}

}  // namespace

TEST(Eigen, DiagonalIsSortedDiagonal) {
  const auto r = eigen(diag_matrix({0, -4, -6, -6, -4, 0}));
  EXPECT_EQ(r.eigenvalues, (std::vector<double>{-6, -6, -4, -4, 0, 0}));
}

TEST(Eigen, DiagonalVectorsAreBasisStates) {
  const auto r = eigen(diag_matrix({3, 1, 2}), true);
  ASSERT_TRUE(r.eigenvectors);
  EXPECT_EQ((*r.eigenvectors)(1, 0), 1.0);
  EXPECT_EQ((*r.eigenvectors)(2, 1), 1.0);
  EXPECT_EQ((*r.eigenvectors)(0, 2), 1.0);
}

TEST(Eigen, TwoByTwo) {
  BandedSymMatrix m(2, 1);
  m.diag(1)[0] = -std::sqrt(2.0);
  const auto r = eigen(m);
  EXPECT_NEAR(r.eigenvalues[0], -std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(r.eigenvalues[1], std::sqrt(2.0), 1e-15);
}

TEST(Eigen, RejectsNonFinite) {
  BandedSymMatrix m(3, 1);
  m.diag(0)[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(eigen(m), EigenSolveError);
  m.diag(0)[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(eigen(m), EigenSolveError);
}

TEST(Eigen, GroundStateMatchesInertiaBisection) {
  HamiltonianSpec s;
  s.eta = 6;
  s.set(Perturbation::P2, 1.0);
  const auto m = assemble(standard_hamiltonian(s), FockSpace{40});
  const double oracle = bisect_lowest(m.to_dense());
  const auto full = eigen(m);
  EXPECT_NEAR(full.eigenvalues.front(), oracle, 1e-10);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& r : sector_spectra(standard_hamiltonian(s), FockSpace{40}, 2))
    lowest = std::min(lowest, r.eigenvalues.front());
  EXPECT_NEAR(lowest, oracle, 1e-10);
}

TEST(Eigen, InertiaCountsAgreeAcrossSpectrum) {
  HamiltonianSpec s;
  s.eta = 3.3;
  s.set(Perturbation::P2, 0.7).set(Perturbation::P4, 0.05);
  const auto m = assemble(standard_hamiltonian(s), FockSpace{30});
  const auto ev = eigen(m).eigenvalues;
  const Eigen::MatrixXd d = m.to_dense();
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
    if (ev[i + 1] - ev[i] < 1e-6) continue;
    EXPECT_EQ(count_below(d, 0.5 * (ev[i] + ev[i + 1])), i + 1);
  }
}

TEST(Eigen, VectorsOrthonormalWithResidualBound) {
  HamiltonianSpec s;
  s.eta = 2.5;
  s.set(Perturbation::P3, 0.4);
  const auto m = assemble(standard_hamiltonian(s), FockSpace{45});
  const auto r = eigen(m, true);
  ASSERT_TRUE(r.eigenvectors);
  const Eigen::MatrixXd& v = *r.eigenvectors;
  const Eigen::MatrixXd gram = v.transpose() * v;
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXd d = m.to_dense();
  for (Eigen::Index c = 0; c < v.cols(); ++c)
    EXPECT_LE((d * v.col(c) - r.eigenvalues[c] * v.col(c)).norm(), r.residual_bound * (1 + 1e-12));
  EXPECT_LE(r.residual_bound, 1e-12 * 45 * m.max_abs() * 7);
}

TEST(Eigen, BackwardStabilityAgainstDenseSolver) {
  HamiltonianSpec s;
  s.eta = 1.0;
  s.set(Perturbation::P2, 2.0);
  for (std::size_t k : {1u, 2u}) {
    const auto m = assemble(standard_hamiltonian(s), FockSpace{120});
    const auto blocks = split(m, k);
    std::vector<double> mine;
    for (const auto& b : blocks.sectors) {
      const auto e = eigen(b.block).eigenvalues;
      mine.insert(mine.end(), e.begin(), e.end());
    }
    std::sort(mine.begin(), mine.end());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.to_dense(), Eigen::EigenvaluesOnly);
    const double norm = m.to_dense().norm();
    for (std::size_t i = 0; i < mine.size(); ++i)
      EXPECT_LE(std::abs(mine[i] - es.eigenvalues()[static_cast<Eigen::Index>(i)]),
                1e-12 * static_cast<double>(m.dim()) * norm);
  }
}

TEST(ConvergedSpectrum, KerrAllConverged) {
  HamiltonianSpec s;
  s.eta = 5;
  const auto c = converged_spectrum(s, 50, 60, 1e-8);
  EXPECT_EQ(c.modulus, kDiagonalModulus);
  EXPECT_EQ(c.n_converged, c.levels.size());
  EXPECT_EQ(c.levels.size(), 51u);
  EXPECT_EQ(c.ground_energy, -9.0);
}

TEST(ConvergedSpectrum, RequiresLargerProbe) {
  EXPECT_THROW(converged_spectrum({}, 50, 50), std::invalid_argument);
}

TEST(ConvergedSpectrum, SqueezedLowLevelsConvergedAtPaperTruncation) {
  HamiltonianSpec s;
  s.set(Perturbation::P2, 10.0);
  const auto c = converged_spectrum(s, 800, 900, 1e-8, {0.0, 625.0});
  ASSERT_GT(c.levels.size(), 20u);
  EXPECT_EQ(c.n_converged, c.levels.size());
  for (const auto& l : c.levels) EXPECT_TRUE(l.converged);
}

TEST(ConvergedSpectrum, SmallTruncationFlagsAgreeWithReference) {
  HamiltonianSpec s;
  s.set(Perturbation::P2, 25.0);
  const auto small = converged_spectrum(s, 100, 120, 1e-8);
  const auto ref = converged_spectrum(s, 800, 900, 1e-8);
  ASSERT_LT(small.n_converged, small.levels.size());
  ASSERT_GT(ref.n_converged, small.n_converged);
  // every level flagged converged matches the large-basis reference
  for (std::size_t i = 0; i < small.n_converged; ++i)
    EXPECT_NEAR(small.levels[i].energy, ref.levels[i].energy,
                2e-8 * std::max(1.0, std::abs(ref.levels[i].energy)));
  // the first flagged level really is off
  const std::size_t k = small.n_converged;
  EXPECT_GT(std::abs(small.levels[k].energy - ref.levels[k].energy),
            1e-8 * std::max(1.0, std::abs(ref.levels[k].energy)));
}

TEST(ConvergedSpectrum, StableUnderGrowingTruncation) {
  HamiltonianSpec s;
  s.eta = 2;
  s.set(Perturbation::P2, 3.0);
  const auto a = converged_spectrum(s, 300, 360, 1e-8);
  const auto b = converged_spectrum(s, 500, 560, 1e-8);
  for (std::size_t i = 0; i < 20; ++i) {
    ASSERT_TRUE(a.levels[i].converged);
    EXPECT_NEAR(a.levels[i].energy, b.levels[i].energy, 1e-8 * std::max(1.0, std::abs(a.levels[i].energy)));
  }
}

TEST(ConvergedSpectrum, WindowFiltersByExcitation) {
  HamiltonianSpec s;
  s.eta = 4;
  const auto c = converged_spectrum(s, 30, 40, 1e-8, {0.5, 6.5});
  ASSERT_EQ(c.levels.size(), 4u);  // 2, 2, 6, 6
  for (const auto& l : c.levels) {
    const double ex = l.energy - c.ground_energy;
    EXPECT_TRUE(ex == 2.0 || ex == 6.0);
  }
}
