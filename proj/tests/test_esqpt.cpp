#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "kerrsym/classify.hpp"
#include "kerrsym/esqpt.hpp"

using namespace kerrsym;

namespace {

GapCurve synthetic(std::function<double(double)> g, double lo, double hi, double step) {
  GapCurve c;
  c.v = 1;
  for (double x : linspace_step(lo, hi, step)) {
    c.xi.push_back(x);
    c.gap.push_back(g(x));
    c.e_even.push_back(100.0);
    c.e_odd.push_back(100.0 + g(x));
  }
  return c;
}

SpectrumGrid squeeze_sweep(double hi, double step, std::size_t max_levels) {
  SweepPlan p;
  p.varying = Parameter::Xi2;
  p.grid = linspace_step(0.0, hi, step);
  p.n_max = 800;
  p.n_probe = 900;
  p.modulus = 2;
  p.max_levels = max_levels;
  return run_sweep(p);
}

// xi in [0, 40] at step 0.05, n_max 800; shared by the tests below
const std::vector<GapCurve>& paper_curves() {
  static const std::vector<GapCurve> curves = gap_curves(squeeze_sweep(40.0, 0.05, 14), 12);
  return curves;
}

std::vector<double> sequence(std::optional<CriticalPointEstimate> (*f)(const GapCurve&), std::size_t lo,
                             std::size_t hi) {
  std::vector<double> out;
  for (std::size_t v = lo; v <= hi; ++v) {
    const auto e = f(paper_curves()[v]);
    out.push_back(e ? e->xi_c : std::nan(""));
  }
  return out;
}

std::optional<CriticalPointEstimate> bound(const GapCurve& c) { return xi_c_difference_bound(c); }

}  // namespace

// ---- estimators on analytic curves --------------------------------------

TEST(MaxRate, GaussianInflection) {
  // -g' = 2(x-5)exp(-(x-5)^2) peaks at x = 5 + 1/sqrt(2)
  const auto c = synthetic([](double x) { return x < 5 ? 1.0 : std::exp(-(x - 5) * (x - 5)); }, 0, 12, 0.01);
  const auto e = xi_c_max_rate(c);
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->xi_c, 5.0 + 1.0 / std::sqrt(2.0), 1e-3);
  EXPECT_EQ(e->method, CriticalMethod::MaxRate);
}

TEST(MaxRate, FlatCurveHasNoEstimate) {
  EXPECT_FALSE(xi_c_max_rate(synthetic([](double) { return 2.0; }, 0, 5, 0.1)));
  EXPECT_FALSE(xi_c_max_rate(synthetic([](double x) { return 5.0 - x; }, 0, 5, 0.1)));
}

TEST(MaxRate, InvariantUnderCommonShift) {
  auto c = synthetic([](double x) { return 4.0 / (1.0 + std::exp(2 * (x - 3))); }, 0, 8, 0.05);
  const auto a = xi_c_max_rate(c);
  for (std::size_t k = 0; k < c.xi.size(); ++k) {
    c.e_odd[k] += 37.5;
    c.e_even[k] += 37.5;
  }
  const auto b = xi_c_max_rate(c);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->xi_c, b->xi_c);
  EXPECT_DOUBLE_EQ(b->E_c, a->E_c + 37.5);
}

TEST(LinearExtrapolation, ExactOnLine) {
  const auto c = synthetic([](double x) { return 6.0 - 1.5 * x; }, 0, 4.5, 0.05);
  const auto e = xi_c_linear_extrapolation(c);
  ASSERT_TRUE(e);
  EXPECT_NEAR(e->xi_c, 4.0, 1e-12);
}

TEST(LinearExtrapolation, RootOutsideRangeHasNoEstimate) {
  EXPECT_FALSE(xi_c_linear_extrapolation(synthetic([](double x) { return 6.0 - 0.1 * x; }, 0, 3.9, 0.05)));
}

TEST(DifferenceBound, ZeroThresholdNeverMet) {
  const auto c = synthetic([](double x) { return std::exp(-x); }, 0, 20, 0.1);
  EXPECT_FALSE(xi_c_difference_bound(c, 0.0, 0.0));
  const auto e = xi_c_difference_bound(c);
  ASSERT_TRUE(e);
  // exp(-x) = 0.005 * (100 + exp(-x) / 2)
  EXPECT_NEAR(e->xi_c, -std::log(0.5 / (1 - 0.0025)), 2e-3);
}

TEST(DifferenceBound, RequiresPersistence) {
  // dips below the bound near x = 2, recovers, then merges for good after x = 6
  const auto c = synthetic(
      [](double x) { return x < 6 ? 0.1 + std::abs(x - 2) : 0.1 * std::exp(-(x - 6)); }, 0, 10, 0.1);
  const auto e = xi_c_difference_bound(c);
  ASSERT_TRUE(e);
  EXPECT_GT(e->xi_c, 5.0);
}

TEST(Separatrix, NeedsThreeEstimates) {
  std::vector<CriticalPointEstimate> two(2);
  EXPECT_THROW(separatrix_from_estimates(two), std::invalid_argument);
  EXPECT_THROW(separatrix_from_estimates({}), std::invalid_argument);
  const std::vector<CriticalPointEstimate> three = {
      {1, CriticalMethod::MaxRate, 2.0, 4.4}, {2, CriticalMethod::MaxRate, 4.0, 16.0}, {3, CriticalMethod::MaxRate, 5.0, 20.0}};
  const auto s = separatrix_from_estimates(three);
  EXPECT_NEAR(s[0].rel_dev, 0.1, 1e-12);
  EXPECT_EQ(s[1].rel_dev, 0.0);
  EXPECT_NEAR(s[2].rel_dev, -0.2, 1e-12);
}

TEST(SeparatrixModel, Forms) {
  EXPECT_EQ((SeparatrixModel{SeparatrixKind::Kerr})(4, 9), 6.0);
  EXPECT_EQ((SeparatrixModel{SeparatrixKind::Squeeze})(4, 3), 9.0);
  EXPECT_EQ((SeparatrixModel{SeparatrixKind::CombinedEs})(4, 1), 10.0);
  EXPECT_EQ((SeparatrixModel{SeparatrixKind::CombinedEsPrime})(4, 1), 4.0);
  EXPECT_TRUE((SeparatrixModel{SeparatrixKind::Kerr}).exact());
  EXPECT_FALSE((SeparatrixModel{SeparatrixKind::Squeeze}).exact());
}

// ---- gap curves ----------------------------------------------------------

TEST(GapCurves, RejectsWrongGrids) {
  SweepPlan p;
  p.varying = Parameter::Eta;
  p.grid = {0.0, 1.0};
  p.fixed.set(Perturbation::P2, 1.0);
  p.n_max = 30;
  p.n_probe = 40;
  EXPECT_THROW(gap_curves(run_sweep(p), 1), std::invalid_argument);
  p.varying = Parameter::Xi2;
  p.max_levels = 2;
  EXPECT_THROW(gap_curves(run_sweep(p), 2), std::invalid_argument);
}

TEST(GapCurves, RefusesUnconvergedPairs) {
  SweepPlan p;
  p.varying = Parameter::Xi2;
  p.grid = {0.0, 10.0};
  p.n_max = 40;
  p.n_probe = 60;
  p.max_levels = 12;
  EXPECT_THROW(gap_curves(run_sweep(p), 10), UnconvergedLevels);
}

TEST(GapCurves, KerrStart) {
  const auto& c = paper_curves();
  EXPECT_EQ(c[1].gap[0], 4.0);  // E(3) - E(2) = 6 - 2
  EXPECT_EQ(c[0].gap[0], 0.0);  // E(1) - E(0) = 0
}

TEST(GapCurves, GroundPairMergesAndGapsFallAfterMaximum) {
  const auto& curves = paper_curves();
  EXPECT_LT(std::abs(curves[0].gap.back()), 1e-6);
  for (const auto& c : curves) {
    const auto top = static_cast<std::size_t>(std::max_element(c.gap.begin(), c.gap.end()) - c.gap.begin());
    for (std::size_t k = top + 1; k < c.gap.size(); ++k)
      EXPECT_LE(c.gap[k], c.gap[k - 1] + 1e-9) << "v=" << c.v << " xi=" << c.xi[k];
    for (double g : c.gap) EXPECT_GE(g, -kDefaultTolDeg);
  }
}

// ---- critical couplings on the squeezing sweep ----------------------------

TEST(CriticalCoupling, MaxRateSlopeNearPi) {
  const auto xc = sequence(xi_c_max_rate, 1, 12);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xc.size(); ++i) {
    const double v = double(i + 1);
    ASSERT_FALSE(std::isnan(xc[i])) << "v=" << v;
    sx += v, sy += xc[i], sxx += v * v, sxy += v * xc[i];
  }
  const double n = double(xc.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GE(slope, 3.0);
  EXPECT_LE(slope, 3.25);
  EXPECT_NEAR(slope, 0.775 * 4, 0.05);
}

TEST(CriticalCoupling, MaxRateStableUnderStepHalving) {
  const auto fine = gap_curves(squeeze_sweep(8.0, 0.025, 3), 2);
  const auto coarse = gap_curves(squeeze_sweep(8.0, 0.05, 3), 2);
  const auto a = xi_c_max_rate(fine[1]), b = xi_c_max_rate(coarse[1]);
  ASSERT_TRUE(a && b);
  EXPECT_LT(std::abs(a->xi_c - b->xi_c) / a->xi_c, 0.02);
  // the same grid points as the shared sweep
  EXPECT_NEAR(b->xi_c, xi_c_max_rate(paper_curves()[1])->xi_c, 1e-12);
}

TEST(CriticalCoupling, SequencesStrictlyIncrease) {
  for (auto f : {xi_c_max_rate, xi_c_linear_extrapolation, bound}) {
    const auto xc = sequence(f, 1, 11);
    for (std::size_t i = 1; i < xc.size(); ++i) EXPECT_GT(xc[i], xc[i - 1]) << "v=" << i + 1;
  }
}

TEST(CriticalCoupling, GroundPairMergesFirst) {
  const auto b0 = xi_c_difference_bound(paper_curves()[0]);
  const auto b1 = xi_c_difference_bound(paper_curves()[1]);
  ASSERT_TRUE(b0 && b1);
  EXPECT_LT(b0->xi_c, b1->xi_c);
  EXPECT_LT(b0->xi_c, 0.1);
  EXPECT_FALSE(xi_c_max_rate(paper_curves()[0]));  // gap is rounding noise
}

// Pairwise agreement holds from v = 4; below that the max-rate point sits
// 23-32% under the other two.
TEST(CriticalCoupling, EstimatorsAgreeWithinQuarter) {
  const auto mr = sequence(xi_c_max_rate, 4, 11);
  const auto li = sequence(xi_c_linear_extrapolation, 4, 11);
  const auto bd = sequence(bound, 4, 11);
  auto close = [](double a, double b) { return std::abs(a - b) / std::min(a, b) < 0.25; };
  for (std::size_t i = 0; i < mr.size(); ++i) {
    EXPECT_TRUE(close(mr[i], li[i])) << "v=" << i + 4;
    EXPECT_TRUE(close(mr[i], bd[i])) << "v=" << i + 4;
    EXPECT_TRUE(close(li[i], bd[i])) << "v=" << i + 4;
  }
}

TEST(CriticalCoupling, LinearBestAtSmallV) {
  const auto& c = paper_curves()[4];
  const auto mr = xi_c_max_rate(c), li = xi_c_linear_extrapolation(c), bd = xi_c_difference_bound(c);
  ASSERT_TRUE(mr && li && bd);
  EXPECT_LT(std::abs(li->xi_c - bd->xi_c), std::abs(mr->xi_c - bd->xi_c));
  // lin lies between the other two only up to v = 3
  for (std::size_t v = 1; v <= 3; ++v) {
    const auto m = xi_c_max_rate(paper_curves()[v]), l = xi_c_linear_extrapolation(paper_curves()[v]),
               b = xi_c_difference_bound(paper_curves()[v]);
    ASSERT_TRUE(m && l && b);
    EXPECT_GT(l->xi_c, m->xi_c) << "v=" << v;
    EXPECT_LE(l->xi_c, b->xi_c) << "v=" << v;
  }
}

TEST(CriticalCoupling, MaxRatePointsHugSeparatrix) {
  std::vector<CriticalPointEstimate> est;
  for (std::size_t v = 4; v <= 12; ++v) est.push_back(*xi_c_max_rate(paper_curves()[v]));
  for (const auto& p : separatrix_from_estimates(est)) {
    EXPECT_LT(std::abs(p.rel_dev), 0.15) << "v=" << p.v;
    EXPECT_GE(p.E_c, 0.0);
  }
}

TEST(LevelModels, FiniteNBeatsHarmonicRightOfSeparatrix) {
  const auto& c = paper_curves();
  const std::size_t last = c.front().xi.size() - 1;  // xi = 40
  const auto cmp = compare_level_models(c, last, 10, 12, 800);
  EXPECT_LT(cmp.rms_finite_n, cmp.rms_harmonic);
  EXPECT_THROW(compare_level_models(c, last, 20, 30, 800), std::invalid_argument);
}

// ---- singlet/doublet boundary of the combined Hamiltonian ----------------

TEST(CombinedSeparatrix, EvenEtaBoundaryBracketsEs) {
  const SeparatrixModel es{SeparatrixKind::CombinedEs};
  for (double eta : {6.0, 8.0, 10.0, 12.0}) {
    HamiltonianSpec s;
    s.eta = eta;
    s.set(Perturbation::P2, 1.0);
    const auto sp = converged_spectrum(s, 800, 900);
    std::vector<double> e;
    for (std::size_t i = 0; i < std::min<std::size_t>(sp.n_converged, 40); ++i)
      e.push_back(sp.levels[i].energy - sp.ground_energy);
    const auto groups = degeneracy_groups(std::span<const double>(e));
    std::size_t first_singlet = 0;
    while (first_singlet < groups.size() && groups[first_singlet].multiplicity() == 2) ++first_singlet;
    ASSERT_GT(first_singlet, 0u);
    ASSERT_LT(first_singlet, groups.size());
    EXPECT_LE(groups[first_singlet - 1].energy, es(eta, 1.0)) << "eta=" << eta;
    EXPECT_GE(groups[first_singlet].energy, es(eta, 1.0)) << "eta=" << eta;
  }
}
