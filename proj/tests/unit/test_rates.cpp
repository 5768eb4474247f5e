#include "hghz/rates.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace hghz;

TEST(Budget, PaperNumbers) {
  const double direct = 547.0 * std::pow(0.8, 6) * std::pow(0.85, 3) * std::pow(0.85, 6) / 32.0;
  EXPECT_NEAR(expected_rate(RateBudget::paper()), direct, 1e-12);
  EXPECT_NEAR(expected_rate(RateBudget::paper()), 1.038, 0.001);
}

TEST(Budget, UnitFactorsKeepBaseRate) {
  RateBudget b;
  b.base_rate = 123.0;
  b.factors = {{"a", 1.0, 6}, {"b", 1.0, 3}};
  EXPECT_EQ(expected_rate(b), 123.0);
}

TEST(Budget, HalfEfficiencyTwice) {
  RateBudget b;
  b.base_rate = 100.0;
  b.factors = {{"a", 0.5, 2}};
  EXPECT_NEAR(expected_rate(b), 25.0, 1e-12);
}

TEST(Budget, OrderIndependent) {
  auto b = RateBudget::paper();
  const double r = expected_rate(b);
  std::mt19937 rng(1);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(b.factors.begin(), b.factors.end(), rng);
    EXPECT_NEAR(expected_rate(b), r, 1e-15);
  }
}

TEST(Budget, RejectsInvalidEfficiency) {
  auto b = RateBudget::paper();
  b.factors[0].efficiency = 0.0;
  EXPECT_THROW(expected_rate(b), Error);
  b = RateBudget::paper();
  b.success_probability = {3, 2};
  EXPECT_THROW(expected_rate(b), Error);
}

TEST(Demux, ReferenceLayout) {
  const auto t = DemuxTree::reference();
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(t.outputs(), 8);
  int switches = 0;
  for (const auto& s : t.stages) switches += s.switches;
  EXPECT_EQ(switches, 7);
  EXPECT_EQ(t.stages[0].modulation_hz, 40e6);
  EXPECT_EQ(t.stages[2].modulation_hz, 10e6);
}

TEST(Demux, UnitEfficiencyGivesFrameRate) {
  const auto t = DemuxTree::reference();
  for (int n = 1; n <= 8; ++n) EXPECT_EQ(nfold_rate(t, 1.0, n), t.repetition_rate / 8);
}

TEST(Demux, DecreasingInN) {
  const auto t = DemuxTree::reference();
  for (int n = 1; n < 8; ++n) EXPECT_GT(nfold_rate(t, 0.3, n), nfold_rate(t, 0.3, n + 1));
}

TEST(Demux, NOutOfRange) {
  const auto t = DemuxTree::reference();
  for (int n : {0, 9}) {
    try {
      nfold_rate(t, 0.5, n);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::argument);
    }
  }
}

TEST(Demux, RatioFitReproducesAnchorRatio) {
  const auto t = DemuxTree::reference();
  const auto fit = fit_efficiency(t, {{6, 547.0}, {8, 15.7}}, FitMode::ratio);
  EXPECT_NEAR(fit.efficiency, std::sqrt(15.7 / 547.0), 1e-12);
  EXPECT_NEAR(fit.efficiency, 0.169, 5e-4);
  EXPECT_NEAR(fit.predicted[0] / fit.predicted[1], 547.0 / 15.7, 1e-9);
}

TEST(Demux, AbsoluteFitLeavesEightFoldResidual) {
  const auto t = DemuxTree::reference();
  const auto fit = fit_efficiency(t, {{6, 547.0}, {8, 15.7}}, FitMode::absolute);
  EXPECT_NEAR(fit.predicted[0], 547.0, 1e-9);
  EXPECT_NEAR(fit.residuals[0], 0.0, 1e-9);
  EXPECT_NEAR(fit.efficiency, std::pow(547.0 / 1e7, 1.0 / 6), 1e-12);
  EXPECT_LT(fit.residuals[1], 0.0);
}
