#include "hghz/source.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hghz;

namespace {

// Reconstructs G = sqrt(I) from the returned vectors.
RMatrix overlaps(const CMatrix& v) { return (v.conjugate() * v.transpose()).real(); }

Circuit six_inputs() {
  Circuit c;
  for (int m = 0; m < 6; ++m) {
    c.spatial_modes.push_back("i" + std::to_string(m + 1));
    c.inputs.push_back({m, true, InputPolarization::h});
  }
  return c;
}

}  // namespace

TEST(InternalVectors, AllOnesCollapsesToOneLabel) {
  const CMatrix v = internal_vectors(RMatrix::Ones(6, 6));
  EXPECT_EQ(v.cols(), 1);
  EXPECT_LT((overlaps(v) - RMatrix::Ones(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InternalVectors, IdentityGivesOrthonormalSet) {
  const CMatrix v = internal_vectors(RMatrix::Identity(6, 6));
  EXPECT_EQ(v.cols(), 6);
  EXPECT_LT((overlaps(v) - RMatrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(InternalVectors, UniformOverlapReconstructsGram) {
  auto p = SourcePhysicsParams::uniform(6, 0.923);
  const CMatrix v = internal_vectors(p.indistinguishability);
  const RMatrix g = p.indistinguishability.cwiseSqrt();
  EXPECT_LT((overlaps(v) - g).cwiseAbs().maxCoeff(), 1e-8);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(v.row(i).norm(), 1.0, 1e-12);
  // Cholesky factor check: G = L L^T with L lower triangular
  const RMatrix l = v.real();
  EXPECT_LT((l * l.transpose() - g).cwiseAbs().maxCoeff(), 1e-8);
  for (int i = 0; i < 6; ++i)
    for (int k = i + 1; k < v.cols(); ++k) EXPECT_EQ(l(i, k), 0.0);
}

TEST(InternalVectors, RandomRealizableMatrices) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    RMatrix x(6, 4);
    for (int i = 0; i < 6; ++i)
      for (int k = 0; k < 4; ++k) x(i, k) = std::abs(g(rng));
    for (int i = 0; i < 6; ++i) x.row(i).normalize();
    const RMatrix gram = x * x.transpose();
    RMatrix indist = gram.cwiseProduct(gram).cwiseMin(1.0);
    indist.diagonal().setOnes();
    const CMatrix v = internal_vectors(indist);
    EXPECT_LE(v.cols(), 4);
    EXPECT_LT((overlaps(v) - gram).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(InternalVectors, NonPsdGramIsModelError) {
  RMatrix m = RMatrix::Identity(3, 3);
  m(0, 1) = m(1, 0) = 1.0;
  m(0, 2) = m(2, 0) = 1.0;
  m(1, 2) = m(2, 1) = 0.0;
  try {
    internal_vectors(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::model);
    EXPECT_NE(std::string(e.what()).find("adjust I"), std::string::npos);
  }
}

TEST(SourceParams, ValidationRejectsBadInputs) {
  auto p = SourcePhysicsParams::uniform(3, 0.9);
  p.indistinguishability(0, 1) = 0.5;
  EXPECT_THROW(p.validate(), Error);
  p = SourcePhysicsParams::uniform(3, 0.9);
  p.indistinguishability(1, 1) = 0.9;
  EXPECT_THROW(p.validate(), Error);
  p = SourcePhysicsParams::uniform(3, 0.9, 1.5);
  EXPECT_THROW(p.validate(), Error);
  p = SourcePhysicsParams::uniform(3, 0.9);
  p.channel_efficiency = {1, 1};
  EXPECT_THROW(p.validate(), Error);
}

TEST(InputEnsemble, IdealSourcesGiveOneBranch) {
  const auto ens = input_ensemble(SourcePhysicsParams::ideal(6), six_inputs());
  ASSERT_EQ(ens.branches.size(), 1u);
  EXPECT_EQ(ens.branches[0].probability, 1.0);
  EXPECT_EQ(ens.branches[0].photon_number(), 6);
  EXPECT_EQ(ens.internal_dimension, 1);
  EXPECT_LT((ens.branches[0].gram() - CMatrix::Ones(6, 6)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(InputEnsemble, OneLossyChannel) {
  auto p = SourcePhysicsParams::ideal(6);
  p.channel_efficiency[2] = 0.5;
  const auto ens = input_ensemble(p, six_inputs());
  ASSERT_EQ(ens.branches.size(), 2u);
  EXPECT_EQ(ens.branches[0].probability, 0.5);
  EXPECT_EQ(ens.branches[1].probability, 0.5);
  EXPECT_EQ(std::abs(ens.branches[0].photon_number() - ens.branches[1].photon_number()), 1);
}

TEST(InputEnsemble, ImpurityBranchProbabilities) {
  const double p2 = 0.019;
  const auto ens = input_ensemble(SourcePhysicsParams::uniform(6, 1.0, p2), six_inputs());
  double seven = 0, seven_or_more = 0;
  for (const auto& b : ens.branches) {
    if (b.photon_number() == 7) seven += b.probability;
    if (b.photon_number() >= 7) seven_or_more += b.probability;
  }
  // binomial oracle over the six channels
  EXPECT_NEAR(seven_or_more, 1 - std::pow(1 - p2, 6), 1e-12);
  EXPECT_NEAR(seven_or_more, 0.109, 5e-4);
  EXPECT_NEAR(seven, 6 * p2 * std::pow(1 - p2, 5), 1e-12);
}

TEST(InputEnsemble, ExtraPhotonsAreOrthogonalToEverything) {
  const auto ens = input_ensemble(SourcePhysicsParams::uniform(3, 0.9, 0.1), [] {
    Circuit c;
    c.spatial_modes = {"a", "b", "c"};
    for (int m = 0; m < 3; ++m) c.inputs.push_back({m, true, InputPolarization::h});
    return c;
  }());
  for (const auto& b : ens.branches)
    for (int i = 0; i < b.photon_number(); ++i)
      for (int j = 0; j < b.photon_number(); ++j)
        if (i != j && (b.photons[i].extra || b.photons[j].extra))
          EXPECT_EQ(std::abs(b.photons[i].internal.dot(b.photons[j].internal)), 0.0);
}

TEST(InputEnsemble, ProbabilitiesSumToOneForRandomParameters) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = SourcePhysicsParams::uniform(4, u(rng), 0.3 * u(rng));
    for (double& e : p.channel_efficiency) e = u(rng);
    Circuit c;
    for (int m = 0; m < 4; ++m) {
      c.spatial_modes.push_back("m" + std::to_string(m));
      c.inputs.push_back({m, true, InputPolarization::h});
    }
    EXPECT_NEAR(input_ensemble(p, c).total_probability(), 1.0, 1e-10);
  }
}

TEST(InputEnsemble, ChannelCountMustMatchCircuit) {
  EXPECT_THROW(input_ensemble(SourcePhysicsParams::ideal(5), six_inputs()), Error);
}

TEST(Hom, CoincidenceEndpoints) {
  EXPECT_NEAR(hom_coincidence(SourcePhysicsParams::uniform(2, 1.0), 0, 1), 0.0, 1e-12);
  EXPECT_NEAR(hom_coincidence(SourcePhysicsParams::uniform(2, 0.0), 0, 1), 0.5, 1e-12);
}

TEST(Hom, MeasuredIndistinguishability) {
  const auto p = SourcePhysicsParams::uniform(2, 0.941);
  EXPECT_NEAR(hom_coincidence(p, 0, 1), 0.0295, 1e-6);
  EXPECT_NEAR(hom_visibility(p, 0, 1), 0.941, 1e-12);
}

TEST(Hom, SimulationMatchesClosedFormForRandomPairs) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const double indist = u(rng);
    const auto p = SourcePhysicsParams::uniform(3, indist);
    EXPECT_NEAR(hom_coincidence(p, 0, 2), (1 - indist) / 2, 1e-6);
  }
}

TEST(Hom, RejectsSamePhoton) { EXPECT_THROW(hom_coincidence(SourcePhysicsParams::ideal(2), 1, 1), Error); }

TEST(G2, ZeroImpurity) { EXPECT_EQ(g2_hbt(SourcePhysicsParams::ideal(6)), 0.0); }

TEST(G2, InversionOfMeasuredValue) {
  const double p2 = p2_from_g2(0.019);
  // exact inverse is 0.009685; quoted to two significant figures as 0.0096
  EXPECT_NEAR(p2, 0.0096, 1e-4);
  EXPECT_NEAR(g2_from_p2(p2), 0.019, 1e-12);
}

TEST(G2, StrictlyIncreasingOnHalfUnitInterval) {
  double prev = -1;
  for (int i = 0; i <= 500; ++i) {
    const double g = g2_from_p2(i * 0.001);
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(G2, OutOfRangeIsModelError) { EXPECT_THROW(p2_from_g2(0.6), Error); }
