#include "hghz/fock.hpp"
#include "hghz/permanent.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hghz;

TEST(Permanent, IdentityIsOne) {
  EXPECT_NEAR(std::abs(permanent(CMatrix::Identity(3, 3)) - cplx{1.0}), 0.0, 1e-15);
}

TEST(Permanent, EmptyMatrixIsOne) { EXPECT_EQ(permanent(CMatrix(0, 0)), cplx{1.0}); }

TEST(Permanent, TwoByTwoIsAdPlusBc) {
  const double s = 1 / std::sqrt(2.0);
  CMatrix m(2, 2);
  m << s, s, -s, s;
  EXPECT_NEAR(std::abs(permanent(m)), 0.0, 1e-15);
  m << cplx(1, 2), cplx(3, -1), cplx(0.5, 0), cplx(-2, 1);
  EXPECT_NEAR(std::abs(permanent(m) - (m(0, 0) * m(1, 1) + m(0, 1) * m(1, 0))), 0.0, 1e-14);
}

TEST(Permanent, MatchesPermutationSumUpToSix) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 6;
    const CMatrix m = oracle::random_complex(n, n, rng);
    EXPECT_LT(std::abs(permanent(m) - oracle::permanent(m)), 1e-10) << "n=" << n;
  }
}

TEST(Permanent, RandomFiveByFive) {
  std::mt19937_64 rng(5);
  const CMatrix m = oracle::random_complex(5, 5, rng);
  EXPECT_LT(std::abs(permanent(m) - oracle::permanent(m)), 1e-10);
}

TEST(Permanent, RowScalingIsLinear) {
  std::mt19937_64 rng(7);
  for (int n = 2; n <= 6; ++n) {
    CMatrix m = oracle::random_complex(n, n, rng);
    const cplx base = permanent(m);
    const cplx lambda(0.3, -1.7);
    m.row(n / 2) *= lambda;
    EXPECT_LT(std::abs(permanent(m) - lambda * base), 1e-12 * std::abs(lambda * base));
  }
}

TEST(Permanent, Deterministic) {
  std::mt19937_64 rng(9);
  const CMatrix m = oracle::random_complex(7, 7, rng);
  const cplx a = permanent(m), b = permanent(m);
  EXPECT_EQ(a.real(), b.real());
  EXPECT_EQ(a.imag(), b.imag());
}

TEST(Permanent, RejectsNonSquareAndOversized) {
  try {
    permanent(CMatrix::Zero(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension);
  }
  EXPECT_THROW(permanent(CMatrix::Zero(13, 13)), Error);
}

TEST(ModeLayout, FlattenRoundTrip) {
  const ModeLayout layout(3, 4);
  EXPECT_EQ(layout.size(), 24);
  for (int i = 0; i < layout.size(); ++i) EXPECT_EQ(layout.flatten(layout.unflatten(i)), i);
  EXPECT_EQ(layout.flatten({1, Polarization::v, 2}), (1 * 2 + 1) * 4 + 2);
}

TEST(PureState, RejectsMixedPhotonNumbers) {
  PureState s(2);
  s.add({1, 0}, 1.0);
  EXPECT_THROW(s.add({1, 1}, 1.0), Error);
}

TEST(PureState, RejectsNonFiniteAmplitude) {
  PureState s(1);
  EXPECT_THROW(s.add({1}, cplx(std::nan(""), 0)), Error);
}

TEST(Evolve, IdentityKeepsState) {
  PureState s = PureState::basis({1, 0, 0});
  const PureState out = evolve(s, CMatrix::Identity(3, 3));
  EXPECT_NEAR(std::abs(out.amplitude({1, 0, 0}) - cplx{1.0}), 0.0, 1e-15);
}

TEST(Evolve, HongOuMandelBunching) {
  const double s = 1 / std::sqrt(2.0);
  CMatrix bs(2, 2);
  bs << s, s, s, -s;
  const PureState out = evolve(PureState::basis({1, 1}), bs);
  EXPECT_LT(std::abs(out.amplitude({1, 1})), 1e-15);
  EXPECT_NEAR(std::norm(out.amplitude({2, 0})), 0.5, 1e-14);
}

TEST(Evolve, NormPreservedForRandomUnitaries) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix u = oracle::random_unitary(6, rng);
    const PureState out = evolve(PureState::basis({1, 1, 0, 2, 0, 0}), u);
    EXPECT_NEAR(out.norm(), 1.0, 1e-9);
  }
}

TEST(Evolve, RejectsNonUnitaryAndWrongSize) {
  CMatrix u = CMatrix::Identity(2, 2);
  u(0, 1) = 0.1;
  try {
    evolve(PureState::basis({1, 0}), u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
  }
  EXPECT_THROW(evolve(PureState::basis({1, 0}), CMatrix::Identity(3, 3)), Error);
}

TEST(InnerProduct, OrthogonalAndSelf) {
  const PureState a = PureState::basis({1, 0}), b = PureState::basis({0, 1});
  EXPECT_EQ(inner_product(a, b), cplx{});
  EXPECT_EQ(inner_product(a, a), cplx{1.0});
}

TEST(CreatePhotons, TwoPhotonsSameModeAreNormalized) {
  const ModeLayout layout(1, 1);
  PhotonSpec p{CVector::Zero(2), CVector::Ones(1)};
  p.external(0) = 1;
  const PureState s = create_photons(layout, {p, p});
  EXPECT_NEAR(std::abs(s.amplitude({2, 0}) - cplx{1.0}), 0.0, 1e-14);
}

namespace {

DensityOperator qubit_register(const CVector& amps, int qubits) {
  // qubit k is a photon in spatial mode k, |0> = h, |1> = v
  PureState s(2 * qubits);
  for (int i = 0; i < amps.size(); ++i) {
    if (amps(i) == cplx{}) continue;
    Occupation occ(2 * qubits, 0);
    for (int k = 0; k < qubits; ++k) occ[2 * k + ((i >> (qubits - 1 - k)) & 1)] = 1;
    s.add(occ, amps(i));
  }
  return DensityOperator::from_pure(s.normalize());
}

}  // namespace

TEST(PartialTrace, ProductStateLeavesFactor) {
  CVector a(4);
  a << 1, 1, 0, 0;  // |0>(|0>+|1>)
  const auto rho = partial_trace(qubit_register(a, 2), {2, 3});
  ASSERT_EQ(rho.basis.size(), 2u);
  EXPECT_LT((rho.matrix - CMatrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PartialTrace, BellPairIsMaximallyMixed) {
  CVector a(4);
  a << 1, 0, 0, 1;
  const auto rho = partial_trace(qubit_register(a, 2), {2, 3});
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix);
  EXPECT_NEAR(es.eigenvalues()(0), 0.5, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(1), 0.5, 1e-14);
}

TEST(PartialTrace, GhzLosesCoherence) {
  CVector a = CVector::Zero(8);
  a(0) = a(7) = 1;
  const auto rho = partial_trace(qubit_register(a, 3), {2, 3, 4, 5});
  // remaining two qubits: basis ordered lexicographically over modes 2..5
  ASSERT_EQ(rho.basis.size(), 2u);
  rho.validate();
  EXPECT_NEAR(rho.matrix(0, 0).real(), 0.5, 1e-14);
  EXPECT_NEAR(rho.matrix(1, 1).real(), 0.5, 1e-14);
  EXPECT_LT(std::abs(rho.matrix(0, 1)), 1e-15);
  // the same state embedded in the full two-qubit computational basis
  CMatrix full = CMatrix::Zero(4, 4);
  for (std::size_t i = 0; i < rho.basis.size(); ++i) {
    const int idx = 2 * rho.basis[i][1] + rho.basis[i][3];
    full(idx, idx) = rho.matrix(i, i);
  }
  EXPECT_NEAR(full(0, 0).real(), 0.5, 1e-14);
  EXPECT_NEAR(full(3, 3).real(), 0.5, 1e-14);
  EXPECT_NEAR(full(1, 1).real() + full(2, 2).real(), 0.0, 1e-14);
}

TEST(PartialTrace, PreservesTraceAndPositivity) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const CVector a = oracle::random_complex(8, 1, rng);
    const auto rho = partial_trace(qubit_register(a, 3), {0, 1, 4, 5});
    EXPECT_NEAR(std::abs(rho.trace() - cplx{1.0}), 0.0, 1e-10);
    EXPECT_GT(min_eigenvalue(rho.matrix), -1e-9);
    EXPECT_LT(hermiticity_defect(rho.matrix), 1e-12);
  }
}

TEST(PartialTrace, RejectsEmptyKeepSet) {
  CVector a(4);
  a << 1, 0, 0, 1;
  try {
    partial_trace(qubit_register(a, 2), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::argument);
  }
}
