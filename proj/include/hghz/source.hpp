#pragma once

// Imperfect single-photon inputs.
//
// * Partial distinguishability: photon j carries an internal state phi_j with
//   |<phi_j|phi_k>|^2 = I_jk. The vectors come from a rank-revealing Cholesky
//   factorization of the Gram matrix G_jk = sqrt(I_jk).
// * Impurity: with probability p2 per trigger a channel emits one extra photon
//   in a fresh internal label, orthogonal to every other photon.
// * Loss: each photon (main or extra) of channel c survives with probability
//   eta_c, independently.
//
// g2(0) convention: truncating the photon-number distribution of one channel
// to {1, 2} with weights proportional to (1, p2), g2(0) = 2 p2 / (1 + p2)^2.

#include "hghz/circuit.hpp"
#include "hghz/error.hpp"
#include "hghz/fock.hpp"
#include "hghz/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace hghz {

struct SourcePhysicsParams {
  RMatrix indistinguishability;             // n x n, symmetric, unit diagonal
  double impurity = 0.0;                    // p2
  std::vector<double> channel_efficiency;   // eta per input channel

  int channels() const { return static_cast<int>(indistinguishability.rows()); }

  static SourcePhysicsParams uniform(int n, double indist, double p2 = 0.0, double eta = 1.0) {
    SourcePhysicsParams p;
    p.indistinguishability = RMatrix::Constant(n, n, indist);
    p.indistinguishability.diagonal().setOnes();
    p.impurity = p2;
    p.channel_efficiency.assign(n, eta);
    return p;
  }

  static SourcePhysicsParams ideal(int n) { return uniform(n, 1.0); }

  void validate() const {
    const auto& m = indistinguishability;
    if (m.rows() != m.cols() || m.rows() == 0)
      fail(ErrorCode::validation, "source: indistinguishability must be a non-empty square matrix");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, i) - 1.0) > 1e-12) fail(ErrorCode::validation, "source: indistinguishability diagonal must be 1");
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (!(m(i, j) >= 0.0 && m(i, j) <= 1.0))
          fail(ErrorCode::validation, "source: indistinguishability entries must lie in [0, 1]");
        if (std::abs(m(i, j) - m(j, i)) > 1e-12)
          fail(ErrorCode::validation, "source: indistinguishability must be symmetric");
      }
    }
    if (!(impurity >= 0.0 && impurity <= 1.0)) fail(ErrorCode::validation, "source: impurity p2 must lie in [0, 1]");
    if (static_cast<Eigen::Index>(channel_efficiency.size()) != m.rows())
      fail(ErrorCode::validation, "source: one input efficiency per channel required");
    for (double e : channel_efficiency)
      if (!(e >= 0.0 && e <= 1.0)) fail(ErrorCode::validation, "source: input efficiency must lie in [0, 1]");
  }
};

/// Unit internal vectors (rows of the result) whose Gram matrix reproduces
/// sqrt(I) entrywise. Columns belonging to zero pivots are dropped, so the
/// column count is the rank of the Gram matrix.
inline CMatrix internal_vectors(const RMatrix& indist, double tol = 1e-10) {
  const Eigen::Index n = indist.rows();
  if (indist.cols() != n || n == 0) fail(ErrorCode::dimension, "internal_vectors: square matrix required");
  const RMatrix g = indist.cwiseMax(0.0).cwiseSqrt();
  RMatrix l = RMatrix::Zero(n, n);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = g(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol)
      fail(ErrorCode::model, "indistinguishability matrix is not realizable: the overlap Gram matrix sqrt(I) "
                             "is not positive semidefinite (pivot " + std::to_string(j) + " = " +
                             std::to_string(d) + "); adjust I");
    if (d <= tol) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double r = g(i, j);
        for (Eigen::Index k = 0; k < j; ++k) r -= l(i, k) * l(j, k);
        if (std::abs(r) > 1e-7)
          fail(ErrorCode::model, "indistinguishability matrix is not realizable: the overlap Gram matrix "
                                 "sqrt(I) is not positive semidefinite; adjust I");
      }
      continue;
    }
    const double piv = std::sqrt(d);
    l(j, j) = piv;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double r = g(i, j);
      for (Eigen::Index k = 0; k < j; ++k) r -= l(i, k) * l(j, k);
      l(i, j) = r / piv;
    }
    kept.push_back(j);
  }
  CMatrix out(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) out.col(c) = l.col(kept[c]).cast<cplx>();
  for (Eigen::Index i = 0; i < n; ++i) out.row(i).normalize();
  return out;
}

/// A photon entering the interferometer.
struct Photon {
  int channel = 0;   // index into the circuit's photon inputs
  CVector external;  // amplitudes over external modes (2 * n_spatial)
  CVector internal;  // amplitudes over the ensemble's internal labels
  bool extra = false;
};

struct Branch {
  double probability = 0.0;
  std::vector<Photon> photons;

  int photon_number() const { return static_cast<int>(photons.size()); }

  /// Gram matrix <phi_j|phi_k> of the internal states.
  CMatrix gram() const {
    const auto n = static_cast<Eigen::Index>(photons.size());
    CMatrix g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) g(j, k) = photons[j].internal.dot(photons[k].internal);
    return g;
  }

  /// The branch as an occupation-number state over flattened modes.
  PureState state(int n_spatial, int n_internal) const {
    const ModeLayout layout(n_spatial, n_internal);
    std::vector<PhotonSpec> specs;
    for (const auto& p : photons) specs.push_back({p.external, p.internal});
    if (specs.empty()) return PureState::basis(Occupation(layout.size(), 0));
    return create_photons(layout, specs);
  }
};

struct MixedEnsemble {
  std::vector<Branch> branches;
  int n_spatial = 0;
  int internal_dimension = 1;

  double total_probability() const {
    double s = 0;
    for (const auto& b : branches) s += b.probability;
    return s;
  }
};

/// Enumerates, channel by channel and independently, whether the main photon
/// survives and whether an extra photon is emitted and survives. Branches with
/// zero probability are omitted; branch order is fixed (first channel varies
/// slowest).
inline MixedEnsemble input_ensemble(const SourcePhysicsParams& params, const Circuit& circuit) {
  params.validate();
  std::vector<InputSpec> inputs;
  for (const auto& in : circuit.inputs)
    if (in.photon) inputs.push_back(in);
  const int n = static_cast<int>(inputs.size());
  if (n != params.channels())
    fail(ErrorCode::validation, "source: " + std::to_string(params.channels()) + " channels configured but circuit has " +
                                    std::to_string(n) + " photon inputs");

  const CMatrix vectors = internal_vectors(params.indistinguishability);
  const int rank = static_cast<int>(vectors.cols());
  const bool impure = params.impurity > 0.0;
  const int dim = rank + (impure ? n : 0);

  auto make = [&](int channel, bool extra) {
    Photon p;
    p.channel = channel;
    p.extra = extra;
    p.external = CVector::Zero(circuit.n_external());
    const auto jv = jones(inputs[channel].polarization);
    p.external(2 * inputs[channel].mode) = jv(0);
    p.external(2 * inputs[channel].mode + 1) = jv(1);
    p.internal = CVector::Zero(dim);
    if (extra) {
      p.internal(rank + channel) = 1.0;
    } else {
      p.internal.head(rank) = vectors.row(channel).transpose();
    }
    return p;
  };

  MixedEnsemble ens;
  ens.n_spatial = circuit.n_spatial();
  ens.internal_dimension = dim;
  // per channel: bit 0 = main photon present, bit 1 = extra photon present
  std::vector<int> choice(n, 0);
  const long total = 1L << (2 * n);
  for (long code = 0; code < total; ++code) {
    double prob = 1.0;
    Branch b;
    for (int c = 0; c < n; ++c) {
      const int bits = static_cast<int>((code >> (2 * (n - 1 - c))) & 3);
      const double eta = params.channel_efficiency[c];
      const double p_extra = params.impurity * eta;
      prob *= (bits & 1) ? eta : 1.0 - eta;
      prob *= (bits & 2) ? p_extra : 1.0 - p_extra;
      if (prob == 0.0) break;
      if (bits & 1) b.photons.push_back(make(c, false));
      if (bits & 2) b.photons.push_back(make(c, true));
    }
    if (prob == 0.0) continue;
    b.probability = prob;
    ens.branches.push_back(std::move(b));
  }
  return ens;
}

/// Two-photon coincidence probability on a balanced beamsplitter for photons
/// j and k of the source, by Fock-space simulation with internal labels.
inline double hom_coincidence(const SourcePhysicsParams& params, int j, int k) {
  params.validate();
  if (j == k) fail(ErrorCode::argument, "hom_coincidence: photons must differ");
  if (j < 0 || k < 0 || j >= params.channels() || k >= params.channels())
    fail(ErrorCode::argument, "hom_coincidence: photon index out of range");
  const CMatrix vectors = internal_vectors(params.indistinguishability);
  const int dim = static_cast<int>(vectors.cols());
  const ModeLayout layout(2, dim);

  auto spec = [&](int spatial, int which) {
    PhotonSpec s;
    s.external = CVector::Zero(layout.n_external());
    s.external(ModeLayout::external(spatial, Polarization::h)) = 1.0;
    s.internal = vectors.row(which).transpose();
    return s;
  };
  const PureState in = create_photons(layout, {spec(0, j), spec(1, k)});
  Circuit bs;
  bs.spatial_modes = {"a", "b"};
  bs.elements.push_back(Element::bs(0, 1, 0.5));
  const PureState out = evolve(in, lift_internal(compile(bs), dim));

  double coincidence = 0.0;
  for (const auto& [occ, amp] : out.terms()) {
    int a = 0, b = 0;
    for (int m = 0; m < layout.size(); ++m) (layout.unflatten(m).spatial == 0 ? a : b) += occ[m];
    if (a == 1 && b == 1) coincidence += std::norm(amp);
  }
  return coincidence;
}

/// HOM visibility 1 - 2 P_coincidence (equals I_jk for pure photons).
inline double hom_visibility(const SourcePhysicsParams& params, int j, int k) {
  return 1.0 - 2.0 * hom_coincidence(params, j, k);
}

inline double g2_from_p2(double p2) { return 2.0 * p2 / ((1.0 + p2) * (1.0 + p2)); }

inline double g2_hbt(const SourcePhysicsParams& params) { return g2_from_p2(params.impurity); }

/// Inverts g2_from_p2 on [0, 1] by bisection.
inline double p2_from_g2(double g2) {
  if (!(g2 >= 0.0 && g2 <= 0.5)) fail(ErrorCode::model, "g2(0) must lie in [0, 0.5] under the impurity model");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g2_from_p2(mid) < g2 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace hghz
