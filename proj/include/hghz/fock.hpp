#pragma once

// Occupation-number states of photons over flattened optical modes.
//
// A flattened mode is the triple (spatial, polarization, internal). The
// flattening is row-major in that order:
//
//   index = (spatial * 2 + polarization) * n_internal + internal
//
// so the "external" (spatial, polarization) index of a flattened mode is
// index / n_internal. Golden vectors in the tests depend on this ordering.

#include "hghz/error.hpp"
#include "hghz/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace hghz {

enum class Polarization : std::uint8_t { h = 0, v = 1 };

constexpr char polarization_char(Polarization p) { return p == Polarization::h ? 'h' : 'v'; }

struct ModeIndex {
  int spatial = 0;
  Polarization polarization = Polarization::h;
  int internal = 0;

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

class ModeLayout {
 public:
  ModeLayout(int n_spatial, int n_internal = 1) : n_spatial_(n_spatial), n_internal_(n_internal) {
    if (n_spatial <= 0 || n_internal <= 0)
      fail(ErrorCode::argument, "ModeLayout: mode counts must be positive");
  }

  int n_spatial() const { return n_spatial_; }
  int n_internal() const { return n_internal_; }
  int n_external() const { return 2 * n_spatial_; }
  int size() const { return 2 * n_spatial_ * n_internal_; }

  int flatten(ModeIndex m) const {
    if (m.spatial < 0 || m.spatial >= n_spatial_ || m.internal < 0 || m.internal >= n_internal_)
      fail(ErrorCode::argument, "ModeLayout: mode index out of range");
    return (m.spatial * 2 + static_cast<int>(m.polarization)) * n_internal_ + m.internal;
  }

  ModeIndex unflatten(int index) const {
    if (index < 0 || index >= size()) fail(ErrorCode::argument, "ModeLayout: flat index out of range");
    const int ext = index / n_internal_;
    return {ext / 2, static_cast<Polarization>(ext % 2), index % n_internal_};
  }

  static constexpr int external(int spatial, Polarization p) { return 2 * spatial + static_cast<int>(p); }

 private:
  int n_spatial_;
  int n_internal_;
};

using Occupation = std::vector<std::uint8_t>;

inline int photon_count(const Occupation& occ) {
  return std::accumulate(occ.begin(), occ.end(), 0);
}

inline double factorial_product(const Occupation& occ) {
  double f = 1.0;
  for (auto n : occ)
    for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

struct FockState {
  Occupation occupations;
  cplx amplitude{1.0, 0.0};

  int photon_number() const { return photon_count(occupations); }
};

/// Superposition of Fock states of one fixed total photon number.
class PureState {
 public:
  using Terms = std::map<Occupation, cplx>;

  explicit PureState(int mode_count) : mode_count_(mode_count) {}

  /// |occ> with amplitude 1.
  static PureState basis(const Occupation& occ) {
    PureState s(static_cast<int>(occ.size()));
    s.add(occ, 1.0);
    return s;
  }

  void add(const FockState& f) { add(f.occupations, f.amplitude); }

  void add(const Occupation& occ, cplx amplitude) {
    if (static_cast<int>(occ.size()) != mode_count_)
      fail(ErrorCode::dimension, "PureState: occupation length does not match mode count");
    if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag()))
      fail(ErrorCode::validation, "PureState: amplitude is not finite");
    const int n = photon_count(occ);
    if (photon_number_ < 0) {
      photon_number_ = n;
    } else if (n != photon_number_) {
      fail(ErrorCode::validation, "PureState: photon-number sectors cannot be mixed (" +
                                      std::to_string(n) + " vs " + std::to_string(photon_number_) + ")");
    }
    terms_[occ] += amplitude;
  }

  int mode_count() const { return mode_count_; }
  int photon_number() const { return photon_number_ < 0 ? 0 : photon_number_; }
  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  cplx amplitude(const Occupation& occ) const {
    auto it = terms_.find(occ);
    return it == terms_.end() ? cplx{} : it->second;
  }

  double norm_squared() const {
    double s = 0;
    for (const auto& [occ, a] : terms_) s += std::norm(a);
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }

  PureState& normalize() {
    const double n = norm();
    if (n == 0) fail(ErrorCode::validation, "PureState: cannot normalize the zero vector");
    for (auto& [occ, a] : terms_) a /= n;
    return *this;
  }

  /// Drops terms with |amplitude| below tol.
  PureState& prune(double tol = 1e-14) {
    std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) < tol; });
    return *this;
  }

 private:
  int mode_count_;
  int photon_number_ = -1;
  Terms terms_;
};

/// <a|b>
inline cplx inner_product(const PureState& a, const PureState& b) {
  if (a.mode_count() != b.mode_count())
    fail(ErrorCode::dimension, "inner_product: mode counts differ");
  cplx s{};
  for (const auto& [occ, amp] : a.terms()) s += std::conj(amp) * b.amplitude(occ);
  return s;
}

namespace detail {

// Expands prod_j (sum_k u(k, in_j) a_k^dag) acting on vacuum as a polynomial in
// creation operators, keyed by exponent vector.
inline void expand_creation(std::map<Occupation, cplx>& poly, const CMatrix& u, int input_mode) {
  std::map<Occupation, cplx> next;
  const int modes = static_cast<int>(u.rows());
  for (const auto& [key, coef] : poly) {
    for (int k = 0; k < modes; ++k) {
      const cplx w = u(k, input_mode);
      if (w == cplx{}) continue;
      Occupation out = key;
      ++out[k];
      next[out] += coef * w;
    }
  }
  poly.swap(next);
}

}  // namespace detail

/// Passive linear-optics evolution a_i^dag -> sum_j u(j, i) a_j^dag, exact per
/// term by creation-operator expansion.
inline PureState evolve(const PureState& state, const CMatrix& u, double unitarity_tol = 1e-10) {
  if (u.rows() != state.mode_count() || u.cols() != state.mode_count())
    fail(ErrorCode::dimension, "evolve: unitary dimension " + std::to_string(u.rows()) +
                                   " does not match mode count " + std::to_string(state.mode_count()));
  if (!is_unitary(u, unitarity_tol))
    fail(ErrorCode::validation, "evolve: matrix is not unitary (defect " +
                                    std::to_string(unitarity_defect(u)) + ")");
  const int modes = state.mode_count();
  std::map<Occupation, cplx> total;
  for (const auto& [occ, amp] : state.terms()) {
    std::map<Occupation, cplx> poly;
    poly[Occupation(modes, 0)] = amp / std::sqrt(factorial_product(occ));
    for (int m = 0; m < modes; ++m)
      for (int c = 0; c < occ[m]; ++c) detail::expand_creation(poly, u, m);
    for (const auto& [key, coef] : poly) total[key] += coef * std::sqrt(factorial_product(key));
  }
  PureState out(modes);
  for (const auto& [key, a] : total)
    if (std::abs(a) > 1e-15) out.add(key, a);
  return out;
}

/// One photon to be created on vacuum: amplitude external(e) * internal(l)
/// on flattened mode e * n_internal + l.
struct PhotonSpec {
  CVector external;  // length = layout.n_external()
  CVector internal;  // length = layout.n_internal()
};

/// Normalized product of creation operators for the given photons.
inline PureState create_photons(const ModeLayout& layout, const std::vector<PhotonSpec>& photons) {
  const int modes = layout.size();
  std::map<Occupation, cplx> poly;
  poly[Occupation(modes, 0)] = 1.0;
  for (const auto& p : photons) {
    if (p.external.size() != layout.n_external() || p.internal.size() != layout.n_internal())
      fail(ErrorCode::dimension, "create_photons: photon vector length mismatch");
    CMatrix column(modes, 1);
    for (int e = 0; e < layout.n_external(); ++e)
      for (int l = 0; l < layout.n_internal(); ++l) column(e * layout.n_internal() + l, 0) = p.external(e) * p.internal(l);
    detail::expand_creation(poly, column, 0);
  }
  PureState out(modes);
  for (const auto& [key, coef] : poly) {
    const cplx a = coef * std::sqrt(factorial_product(key));
    if (std::abs(a) > 1e-15) out.add(key, a);
  }
  if (out.empty()) fail(ErrorCode::validation, "create_photons: state vanishes");
  return out.normalize();
}

/// Density operator over an explicit list of Fock basis vectors.
struct DensityOperator {
  std::vector<Occupation> basis;
  CMatrix matrix;

  static DensityOperator from_pure(const PureState& s) {
    DensityOperator rho;
    CVector amps(static_cast<Eigen::Index>(s.terms().size()));
    Eigen::Index i = 0;
    for (const auto& [occ, a] : s.terms()) {
      rho.basis.push_back(occ);
      amps(i++) = a;
    }
    rho.matrix = amps * amps.adjoint();
    return rho;
  }

  cplx trace() const { return matrix.trace(); }

  /// Throws validation errors when trace, Hermiticity or positivity is off.
  void validate(double trace_tol = 1e-10, double herm_tol = 1e-12, double eig_tol = 1e-9) const {
    if (matrix.rows() != static_cast<Eigen::Index>(basis.size()) || matrix.cols() != matrix.rows())
      fail(ErrorCode::dimension, "DensityOperator: basis/matrix size mismatch");
    if (std::abs(trace() - cplx{1.0}) > trace_tol)
      fail(ErrorCode::validation, "DensityOperator: trace deviates from 1");
    if (hermiticity_defect(matrix) > herm_tol)
      fail(ErrorCode::validation, "DensityOperator: not Hermitian");
    if (matrix.rows() > 0 && min_eigenvalue(matrix) < -eig_tol)
      fail(ErrorCode::validation, "DensityOperator: negative eigenvalue");
  }
};

/// Traces out every flattened mode not in `keep`. The result basis lists the
/// distinct kept-mode occupations in lexicographic order.
inline DensityOperator partial_trace(const DensityOperator& rho, const std::set<int>& keep) {
  if (keep.empty()) fail(ErrorCode::argument, "partial_trace: keep set is empty");
  const int modes = rho.basis.empty() ? 0 : static_cast<int>(rho.basis.front().size());
  for (int k : keep)
    if (k < 0 || k >= modes) fail(ErrorCode::argument, "partial_trace: mode " + std::to_string(k) + " out of range");

  const std::size_t n = rho.basis.size();
  std::vector<Occupation> kept(n), traced(n);
  std::map<Occupation, int> index;
  for (std::size_t i = 0; i < n; ++i) {
    for (int m = 0; m < modes; ++m) (keep.count(m) ? kept[i] : traced[i]).push_back(rho.basis[i][m]);
    index.emplace(kept[i], 0);
  }
  DensityOperator out;
  int next = 0;
  for (auto& [occ, idx] : index) {
    idx = next++;
    out.basis.push_back(occ);
  }
  out.matrix = CMatrix::Zero(next, next);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (traced[i] == traced[j])
        out.matrix(index.at(kept[i]), index.at(kept[j])) += rho.matrix(i, j);
  return out;
}

}  // namespace hghz
