#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>

namespace hghz {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double pi = 3.14159265358979323846;

/// Largest entry of |U^dagger U - I|.
inline double unitarity_defect(const CMatrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  const CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff();
}

inline bool is_unitary(const CMatrix& u, double tol) {
  return u.rows() == u.cols() && unitarity_defect(u) < tol;
}

inline double hermiticity_defect(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Trace distance 0.5 * ||a - b||_1 for Hermitian arguments.
inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a - b);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double min_eigenvalue(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace hghz
