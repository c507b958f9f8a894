#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>

#include "treesel/error.hpp"

namespace treesel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Inverse of a symmetric positive-definite matrix through its Cholesky
/// factor. Throws SingularMatrix when the factorization breaks down.
inline Matrix spd_inverse(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularMatrix, "matrix is not numerically positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return symmetrize(inv);
}

inline double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

/// True when every eigenvalue of the symmetric part is >= -slack.
inline bool is_psd(const Matrix& sym, double slack = 0.0) { return min_eigenvalue(sym) >= -slack; }

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Numerical rank with singular values below rel_tol * sigma_max treated as zero.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Dense dense = m;
  Eigen::JacobiSVD<Dense> svd(dense);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = rel_tol * sv(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

/// rank [C; CA; ...; CA^{n-1}] == n
inline bool is_observable(const Matrix& a, const Matrix& c, double rel_tol = 1e-10) {
  const Eigen::Index n = a.rows();
  if (c.rows() == 0) return n == 0;
  Matrix obs(c.rows() * n, n);
  Matrix block = c;
  for (Eigen::Index k = 0; k < n; ++k) {
    obs.middleRows(k * c.rows(), c.rows()) = block;
    block = block * a;
  }
  return numerical_rank(obs, rel_tol) == n;
}

/// PBH detectability test: for every eigenvalue lambda of A with
/// |lambda| >= 1, the stacked matrix [lambda I - A; C] has full column rank.
/// Eigenvalues within 1e-9 of the unit circle count as marginal.
inline bool is_detectable(const Matrix& a, const Matrix& c, double rel_tol = 1e-10) {
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  const Eigen::VectorXcd lambdas = es.eigenvalues();
  using CMatrix = Eigen::MatrixXcd;
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    const std::complex<double> lambda = lambdas(k);
    if (std::abs(lambda) < 1.0 - 1e-9) continue;
    CMatrix stacked(n + c.rows(), n);
    stacked.topRows(n) = lambda * CMatrix::Identity(n, n) - a.cast<std::complex<double>>();
    if (c.rows() > 0) stacked.bottomRows(c.rows()) = c.cast<std::complex<double>>();
    if (numerical_rank(stacked, rel_tol) < n) return false;
  }
  return true;
}

inline double relative_frobenius(const Matrix& a, const Matrix& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

}  // namespace treesel
