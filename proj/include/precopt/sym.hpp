#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "precopt/errors.hpp"

namespace precopt {

// Relative tolerance band inside which small negative eigenvalues are treated
// as zero by PSD-aware operations.
inline constexpr double kTolPsd = 1e-10;

// Relative threshold below which two eigenvalues count as degenerate for
// divided-difference formulas.
inline constexpr double kTolDegenerate = 1e-12;

// Square matrix that is symmetric by construction: the constructor stores
// (A + A^T)/2, whose (i,j) and (j,i) entries are computed from the same two
// addends and are therefore bitwise equal.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
      throw InvalidInput("SymMatrix: need a square matrix of dimension >= 1");
    if (!a.allFinite()) throw InvalidInput("SymMatrix: non-finite entries");
    m_ = 0.5 * (a + a.transpose());
  }

  static SymMatrix Zero(int d) { return SymMatrix(Eigen::MatrixXd::Zero(d, d)); }
  static SymMatrix Identity(int d) { return SymMatrix(Eigen::MatrixXd::Identity(d, d)); }
  static SymMatrix Diag(const Eigen::VectorXd& v) {
    return SymMatrix(Eigen::MatrixXd(v.asDiagonal()));
  }
  // Scales the identity.
  static SymMatrix Scaled(int d, double c) {
    return SymMatrix(c * Eigen::MatrixXd::Identity(d, d));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  double quad_form(const Eigen::VectorXd& x) const { return x.dot(m_ * x); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return m_ * x; }
  double frobenius() const { return m_.norm(); }

  SymMatrix add_scaled_identity(double lambda) const {
    Eigen::MatrixXd r = m_;
    r.diagonal().array() += lambda;
    return SymMatrix(r);
  }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidInput("SymMatrix: dimension mismatch in +");
    return SymMatrix(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidInput("SymMatrix: dimension mismatch in -");
    return SymMatrix(a.m_ - b.m_);
  }
  friend SymMatrix operator*(double c, const SymMatrix& a) { return SymMatrix(c * a.m_); }

 private:
  Eigen::MatrixXd m_;
};

// Spectral factorization A = Q diag(eigenvalues) Q^T with eigenvalues ascending
// and orthonormal columns in Q.
struct EigDecomp {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

// Full symmetric eigendecomposition (tridiagonalization + symmetric QR).
inline EigDecomp eig_sym(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
  if (solver.info() != Eigen::Success) throw NumericalError("eig_sym: eigensolver failed");
  return EigDecomp{solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {

// Rebuilds Q f(lambda) Q^T, re-symmetrized so the result is exactly symmetric.
template <typename F>
SymMatrix spectral_map(const EigDecomp& e, F&& f) {
  Eigen::VectorXd mapped(e.eigenvalues.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) mapped[i] = f(e.eigenvalues[i]);
  return SymMatrix(e.eigenvectors * mapped.asDiagonal() * e.eigenvectors.transpose());
}

inline double spectral_scale(const EigDecomp& e) {
  const double lo = std::abs(e.eigenvalues[0]);
  const double hi = std::abs(e.eigenvalues[e.eigenvalues.size() - 1]);
  return std::max(lo, hi);
}

}  // namespace detail

// Largest eigenvalue magnitude.
inline double op_norm(const SymMatrix& a) { return detail::spectral_scale(eig_sym(a)); }

// True when lambda_min(A) >= -tol * max(1, ||A||_op).
inline bool is_psd(const SymMatrix& a, double tol = kTolPsd) {
  const EigDecomp e = eig_sym(a);
  return e.eigenvalues[0] >= -tol * std::max(1.0, detail::spectral_scale(e));
}

// True when A <= B in the positive-semidefinite order, up to tolerance.
inline bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol = kTolPsd) {
  return is_psd(b - a, tol);
}

// Principal square root of a PSD matrix. Eigenvalues in [-tol*||A||_op, 0) are
// clamped to zero; anything more negative raises NotPsd.
inline SymMatrix sqrt_psd(const SymMatrix& a, double tol = kTolPsd) {
  const EigDecomp e = eig_sym(a);
  const double scale = detail::spectral_scale(e);
  if (e.eigenvalues[0] < -tol * std::max(1.0, scale))
    throw NotPsd("sqrt_psd: eigenvalue " + std::to_string(e.eigenvalues[0]) +
                 " below PSD tolerance");
  return detail::spectral_map(e, [](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; });
}

// Matrix logarithm of a strictly positive definite matrix.
inline SymMatrix log_psd(const SymMatrix& a) {
  const EigDecomp e = eig_sym(a);
  if (e.eigenvalues[0] <= 0.0)
    throw NotPositiveDefinite("log_psd: eigenvalue " + std::to_string(e.eigenvalues[0]) +
                              " is not strictly positive");
  return detail::spectral_map(e, [](double l) { return std::log(l); });
}

// Directional (Frechet) derivative of the matrix logarithm at X along A:
// in X's eigenbasis, entry (i,j) of Q^T A Q is scaled by the divided difference
// (log li - log lj)/(li - lj), which degenerates to 1/li for near-equal pairs.
// Equals the integral of (X + zI)^{-1} A (X + zI)^{-1} dz over z in [0, inf).
inline SymMatrix dlog(const SymMatrix& x, const SymMatrix& a) {
  if (x.dim() != a.dim()) throw InvalidInput("dlog: dimension mismatch");
  const EigDecomp e = eig_sym(x);
  if (e.eigenvalues[0] <= 0.0)
    throw NotPositiveDefinite("dlog: base point must be strictly positive definite");
  const Eigen::MatrixXd at = e.eigenvectors.transpose() * a.mat() * e.eigenvectors;
  const Eigen::Index d = e.eigenvalues.size();
  const double scale = detail::spectral_scale(e);
  Eigen::MatrixXd scaled(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double li = e.eigenvalues[i], lj = e.eigenvalues[j];
      const double coeff = (std::abs(li - lj) <= kTolDegenerate * scale)
                               ? 2.0 / (li + lj)
                               : (std::log(li) - std::log(lj)) / (li - lj);
      scaled(i, j) = coeff * at(i, j);
    }
  }
  return SymMatrix(e.eigenvectors * scaled * e.eigenvectors.transpose());
}

}  // namespace precopt
