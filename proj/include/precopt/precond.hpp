#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "precopt/errors.hpp"
#include "precopt/sym.hpp"

namespace precopt {

// A cone of admissible preconditioners: the PSD matrices inside a fixed matrix
// subalgebra. Four structures are supported: multiples of the identity
// (Scalar), diagonal matrices (Diagonal), all symmetric matrices (Full), and
// left Kronecker factors A (x) I_dR (KronLeft).
enum class SetKind { Scalar, Diagonal, Full, KronLeft };

struct PreconditionerSet {
  SetKind kind;
  int dim;
  int dL = 0;  // KronLeft only
  int dR = 0;  // KronLeft only

  static PreconditionerSet Scalar(int d) { return make(SetKind::Scalar, d, 0, 0); }
  static PreconditionerSet Diagonal(int d) { return make(SetKind::Diagonal, d, 0, 0); }
  static PreconditionerSet Full(int d) { return make(SetKind::Full, d, 0, 0); }
  static PreconditionerSet KronLeft(int dl, int dr) {
    if (dl < 1 || dr < 1) throw InvalidInput("PreconditionerSet: KronLeft factors must be >= 1");
    return make(SetKind::KronLeft, dl * dr, dl, dr);
  }

  std::string name() const {
    switch (kind) {
      case SetKind::Scalar: return "scalar";
      case SetKind::Diagonal: return "diagonal";
      case SetKind::Full: return "full";
      case SetKind::KronLeft: return "kron_left";
    }
    return "?";
  }

 private:
  static PreconditionerSet make(SetKind k, int d, int dl, int dr) {
    if (d < 1) throw InvalidInput("PreconditionerSet: dim must be >= 1");
    return PreconditionerSet{k, d, dl, dr};
  }
};

// root is the projected preconditioner; square = root^2 is the Frobenius
// projection of the input onto the set's subalgebra.
struct ProjectionResult {
  SymMatrix root;
  SymMatrix square;
};

namespace detail {

// Row-major reshape of a dL*dR vector into a dL x dR matrix: the left index
// varies slowest, so (A (x) I) vec(X) = vec(A X).
inline Eigen::MatrixXd mat_view(const Eigen::VectorXd& x, int dl, int dr) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(x.data(), dl, dr);
}

inline Eigen::VectorXd vec_view(const Eigen::MatrixXd& m) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor r = m;
  return Eigen::Map<const Eigen::VectorXd>(r.data(), m.size());
}

// Contracts the right index: PT(M)_{ii'} = sum_j M_{(i,j),(i',j)}.
inline Eigen::MatrixXd partial_trace_right(const Eigen::MatrixXd& m, int dl, int dr) {
  Eigen::MatrixXd pt = Eigen::MatrixXd::Zero(dl, dl);
  for (int i = 0; i < dl; ++i)
    for (int ip = 0; ip < dl; ++ip)
      for (int j = 0; j < dr; ++j) pt(i, ip) += m(i * dr + j, ip * dr + j);
  return pt;
}

inline Eigen::MatrixXd kron_with_identity(const Eigen::MatrixXd& a, int dr) {
  const int dl = static_cast<int>(a.rows());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dl * dr, dl * dr);
  for (int i = 0; i < dl; ++i)
    for (int ip = 0; ip < dl; ++ip)
      for (int j = 0; j < dr; ++j) k(i * dr + j, ip * dr + j) = a(i, ip);
  return k;
}

// Frobenius projection of a symmetric matrix onto the set's subalgebra (no PSD
// handling).
inline SymMatrix subspace_project(const PreconditionerSet& set, const SymMatrix& m) {
  if (m.dim() != set.dim) throw InvalidInput("subspace_project: dimension mismatch");
  switch (set.kind) {
    case SetKind::Scalar:
      return SymMatrix::Scaled(set.dim, m.trace() / set.dim);
    case SetKind::Diagonal:
      return SymMatrix::Diag(m.mat().diagonal());
    case SetKind::Full:
      return m;
    case SetKind::KronLeft:
      return SymMatrix(kron_with_identity(
          partial_trace_right(m.mat(), set.dL, set.dR) / set.dR, set.dR));
  }
  throw InvalidInput("subspace_project: unknown set kind");
}

// Structure-aware spectral form of the projected square (eigenvalues clamped
// to >= 0). For Full, Q/lam2 hold the d x d spectrum; for KronLeft they hold
// the dL x dL spectrum of the scaled partial trace.
struct ProjSpectrum {
  SetKind kind;
  int dim, dL, dR;
  double scalar2 = 0.0;
  Eigen::VectorXd diag2;
  Eigen::MatrixXd Q;
  Eigen::VectorXd lam2;
};

// Eigenvalues of a PSD input below 1e-15 of the largest are eigensolver noise;
// clamping them to exact zero keeps square roots of rank-deficient matrices
// from inflating that noise by eight orders of magnitude.
inline Eigen::VectorXd clean_spectrum(const Eigen::VectorXd& lam) {
  const double cutoff = 1e-15 * std::max(0.0, lam.maxCoeff());
  Eigen::VectorXd out(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) out[i] = lam[i] > cutoff ? lam[i] : 0.0;
  return out;
}

inline ProjSpectrum project_spectrum(const PreconditionerSet& set, const SymMatrix& m,
                                     double tol = kTolPsd) {
  if (m.dim() != set.dim) throw InvalidInput("project_PH: dimension mismatch");
  if (!is_psd(m, tol)) throw NotPsd("project_PH: input is not PSD within tolerance");
  ProjSpectrum s;
  s.kind = set.kind;
  s.dim = set.dim;
  s.dL = set.dL;
  s.dR = set.dR;
  switch (set.kind) {
    case SetKind::Scalar:
      s.scalar2 = std::max(0.0, m.trace() / set.dim);
      break;
    case SetKind::Diagonal:
      s.diag2 = m.mat().diagonal().cwiseMax(0.0);
      break;
    case SetKind::Full: {
      const EigDecomp e = eig_sym(m);
      s.Q = e.eigenvectors;
      s.lam2 = clean_spectrum(e.eigenvalues);
      break;
    }
    case SetKind::KronLeft: {
      const SymMatrix a(partial_trace_right(m.mat(), set.dL, set.dR) / set.dR);
      const EigDecomp e = eig_sym(a);
      s.Q = e.eigenvectors;
      s.lam2 = clean_spectrum(e.eigenvalues);
      break;
    }
  }
  return s;
}

template <typename F>
SymMatrix materialize(const ProjSpectrum& s, F&& f) {
  switch (s.kind) {
    case SetKind::Scalar:
      return SymMatrix::Scaled(s.dim, f(s.scalar2));
    case SetKind::Diagonal: {
      Eigen::VectorXd v(s.dim);
      for (int i = 0; i < s.dim; ++i) v[i] = f(s.diag2[i]);
      return SymMatrix::Diag(v);
    }
    case SetKind::Full: {
      Eigen::VectorXd v(s.dim);
      for (int i = 0; i < s.dim; ++i) v[i] = f(s.lam2[i]);
      return SymMatrix(s.Q * v.asDiagonal() * s.Q.transpose());
    }
    case SetKind::KronLeft: {
      Eigen::VectorXd v(s.dL);
      for (int i = 0; i < s.dL; ++i) v[i] = f(s.lam2[i]);
      return SymMatrix(kron_with_identity(
          Eigen::MatrixXd(s.Q * v.asDiagonal() * s.Q.transpose()), s.dR));
    }
  }
  throw InvalidInput("materialize: unknown set kind");
}

inline SymMatrix square_from(const ProjSpectrum& s) {
  return materialize(s, [](double l) { return l; });
}

inline SymMatrix root_from(const ProjSpectrum& s) {
  return materialize(s, [](double l) { return std::sqrt(l); });
}

// Largest/smallest eigenvalue of the root.
inline double root_lambda_max(const ProjSpectrum& s) {
  switch (s.kind) {
    case SetKind::Scalar: return std::sqrt(s.scalar2);
    case SetKind::Diagonal: return std::sqrt(s.diag2.maxCoeff());
    default: return std::sqrt(s.lam2.maxCoeff());
  }
}

inline double root_lambda_min(const ProjSpectrum& s) {
  switch (s.kind) {
    case SetKind::Scalar: return std::sqrt(s.scalar2);
    case SetKind::Diagonal: return std::sqrt(s.diag2.minCoeff());
    default: return std::sqrt(s.lam2.minCoeff());
  }
}

// Applies the root's spectral inverse, treating eigenvalues at or below
// 1e-14 of the largest as zero (those directions receive no step). If every
// eigenvalue sits at numerical zero there is no preconditioned step at all.
inline Eigen::VectorXd apply_inv_root(const ProjSpectrum& s, const Eigen::VectorXd& g) {
  const double lmax = root_lambda_max(s);
  if (lmax <= 1e-14)
    throw SingularPreconditioner("apply_inv_root: preconditioner root is singular");
  const double cutoff = 1e-14 * lmax;
  const auto inv = [cutoff](double l) { return l > cutoff ? 1.0 / l : 0.0; };
  switch (s.kind) {
    case SetKind::Scalar:
      return g * inv(std::sqrt(s.scalar2));
    case SetKind::Diagonal: {
      Eigen::VectorXd out(g.size());
      for (Eigen::Index i = 0; i < g.size(); ++i) out[i] = g[i] * inv(std::sqrt(s.diag2[i]));
      return out;
    }
    case SetKind::Full: {
      Eigen::VectorXd w = s.Q.transpose() * g;
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] *= inv(std::sqrt(s.lam2[i]));
      return s.Q * w;
    }
    case SetKind::KronLeft: {
      Eigen::VectorXd il(s.dL);
      for (int i = 0; i < s.dL; ++i) il[i] = inv(std::sqrt(s.lam2[i]));
      const Eigen::MatrixXd inv_a = s.Q * il.asDiagonal() * s.Q.transpose();
      return vec_view(inv_a * mat_view(g, s.dL, s.dR));
    }
  }
  throw InvalidInput("apply_inv_root: unknown set kind");
}

}  // namespace detail

// Projects a PSD matrix onto the preconditioner cone: square is the Frobenius
// projection onto the subalgebra, root its principal square root.
inline ProjectionResult project_PH(const PreconditionerSet& set, const SymMatrix& m) {
  const detail::ProjSpectrum s = detail::project_spectrum(set, m);
  return ProjectionResult{detail::root_from(s), detail::square_from(s)};
}

// sqrt(x^T H x) for PSD H.
inline double h_seminorm(const SymMatrix& h, const Eigen::VectorXd& x) {
  if (h.dim() != x.size()) throw InvalidInput("h_seminorm: dimension mismatch");
  const double q = h.quad_form(x);
  const double scale = std::max(1.0, h.frobenius() * x.squaredNorm());
  if (q < -1e-12 * scale) throw NotPsd("h_seminorm: negative quadratic form");
  return std::sqrt(std::max(0.0, q));
}

// Norm induced by the set: the pointwise supremum of ||x||_H over unit-trace
// members H of the cone.
inline double ch_norm(const PreconditionerSet& set, const Eigen::VectorXd& x) {
  if (x.size() != set.dim) throw InvalidInput("ch_norm: dimension mismatch");
  switch (set.kind) {
    case SetKind::Scalar:
      return x.norm() / std::sqrt(static_cast<double>(set.dim));
    case SetKind::Diagonal:
      return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
    case SetKind::Full:
      return x.norm();
    case SetKind::KronLeft: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::mat_view(x, set.dL, set.dR));
      return svd.singularValues()[0] / std::sqrt(static_cast<double>(set.dR));
    }
  }
  throw InvalidInput("ch_norm: unknown set kind");
}

// Dual of ch_norm; equals the trace of project_PH(xx^T).root.
inline double dual_norm(const PreconditionerSet& set, const Eigen::VectorXd& x) {
  if (x.size() != set.dim) throw InvalidInput("dual_norm: dimension mismatch");
  switch (set.kind) {
    case SetKind::Scalar:
      return std::sqrt(static_cast<double>(set.dim)) * x.norm();
    case SetKind::Diagonal:
      return x.lpNorm<1>();
    case SetKind::Full:
      return x.norm();
    case SetKind::KronLeft: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::mat_view(x, set.dL, set.dR));
      return std::sqrt(static_cast<double>(set.dR)) * svd.singularValues().sum();
    }
  }
  throw InvalidInput("dual_norm: unknown set kind");
}

// The unit-ball maximizer of <m, u>, i.e. the steepest-descent direction for
// the set's norm; equals pinv(project_PH(mm^T).root) * m.
inline Eigen::VectorXd steepest_direction(const PreconditionerSet& set,
                                          const Eigen::VectorXd& m) {
  if (m.size() != set.dim) throw InvalidInput("steepest_direction: dimension mismatch");
  if (m.isZero(0.0)) throw ZeroVector("steepest_direction: zero vector has no direction");
  switch (set.kind) {
    case SetKind::Scalar:
      return std::sqrt(static_cast<double>(set.dim)) * m / m.norm();
    case SetKind::Diagonal: {
      Eigen::VectorXd u(m.size());
      for (Eigen::Index i = 0; i < m.size(); ++i)
        u[i] = (m[i] > 0.0) ? 1.0 : (m[i] < 0.0 ? -1.0 : 0.0);
      return u;
    }
    case SetKind::Full:
      return m / m.norm();
    case SetKind::KronLeft: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::mat_view(m, set.dL, set.dR),
                                            Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::VectorXd& sv = svd.singularValues();
      const double cutoff = 1e-12 * sv[0];
      const int rank = static_cast<int>((sv.array() > cutoff).count());
      const Eigen::MatrixXd uvt = svd.matrixU().leftCols(rank) *
                                  svd.matrixV().leftCols(rank).transpose();
      return std::sqrt(static_cast<double>(set.dR)) * detail::vec_view(uvt);
    }
  }
  throw InvalidInput("steepest_direction: unknown set kind");
}

// V-metric projection of x onto the ball {y : ch_norm(y) <= D}.
inline Eigen::VectorXd project_ball(const PreconditionerSet& set, const SymMatrix& v,
                                    const Eigen::VectorXd& x, double big_d) {
  if (x.size() != set.dim || v.dim() != set.dim)
    throw InvalidInput("project_ball: dimension mismatch");
  if (!(big_d > 0.0)) throw InvalidInput("project_ball: radius must be positive");
  if (set.kind == SetKind::KronLeft)
    throw Unsupported("project_ball: KronLeft ball projection is not provided");
  if (ch_norm(set, x) <= big_d) return x;
  switch (set.kind) {
    case SetKind::Scalar:
      // The ball is Euclidean of radius D*sqrt(d); with V in the cone (a
      // multiple of I) the metric projection is a rescale.
      return x * std::min(1.0, big_d * std::sqrt(static_cast<double>(set.dim)) / x.norm());
    case SetKind::Diagonal: {
      // Separable metric (V diagonal in the cone): coordinate-wise clamp.
      return x.cwiseMax(-big_d).cwiseMin(big_d);
    }
    case SetKind::Full: {
      // Minimize (x-y)^T V (x-y) over ||y||_2 <= D: y(l) = (V + l I)^{-1} V x
      // with the unique l >= 0 making ||y|| = D.
      const EigDecomp e = eig_sym(v);
      if (e.eigenvalues[0] <= 0.0)
        throw NotPositiveDefinite("project_ball: metric must be positive definite");
      const Eigen::VectorXd w = e.eigenvectors.transpose() * x;
      auto norm_at = [&](double l) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
          const double yi = e.eigenvalues[i] / (e.eigenvalues[i] + l) * w[i];
          s += yi * yi;
        }
        return std::sqrt(s);
      };
      double lo = 0.0, hi = std::max(e.eigenvalues[e.eigenvalues.size() - 1], 1.0);
      while (norm_at(hi) > big_d) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (norm_at(mid) > big_d) lo = mid; else hi = mid;
        if (std::abs(norm_at(mid) - big_d) <= 1e-12 * big_d) { lo = hi = mid; break; }
      }
      const double l = 0.5 * (lo + hi);
      Eigen::VectorXd yw(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i)
        yw[i] = e.eigenvalues[i] / (e.eigenvalues[i] + l) * w[i];
      return e.eigenvectors * yw;
    }
    default:
      throw Unsupported("project_ball: unsupported set kind");
  }
}

}  // namespace precopt
