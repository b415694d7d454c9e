#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <precopt/errors.hpp>
#include <precopt/precond.hpp>
#include <precopt/problems.hpp>
#include <precopt/sym.hpp>

namespace precopt {

// Analytic and certified-numeric computations of the geometric constants that
// govern preconditioned methods (smoothness and gradient variance per
// preconditioner set, norm distortion), validators for the matrix
// inequalities behind the second-order-sum bounds, and a log-log rate fitter.

// Closed interval [lo, hi]; exact values carry lo == hi.
struct ValueBracket {
  double lo = 0.0;
  double hi = 0.0;
  bool exact = true;

  static ValueBracket point(double v) { return ValueBracket{v, v, true}; }
  double mid() const { return 0.5 * (lo + hi); }
  double rel_gap() const {
    const double base = std::max(std::abs(hi), 1e-300);
    return (hi - lo) / base;
  }
};

namespace detail {

inline double lambda_min(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

inline bool both_slabs_pd(const Eigen::MatrixXd& b, const Eigen::VectorXd& h) {
  Eigen::MatrixXd sp = b;
  sp.diagonal() += h;
  Eigen::MatrixXd sm = -b;
  sm.diagonal() += h;
  return Eigen::LLT<Eigen::MatrixXd>(sp).info() == Eigen::Success &&
         Eigen::LLT<Eigen::MatrixXd>(sm).info() == Eigen::Success;
}

inline double slab_barrier_value(const Eigen::MatrixXd& b, const Eigen::VectorXd& h, double tau) {
  Eigen::MatrixXd sp = b;
  sp.diagonal() += h;
  Eigen::MatrixXd sm = -b;
  sm.diagonal() += h;
  const Eigen::LLT<Eigen::MatrixXd> lp(sp), lm(sm);
  if (lp.info() != Eigen::Success || lm.info() != Eigen::Success) {
    return std::numeric_limits<double>::infinity();
  }
  double logdet = 0.0;
  for (int i = 0; i < b.rows(); ++i) {
    logdet += std::log(lp.matrixL()(i, i)) + std::log(lm.matrixL()(i, i));
  }
  return h.sum() - 2.0 * tau * logdet;
}

// Certified bracket for: minimize sum(h) over h in R^d subject to
// diag(h) - B >= 0 and diag(h) + B >= 0 (PSD order). A log-det barrier is
// centered by damped Newton along a decreasing-tau path; the upper end is the
// repaired primal point (feasibility restored exactly by shifting h along the
// all-ones direction), the lower end is the weak-duality value of the
// trace-rescaled dual multipliers tau * slab^{-1}.
inline ValueBracket diag_cone_trace_min(const Eigen::MatrixXd& b_in) {
  const int d = static_cast<int>(b_in.rows());
  const double scale = op_norm(SymMatrix(b_in));
  if (scale == 0.0) return ValueBracket::point(0.0);
  const Eigen::MatrixXd b = b_in / scale;

  // Strictly feasible start: absolute row sums dominate both slabs.
  Eigen::VectorXd h = b.cwiseAbs().rowwise().sum();
  h.array() += 0.5;

  double tau = h.sum() / (4.0 * d);
  Eigen::VectorXd h_center = h;
  double best_upper = std::numeric_limits<double>::infinity();
  double best_lower = 0.0;

  for (int round = 0; round < 40; ++round) {
    // Newton centering at the current tau.
    for (int it = 0; it < 120; ++it) {
      Eigen::MatrixXd sp = b;
      sp.diagonal() += h;
      Eigen::MatrixXd sm = -b;
      sm.diagonal() += h;
      const Eigen::MatrixXd spi = sp.inverse();
      const Eigen::MatrixXd smi = sm.inverse();
      const Eigen::VectorXd grad =
          Eigen::VectorXd::Ones(d) - tau * (spi.diagonal() + smi.diagonal());
      Eigen::MatrixXd hess = tau * (spi.cwiseProduct(spi) + smi.cwiseProduct(smi));
      hess.diagonal().array() += 1e-14;
      const Eigen::VectorXd dx = -hess.ldlt().solve(grad);
      if (!dx.allFinite()) break;
      const double decrement = -grad.dot(dx);
      if (decrement <= 1e-18 * std::max(1.0, std::abs(h.sum()))) break;
      double step = 1.0;
      const double f0 = slab_barrier_value(b, h, tau);
      Eigen::VectorXd h_next = h + step * dx;
      int bt = 0;
      while (bt < 70 && (!both_slabs_pd(b, h_next) ||
                         slab_barrier_value(b, h_next, tau) > f0 - 1e-4 * step * decrement)) {
        step *= 0.5;
        h_next = h + step * dx;
        ++bt;
      }
      if (bt >= 70) break;
      h = h_next;
    }
    h_center = h;

    // Upper bound: restore exact feasibility by lifting along the all-ones
    // direction (adding t to every h_i shifts both slab spectra up by t).
    {
      Eigen::MatrixXd sp = b;
      sp.diagonal() += h_center;
      Eigen::MatrixXd sm = -b;
      sm.diagonal() += h_center;
      const double lm = std::min(lambda_min(sp), lambda_min(sm));
      Eigen::VectorXd h_feas = h_center;
      if (lm < 0.0) h_feas.array() += -lm * (1.0 + 1e-10) + 1e-15;
      best_upper = std::min(best_upper, h_feas.sum());
    }

    // Lower bound: weak duality at the rescaled barrier multipliers. With
    // Y+ = tau*(diag(h)+B)^-1 and Y- = tau*(diag(h)-B)^-1, rescaling by
    // D = diag(1/sqrt(Y+_ii + Y-_ii)) restores the dual trace constraint
    // (D Y D)_ii summing to one per coordinate while preserving PSD-ness.
    {
      Eigen::MatrixXd sp = b;
      sp.diagonal() += h_center;
      Eigen::MatrixXd sm = -b;
      sm.diagonal() += h_center;
      const Eigen::MatrixXd yp = tau * sp.inverse();
      const Eigen::MatrixXd ym = tau * sm.inverse();
      const Eigen::VectorXd s = yp.diagonal() + ym.diagonal();
      if ((s.array() > 0.0).all()) {
        const Eigen::VectorXd dinv = s.cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd yp_t = dinv.asDiagonal() * yp * dinv.asDiagonal();
        const Eigen::MatrixXd ym_t = dinv.asDiagonal() * ym * dinv.asDiagonal();
        // Dual objective <B, Y- - Y+> under the constraint set {Y+- >= 0,
        // (Y+ + Y-)_ii = 1}; any feasible value lower-bounds the primal.
        best_lower = std::max(best_lower, (b.cwiseProduct(ym_t - yp_t)).sum());
      }
    }

    const double gap_target = 2e-3 * std::max(best_upper, 1e-12);
    if (best_upper - best_lower <= gap_target) break;
    tau *= 0.15;
    if (tau < 1e-280) break;
  }

  // Analytic floors that every feasible h obeys: h_i >= |b_ii| coordinatewise,
  // and the diagonal cone is a subset of the full PSD cone whose optimum is
  // the sum of absolute eigenvalues.
  double floor = b.diagonal().cwiseAbs().sum();
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
    floor = std::max(floor, es.eigenvalues().cwiseAbs().sum());
  }
  best_lower = std::max(best_lower, floor);
  best_lower = std::min(best_lower, best_upper);

  if (best_upper - best_lower > 0.01 * std::max(best_upper, 1e-12)) {
    throw NumericalError("diag_cone_trace_min: bracket gap above one percent");
  }
  return ValueBracket{scale * best_lower, scale * best_upper, false};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Smoothness constants of a quadratic with Hessian A
// ---------------------------------------------------------------------------

// Smallest trace of a set member H with -H <= A <= H: the curvature constant
// of the set's geometry for a quadratic with Hessian A.
inline ValueBracket adaptive_smoothness(const PreconditionerSet& set, const SymMatrix& a) {
  if (a.dim() != set.dim) throw InvalidInput("adaptive_smoothness: dimension mismatch");
  switch (set.kind) {
    case SetKind::Full: {
      const EigDecomp e = eig_sym(a);
      return ValueBracket::point(e.eigenvalues.cwiseAbs().sum());
    }
    case SetKind::Scalar:
      return ValueBracket::point(static_cast<double>(set.dim) * op_norm(a));
    case SetKind::Diagonal: {
      Eigen::MatrixXd off = a.mat();
      off.diagonal().setZero();
      if (off.cwiseAbs().maxCoeff() == 0.0) {
        return ValueBracket::point(a.mat().diagonal().cwiseAbs().sum());
      }
      if (set.dim > 6) {
        throw Unsupported(
            "adaptive_smoothness: diagonal cone with a non-diagonal matrix is only bracketed up "
            "to dimension 6");
      }
      return detail::diag_cone_trace_min(a.mat());
    }
    case SetKind::KronLeft:
      throw Unsupported("adaptive_smoothness: no oracle for Kronecker-factored sets");
  }
  throw InvalidInput("adaptive_smoothness: unknown set kind");
}

// Lipschitz constant of x -> A x from the set's norm to its dual norm.
inline double standard_smoothness(const PreconditionerSet& set, const SymMatrix& a) {
  if (a.dim() != set.dim) throw InvalidInput("standard_smoothness: dimension mismatch");
  switch (set.kind) {
    case SetKind::Full:
      return op_norm(a);
    case SetKind::Scalar:
      return static_cast<double>(set.dim) * op_norm(a);
    case SetKind::Diagonal: {
      const int d = set.dim;
      if (d > 15) {
        throw Unsupported("standard_smoothness: diagonal enumeration limited to dimension 15");
      }
      // max-norm to l1-norm operator norm: attained at a sign vector, so
      // enumerate s in {-1,+1}^d and take the largest ||A s||_1.
      double best = 0.0;
      Eigen::VectorXd s(d);
      const std::uint64_t count = std::uint64_t{1} << d;
      for (std::uint64_t mask = 0; mask < count; ++mask) {
        for (int i = 0; i < d; ++i) s[i] = (mask >> i) & 1 ? 1.0 : -1.0;
        best = std::max(best, (a.mat() * s).lpNorm<1>());
      }
      return best;
    }
    case SetKind::KronLeft:
      throw Unsupported("standard_smoothness: no closed form for Kronecker-factored sets");
  }
  throw InvalidInput("standard_smoothness: unknown set kind");
}

struct SmoothnessReport {
  PreconditionerSet set;
  ValueBracket adaptive;
  double standard = 0.0;
  std::string method;  // "exact", "enumeration", or "certified-bracket"
};

inline SmoothnessReport smoothness_report(const PreconditionerSet& set, const SymMatrix& a) {
  SmoothnessReport r{set, adaptive_smoothness(set, a), standard_smoothness(set, a), "exact"};
  if (!r.adaptive.exact) {
    r.method = "certified-bracket";
  } else if (set.kind == SetKind::Diagonal) {
    r.method = "enumeration";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Gradient-variance constants
// ---------------------------------------------------------------------------

// Stationary-noise variance constant of the set: the trace of the root of the
// projected covariance (equivalently the minimized quadratic-form bound over
// unit-trace members).
inline double adaptive_variance(const PreconditionerSet& set, const SymMatrix& sigma) {
  if (sigma.dim() != set.dim) throw InvalidInput("adaptive_variance: dimension mismatch");
  if (!is_psd(sigma)) throw NotPsd("adaptive_variance: covariance must be PSD");
  return project_PH(set, sigma).root.trace();
}

struct DualVarianceEstimate {
  double mean_sq = 0.0;  // Monte-Carlo mean of the squared dual-norm deviation
  double ci_lo = 0.0;    // 95% normal-approximation interval
  double ci_hi = 0.0;
  long samples = 0;
};

inline DualVarianceEstimate estimate_dual_variance(const PreconditionerSet& set,
                                                   const NoiseModel& noise, long samples,
                                                   std::uint64_t seed) {
  if (samples < 1000) throw InvalidInput("estimate_dual_variance: need at least 1000 samples");
  const int d = set.dim;
  const Eigen::VectorXd mean = noise.mean(d);
  double m = 0.0, m2 = 0.0;  // running mean and sum of squared deviations
  for (long k = 0; k < samples; ++k) {
    const Eigen::VectorXd delta = noise.draw(seed, static_cast<std::uint64_t>(k), d) - mean;
    const double nd = dual_norm(set, delta);
    const double v = nd * nd;
    const double prev = m;
    m += (v - m) / static_cast<double>(k + 1);
    m2 += (v - prev) * (v - m);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  const double half = 1.959963984540054 * std::sqrt(var / static_cast<double>(samples));
  return DualVarianceEstimate{m, m - half, m + half, samples};
}

struct VarianceReport {
  PreconditionerSet set;
  double adaptive = 0.0;  // sigma constant from the exact covariance
  DualVarianceEstimate dual;
};

inline VarianceReport variance_report(const PreconditionerSet& set, const NoiseModel& noise,
                                      long samples, std::uint64_t seed) {
  return VarianceReport{set, adaptive_variance(set, noise.covariance(set.dim)),
                        estimate_dual_variance(set, noise, samples, seed)};
}

// Product of the two extreme ratios between the set's dual norm and the
// Euclidean norm.
inline double norm_distortion(const PreconditionerSet& set) {
  switch (set.kind) {
    case SetKind::Scalar: return 1.0;
    case SetKind::Diagonal: return std::sqrt(static_cast<double>(set.dim));
    case SetKind::Full: return 1.0;
    case SetKind::KronLeft: return std::sqrt(static_cast<double>(std::min(set.dL, set.dR)));
  }
  throw InvalidInput("norm_distortion: unknown set kind");
}

// ---------------------------------------------------------------------------
// Matrix-inequality validators
// ---------------------------------------------------------------------------

struct IneqVerdict {
  bool holds = false;
  double min_eig_residual = 0.0;  // lambda_min(RHS - LHS); >= -tol means holds
};

namespace detail {

inline SymMatrix inv_sqrt_pd(const SymMatrix& x, const char* who) {
  const EigDecomp e = eig_sym(x);
  if (e.eigenvalues[0] <= 0.0) {
    throw InvalidInput(std::string(who) + ": matrix must be strictly positive definite");
  }
  return spectral_map(e, [](double l) { return 1.0 / std::sqrt(l); });
}

inline IneqVerdict psd_verdict(const SymMatrix& lhs, const SymMatrix& rhs) {
  const SymMatrix r = rhs - lhs;
  const double residual = eig_sym(r).eigenvalues[0];
  const double scale = std::max({1.0, op_norm(lhs), op_norm(rhs)});
  return IneqVerdict{residual >= -1e-8 * scale, residual};
}

}  // namespace detail

// Checks that X^{-1/2}(X-Y)X^{-1/2} is dominated by the log-difference term
// plus the trace remainder, for parameters 0 <= c <= C.
inline IneqVerdict check_log_inequality(const SymMatrix& x, const SymMatrix& y, double c,
                                        double C) {
  if (x.dim() != y.dim()) throw InvalidInput("check_log_inequality: dimension mismatch");
  if (!(c >= 0.0) || !(C >= c) || !(C > 0.0) || !std::isfinite(c) || !std::isfinite(C)) {
    throw InvalidInput("check_log_inequality: need 0 <= c <= C with C > 0");
  }
  const int d = x.dim();
  const EigDecomp ex = eig_sym(x);
  const EigDecomp ey = eig_sym(y);
  const double xscale = std::max(1.0, detail::spectral_scale(ex));
  if (ey.eigenvalues[0] <= 1e-14 * xscale) {
    throw InvalidInput("check_log_inequality: Y must be strictly positive definite");
  }
  if (!loewner_leq(y, x, 1e-9)) {
    throw InvalidInput("check_log_inequality: ordering Y <= X violated");
  }
  if (c == 0.0) {
    // The log-difference coefficient diverges while log X - log Y stays PSD
    // by operator monotonicity, so the bound holds vacuously.
    return IneqVerdict{true, std::numeric_limits<double>::infinity()};
  }
  const SymMatrix xir = detail::inv_sqrt_pd(x, "check_log_inequality");
  const SymMatrix lhs = SymMatrix(xir.mat() * (x - y).mat() * xir.mat());
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double k1 = 3.0 * (std::log(C) - std::log(c)) / pi2;
  const double lmin_x = ex.eigenvalues[0];
  const double k2 = (12.0 * c * d / (pi2 * lmin_x * lmin_x) + 12.0 * d / (C * pi2)) *
                    (x - y).trace();
  const SymMatrix rhs =
      (k1 * (log_psd(x) - log_psd(y))).add_scaled_identity(k2);
  return detail::psd_verdict(lhs, rhs);
}

// Same bound in derivative form: X^{-1/2} A X^{-1/2} against the directional
// log derivative plus the trace remainder.
inline IneqVerdict check_dlog_inequality(const SymMatrix& x, const SymMatrix& a, double c,
                                         double C) {
  if (x.dim() != a.dim()) throw InvalidInput("check_dlog_inequality: dimension mismatch");
  if (!(c >= 0.0) || !(C >= c) || !(C > 0.0) || !std::isfinite(c) || !std::isfinite(C)) {
    throw InvalidInput("check_dlog_inequality: need 0 <= c <= C with C > 0");
  }
  const int d = x.dim();
  const EigDecomp ex = eig_sym(x);
  if (ex.eigenvalues[0] <= 0.0) {
    throw InvalidInput("check_dlog_inequality: X must be strictly positive definite");
  }
  if (!is_psd(a)) throw InvalidInput("check_dlog_inequality: A must be PSD");
  if (c == 0.0) {
    return IneqVerdict{true, std::numeric_limits<double>::infinity()};
  }
  const SymMatrix xir = detail::inv_sqrt_pd(x, "check_dlog_inequality");
  const SymMatrix lhs = SymMatrix(xir.mat() * a.mat() * xir.mat());
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double k1 = 3.0 * (std::log(C) - std::log(c)) / pi2;
  const double lmin_x = ex.eigenvalues[0];
  const double k2 =
      (12.0 * c * d / (pi2 * lmin_x * lmin_x) + 12.0 * d / (C * pi2)) * a.trace();
  const SymMatrix rhs = (k1 * dlog(x, a)).add_scaled_identity(k2);
  return detail::psd_verdict(lhs, rhs);
}

// ---------------------------------------------------------------------------
// Second-order sums
// ---------------------------------------------------------------------------

// Preconditioner-root sequence generated by a gradient stream: M_t is the
// beta-weighted accumulation of g g', and V_t the projected root of M_t+eps I.
inline std::vector<SymMatrix> v_sequence_from_gradients(const PreconditionerSet& set,
                                                        const std::vector<Eigen::VectorXd>& gs,
                                                        double beta, double eps) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw InvalidInput("v_sequence_from_gradients: beta must lie in [0, 1]");
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw InvalidInput("v_sequence_from_gradients: eps must be finite and >= 0");
  }
  std::vector<SymMatrix> out;
  out.reserve(gs.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(set.dim, set.dim);
  for (const auto& g : gs) {
    if (g.size() != set.dim) {
      throw InvalidInput("v_sequence_from_gradients: gradient dimension mismatch");
    }
    m = beta * m + g * g.transpose();
    out.push_back(project_PH(set, SymMatrix(m).add_scaled_identity(eps)).root);
  }
  return out;
}

// S_T = sum_t V_t^{-1} (V_t^2 - beta V_{t-1}^2) V_t^{-1} with V_{-1}^2 = eps I.
inline SymMatrix compute_S_T(const std::vector<SymMatrix>& v, double beta, double eps) {
  if (v.empty()) throw InvalidInput("compute_S_T: empty sequence");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("compute_S_T: beta must lie in [0, 1]");
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw InvalidInput("compute_S_T: eps must be finite and >= 0");
  }
  const int d = v.front().dim();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd prev_sq = eps * Eigen::MatrixXd::Identity(d, d);
  for (const auto& vt : v) {
    if (vt.dim() != d) throw InvalidInput("compute_S_T: dimension mismatch in sequence");
    const EigDecomp e = eig_sym(vt);
    if (e.eigenvalues[0] <= 0.0) {
      throw SingularPreconditioner("compute_S_T: sequence entry is not invertible");
    }
    const SymMatrix inv = detail::spectral_map(e, [](double l) { return 1.0 / l; });
    const Eigen::MatrixXd sq = vt.mat() * vt.mat();
    s += inv.mat() * (sq - beta * prev_sq) * inv.mat();
    prev_sq = sq;
  }
  return SymMatrix(s);
}

struct StBoundVerdict {
  double lhs = 0.0;  // operator norm of S_T
  double rhs = 0.0;  // (1-beta) T + log(op-norm of V_{T-1}^2 / eps)
  bool holds = false;
};

// For commuting (scalar/diagonal) sets the operator norm of S_T telescopes
// into (1-beta) T plus the log of the final preconditioner square over eps.
inline StBoundVerdict check_ST_bound_commutative(const PreconditionerSet& set,
                                                 const std::vector<SymMatrix>& v, double beta,
                                                 double eps) {
  if (set.kind != SetKind::Scalar && set.kind != SetKind::Diagonal) {
    throw Unsupported("check_ST_bound_commutative: requires a commutative set");
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw InvalidInput("check_ST_bound_commutative: eps must be finite and > 0");
  }
  if (v.empty()) throw InvalidInput("check_ST_bound_commutative: empty sequence");
  for (const auto& vt : v) {
    const SymMatrix proj = detail::subspace_project(set, vt);
    if ((vt.mat() - proj.mat()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, vt.frobenius())) {
      throw InvalidInput("check_ST_bound_commutative: sequence entry outside the set");
    }
  }
  const SymMatrix s = compute_S_T(v, beta, eps);
  const double lhs = op_norm(s);
  const double t = static_cast<double>(v.size());
  const double last_sq = op_norm(v.back());
  const double rhs = (1.0 - beta) * t + std::log(last_sq * last_sq / eps);
  const bool holds = lhs <= rhs * (1.0 + 1e-10) + 1e-12;
  return StBoundVerdict{lhs, rhs, holds};
}

struct SecondOrderVerdict {
  double lhs = 0.0;  // sum of squared H-norms of the preconditioned gradients
  double rhs = 0.0;  // Tr(H) times the operator norm of S_T
  bool holds = false;
};

// Verifies sum_t ||V_t^{-1} g_t||_H^2 <= Tr(H) ||S_T||_op on a gradient stream.
inline SecondOrderVerdict check_second_order_sum(const std::vector<Eigen::VectorXd>& gs,
                                                 const PreconditionerSet& set, double beta,
                                                 double eps, const SymMatrix& h) {
  if (h.dim() != set.dim) throw InvalidInput("check_second_order_sum: dimension mismatch");
  const SymMatrix proj = detail::subspace_project(set, h);
  if ((h.mat() - proj.mat()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, h.frobenius())) {
    throw InvalidInput("check_second_order_sum: H outside the set's cone");
  }
  if (eig_sym(h).eigenvalues[0] <= 0.0) {
    throw InvalidInput("check_second_order_sum: H must be strictly positive definite");
  }
  if (gs.empty()) throw InvalidInput("check_second_order_sum: empty gradient stream");
  const std::vector<SymMatrix> v = v_sequence_from_gradients(set, gs, beta, eps);
  double lhs = 0.0;
  for (std::size_t t = 0; t < gs.size(); ++t) {
    const EigDecomp e = eig_sym(v[t]);
    if (e.eigenvalues[0] <= 0.0) {
      throw SingularPreconditioner("check_second_order_sum: singular preconditioner");
    }
    const Eigen::VectorXd u =
        detail::spectral_map(e, [](double l) { return 1.0 / l; }).apply(gs[t]);
    lhs += h.quad_form(u);
  }
  const double rhs = h.trace() * op_norm(compute_S_T(v, beta, eps));
  const bool holds = lhs <= rhs * (1.0 + 1e-10) + 1e-12;
  return SecondOrderVerdict{lhs, rhs, holds};
}

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

// Least-squares slope of log(y) against log(t) over the supplied points.
inline double rate_fit(const std::vector<double>& ts, const std::vector<double>& ys) {
  if (ts.size() != ys.size()) throw InvalidInput("rate_fit: size mismatch");
  if (ts.size() < 8) throw InvalidInput("rate_fit: need at least 8 points");
  const std::size_t n = ts.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ts[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(ts[i]) || !std::isfinite(ys[i])) {
      throw InvalidInput("rate_fit: points must be finite and positive");
    }
    lx[i] = std::log(ts[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw InvalidInput("rate_fit: degenerate abscissae");
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// Smoothness sandwich
// ---------------------------------------------------------------------------

struct SandwichVerdict {
  bool supported = false;
  bool holds = false;
  ValueBracket adaptive;
  double standard = 0.0;
};

// The two smoothness constants can differ by at most a factor of the
// dimension: standard <= adaptive <= d * standard. Bracketed adaptive values
// are checked against the permissive ends of the bracket.
inline SandwichVerdict smoothness_sandwich_check(const PreconditionerSet& set,
                                                 const SymMatrix& a) {
  SandwichVerdict v;
  try {
    v.adaptive = adaptive_smoothness(set, a);
    v.standard = standard_smoothness(set, a);
  } catch (const Unsupported&) {
    v.supported = false;
    v.holds = true;  // nothing to check
    return v;
  }
  v.supported = true;
  const double rtol = 1e-9;
  const double atol = 1e-12;
  const double d = static_cast<double>(set.dim);
  v.holds = v.standard <= v.adaptive.hi * (1.0 + rtol) + atol &&
            v.adaptive.lo <= d * v.standard * (1.0 + rtol) + atol;
  return v;
}

}  // namespace precopt
