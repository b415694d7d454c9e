#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include <precopt/errors.hpp>
#include <precopt/rng.hpp>
#include <precopt/sym.hpp>

namespace precopt {

// Objective suite with analytic constants: quadratics with explicit Hessians,
// a separable periodic ("washboard") objective, a lower-bound instance whose
// gradient stays flat on a protected lattice, and the stochastic-gradient
// noise models shared by all of them.

// ---------------------------------------------------------------------------
// Noise models
// ---------------------------------------------------------------------------

enum class NoiseKind { None, GaussianIso, GaussianCov, BernoulliSpike };

// Additive gradient noise. A draw is a pure function of (seed, t, coordinate),
// so oracles are reproducible and safe to evaluate concurrently.
class NoiseModel {
 public:
  static NoiseModel none() { return NoiseModel(NoiseKind::None); }

  // Independent N(0, variance) per coordinate.
  static NoiseModel gaussian_iso(double variance) {
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
      throw InvalidInput("gaussian_iso: variance must be finite and >= 0");
    }
    NoiseModel m(NoiseKind::GaussianIso);
    m.variance_ = variance;
    return m;
  }

  // Jointly Gaussian with covariance sigma (must be positive semidefinite).
  static NoiseModel gaussian_cov(const SymMatrix& sigma) {
    if (!is_psd(sigma)) throw NotPsd("gaussian_cov: covariance must be PSD");
    NoiseModel m(NoiseKind::GaussianCov);
    m.cov_ = sigma;
    m.cov_root_ = sqrt_psd(sigma);
    return m;
  }

  // Coordinate i gets -c with probability theta (else 0), plus drift_i.
  // With drift = c*theta*1 the draw has mean zero, so the oracle is unbiased.
  static NoiseModel bernoulli_spike(double c, double theta, Eigen::VectorXd drift) {
    if (!std::isfinite(c) || !(theta >= 0.0 && theta <= 1.0)) {
      throw InvalidInput("bernoulli_spike: need finite c and theta in [0, 1]");
    }
    if (!drift.allFinite()) throw InvalidInput("bernoulli_spike: drift must be finite");
    NoiseModel m(NoiseKind::BernoulliSpike);
    m.spike_c_ = c;
    m.spike_theta_ = theta;
    m.drift_ = std::move(drift);
    return m;
  }

  NoiseKind kind() const { return kind_; }
  bool deterministic() const { return kind_ == NoiseKind::None; }

  double variance() const { return variance_; }
  double spike_magnitude() const { return spike_c_; }
  double spike_probability() const { return spike_theta_; }
  const Eigen::VectorXd& drift() const { return drift_; }
  const SymMatrix& cov() const {
    if (kind_ != NoiseKind::GaussianCov) throw InvalidInput("cov(): not a GaussianCov model");
    return *cov_;
  }

  // One noise vector; coordinate i depends only on the key (seed, t, i).
  Eigen::VectorXd draw(std::uint64_t seed, std::uint64_t t, Eigen::Index dim) const {
    check_dim(dim);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    switch (kind_) {
      case NoiseKind::None:
        break;
      case NoiseKind::GaussianIso: {
        const double s = std::sqrt(variance_);
        for (Eigen::Index i = 0; i < dim; ++i) {
          out[i] = s * keyed_normal(seed, RngStream::kNoise, t, static_cast<std::uint64_t>(i));
        }
        break;
      }
      case NoiseKind::GaussianCov: {
        Eigen::VectorXd z(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
          z[i] = keyed_normal(seed, RngStream::kNoise, t, static_cast<std::uint64_t>(i));
        }
        out = cov_root_->mat() * z;
        break;
      }
      case NoiseKind::BernoulliSpike: {
        for (Eigen::Index i = 0; i < dim; ++i) {
          const bool hit = keyed_bernoulli(spike_theta_, seed, RngStream::kNoise, t,
                                           static_cast<std::uint64_t>(i));
          out[i] = (hit ? -spike_c_ : 0.0) + drift_i(i);
        }
        break;
      }
    }
    return out;
  }

  Eigen::VectorXd mean(Eigen::Index dim) const {
    check_dim(dim);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    if (kind_ == NoiseKind::BernoulliSpike) {
      for (Eigen::Index i = 0; i < dim; ++i) m[i] = -spike_c_ * spike_theta_ + drift_i(i);
    }
    return m;
  }

  // Exact covariance (second moment about the mean).
  SymMatrix covariance(Eigen::Index dim) const {
    check_dim(dim);
    switch (kind_) {
      case NoiseKind::None:
        return SymMatrix::Zero(dim);
      case NoiseKind::GaussianIso:
        return SymMatrix::Scaled(dim, variance_);
      case NoiseKind::GaussianCov:
        return *cov_;
      case NoiseKind::BernoulliSpike: {
        const double v = spike_c_ * spike_c_ * spike_theta_ * (1.0 - spike_theta_);
        return SymMatrix::Scaled(dim, v);
      }
    }
    throw InvalidInput("covariance: unknown noise kind");
  }

 private:
  explicit NoiseModel(NoiseKind k) : kind_(k) {}

  void check_dim(Eigen::Index dim) const {
    if (dim < 1) throw InvalidInput("noise draw: dimension must be >= 1");
    if (kind_ == NoiseKind::GaussianCov && dim != cov_->dim()) {
      throw InvalidInput("noise draw: dimension does not match covariance");
    }
    if (kind_ == NoiseKind::BernoulliSpike && drift_.size() != 0 && drift_.size() != dim) {
      throw InvalidInput("noise draw: dimension does not match drift vector");
    }
  }

  double drift_i(Eigen::Index i) const { return drift_.size() == 0 ? 0.0 : drift_[i]; }

  NoiseKind kind_;
  double variance_ = 0.0;                 // GaussianIso
  std::optional<SymMatrix> cov_;          // GaussianCov
  std::optional<SymMatrix> cov_root_;     // cached PSD square root of cov_
  double spike_c_ = 0.0;                  // BernoulliSpike magnitude
  double spike_theta_ = 0.0;              // BernoulliSpike probability
  Eigen::VectorXd drift_;                 // BernoulliSpike deterministic offset
};

// ---------------------------------------------------------------------------
// Quadratic objective: f(x) = 0.5 x'Ax - b'x, gradient Ax - b.
// ---------------------------------------------------------------------------

class QuadraticProblem {
 public:
  QuadraticProblem(SymMatrix a, Eigen::VectorXd b, NoiseModel noise = NoiseModel::none())
      : a_(std::move(a)), b_(std::move(b)), noise_(std::move(noise)) {
    if (b_.size() != a_.dim()) throw InvalidInput("quadratic: dim(b) must equal dim(A)");
    if (!b_.allFinite()) throw InvalidInput("quadratic: b must be finite");
    solve_stationary();
  }

  Eigen::Index dim() const { return a_.dim(); }
  const SymMatrix& hessian() const { return a_; }
  const Eigen::VectorXd& linear_term() const { return b_; }
  const NoiseModel& noise() const { return noise_; }

  double loss(const Eigen::VectorXd& x) const {
    check_dim(x);
    return 0.5 * x.dot(a_.apply(x)) - b_.dot(x);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    check_dim(x);
    return a_.apply(x) - b_;
  }

  // Least-norm stationary point; valid as a minimizer when A is PSD and the
  // system Ax = b is consistent.
  const Eigen::VectorXd& x_star() const { return x_star_; }
  bool stationary_consistent() const { return consistent_; }
  double f_star() const {
    if (!consistent_) throw InvalidInput("f_star: Ax = b has no solution");
    return loss(x_star_);
  }

 private:
  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw InvalidInput("quadratic: dimension mismatch");
  }

  void solve_stationary() {
    const EigDecomp ed = eig_sym(a_);
    const double scale = ed.eigenvalues.cwiseAbs().maxCoeff();
    const double cut = 1e-12 * std::max(1.0, scale);
    Eigen::VectorXd coeffs = ed.eigenvectors.transpose() * b_;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
      coeffs[i] = (std::abs(ed.eigenvalues[i]) > cut) ? coeffs[i] / ed.eigenvalues[i] : 0.0;
    }
    x_star_ = ed.eigenvectors * coeffs;
    const double resid = (a_.apply(x_star_) - b_).norm();
    consistent_ = resid <= 1e-10 * std::max(1.0, b_.norm() + scale * x_star_.norm());
  }

  SymMatrix a_;
  Eigen::VectorXd b_;
  NoiseModel noise_;
  Eigen::VectorXd x_star_;
  bool consistent_ = false;
};

// ---------------------------------------------------------------------------
// Washboard objective: f(x) = (1/d) * sum_i q(x_i - c_i) with q' a triangle
// wave of period 4a. q is C^1, q' is 1-Lipschitz, and f has smoothness
// exactly 1 in the sup norm while its gradient map is 1-Lipschitz from
// sup norm to l1. Minima form a lattice, so min-gradient decay of a method
// stepping on this landscape is governed purely by the step size.
// ---------------------------------------------------------------------------

class WashboardProblem {
 public:
  WashboardProblem(Eigen::Index dim, double amplitude, Eigen::VectorXd offsets,
                   NoiseModel noise = NoiseModel::none())
      : dim_(dim), a_(amplitude), c_(std::move(offsets)), noise_(std::move(noise)) {
    if (dim_ < 1) throw InvalidInput("washboard: dimension must be >= 1");
    if (!(a_ > 0.0) || !std::isfinite(a_)) throw InvalidInput("washboard: amplitude must be > 0");
    if (c_.size() != dim_ || !c_.allFinite()) {
      throw InvalidInput("washboard: offsets must be finite with length dim");
    }
  }

  // Offsets c_i = frac((i+1) * golden_ratio) * 4a: equidistributed, so no
  // coordinate starts at a special phase of the wave.
  static WashboardProblem golden(Eigen::Index dim, double amplitude,
                                 NoiseModel noise = NoiseModel::none()) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    Eigen::VectorXd c(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double t = phi * static_cast<double>(i + 1);
      c[i] = (t - std::floor(t)) * 4.0 * amplitude;
    }
    return WashboardProblem(dim, amplitude, std::move(c), std::move(noise));
  }

  Eigen::Index dim() const { return dim_; }
  double amplitude() const { return a_; }
  const Eigen::VectorXd& offsets() const { return c_; }
  const NoiseModel& noise() const { return noise_; }

  // Triangle-wave derivative on [0, 4a): rises to a, falls to -a, returns.
  double q_prime(double s) const {
    if (s <= a_) return s;
    if (s <= 3.0 * a_) return 2.0 * a_ - s;
    return s - 4.0 * a_;
  }

  // Antiderivative of q_prime with q(0) = 0; ranges over [0, a^2].
  double q_value(double s) const {
    if (s <= a_) return 0.5 * s * s;
    if (s <= 3.0 * a_) {
      return 0.5 * a_ * a_ + 2.0 * a_ * (s - a_) - 0.5 * (s * s - a_ * a_);
    }
    return 0.5 * a_ * a_ + 0.5 * (s * s - 9.0 * a_ * a_) - 4.0 * a_ * (s - 3.0 * a_);
  }

  double loss(const Eigen::VectorXd& x) const {
    check_dim(x);
    std::vector<double> terms(static_cast<std::size_t>(dim_));
    for (Eigen::Index i = 0; i < dim_; ++i) terms[static_cast<std::size_t>(i)] = q_value(phase(x, i));
    return pairwise_sum(terms) / static_cast<double>(dim_);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::VectorXd g(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) g[i] = q_prime(phase(x, i)) / static_cast<double>(dim_);
    return g;
  }

 private:
  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw InvalidInput("washboard: dimension mismatch");
  }

  double phase(const Eigen::VectorXd& x, Eigen::Index i) const {
    const double period = 4.0 * a_;
    double s = std::fmod(x[i] - c_[i], period);
    if (s < 0.0) s += period;
    return s;
  }

  Eigen::Index dim_;
  double a_;
  Eigen::VectorXd c_;
  NoiseModel noise_;
};

// ---------------------------------------------------------------------------
// Piecewise-linear derivative with protected lattice: a 1-Lipschitz function g
// equal to -epsilon at every supplied breakpoint, -epsilon left of the first
// one, and periodic with period 1/epsilon to the right. Between consecutive
// breakpoints it is a tent: slope +1 to the midpoint, slope -1 back down.
// ---------------------------------------------------------------------------

class PiecewiseDerivative {
 public:
  PiecewiseDerivative(double epsilon, const std::vector<double>& breakpoints)
      : eps_(epsilon) {
    if (!(eps_ > 0.0) || !std::isfinite(eps_)) {
      throw InvalidInput("piecewise derivative: epsilon must be finite and > 0");
    }
    if (breakpoints.empty()) {
      throw InvalidInput("piecewise derivative: need at least one breakpoint");
    }
    for (double b : breakpoints) {
      if (!std::isfinite(b)) throw InvalidInput("piecewise derivative: non-finite breakpoint");
    }
    std::vector<double> pts = breakpoints;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    // The one-period integral of g is nonnegative only while the breakpoint
    // count stays at or below 1/(4 eps^2); beyond that the construction loses
    // its bounded-depth guarantee.
    if (static_cast<double>(pts.size()) > 1.0 / (4.0 * eps_ * eps_)) {
      throw ConstructionInfeasible("piecewise derivative: too many breakpoints for epsilon");
    }
    x0_ = pts.front();
    period_ = 1.0 / eps_;
    knots_.reserve(pts.size());
    for (double b : pts) {
      double r = std::fmod(b - x0_, period_);  // exact: fmod incurs no rounding
      knots_.push_back(x0_ + r);
    }
    std::sort(knots_.begin(), knots_.end());
    knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
  }

  double epsilon() const { return eps_; }
  double x0() const { return x0_; }
  double period() const { return period_; }
  const std::vector<double>& knots() const { return knots_; }

  double operator()(double x) const {
    if (!(x >= x0_)) return -eps_;  // left plateau (also covers NaN input -> -eps)
    double r = std::fmod(x - x0_, period_);
    const double y = x0_ + r;
    // Locate the segment [y_t, y_{t+1}) containing y; the final segment closes
    // the period at x0 + 1/eps.
    auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
    const std::size_t seg = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double lo = knots_[seg];
    const double hi = (seg + 1 < knots_.size()) ? knots_[seg + 1] : x0_ + period_;
    const double mid = 0.5 * (lo + hi);
    return (y <= mid) ? (-eps_ + (y - lo)) : (-eps_ - (y - hi));
  }

  // Antiderivative p with p(x0) = 0, by trapezoidal integration from x0 with
  // step 1e-4 / eps; the one-period integral is cached so far-field values
  // cost one partial period.
  double antiderivative(double x) const {
    if (x < x0_) return eps_ * (x0_ - x);  // g = -eps on the left plateau
    const double span = x - x0_;
    double periods = std::floor(span / period_);
    double r = span - periods * period_;
    if (r >= period_) {  // guard the floating-point edge at exact multiples
      r -= period_;
      periods += 1.0;
    }
    return periods * period_integral() + partial_integral(r);
  }

  double period_integral() const {
    if (!period_integral_) period_integral_ = partial_integral(period_);
    return *period_integral_;
  }

 private:
  // Trapezoid rule for the integral of g over [x0, x0 + span], step 1e-4/eps.
  double partial_integral(double span) const {
    if (span <= 0.0) return 0.0;
    const double step = 1e-4 / eps_;
    const auto n = static_cast<std::size_t>(std::ceil(span / step));
    const double h = span / static_cast<double>(n);
    std::vector<double> terms(n);
    double prev = (*this)(x0_);
    for (std::size_t k = 1; k <= n; ++k) {
      const double cur = (*this)(x0_ + h * static_cast<double>(k));
      terms[k - 1] = 0.5 * h * (prev + cur);
      prev = cur;
    }
    return pairwise_sum(terms);
  }

  double eps_;
  double x0_ = 0.0;
  double period_ = 0.0;
  std::vector<double> knots_;
  mutable std::optional<double> period_integral_;
};

inline PiecewiseDerivative build_p_prime(double epsilon, const std::vector<double>& breakpoints) {
  return PiecewiseDerivative(epsilon, breakpoints);
}

// ---------------------------------------------------------------------------
// Lower-bound instance. Works on a unit scale internally (initial gap and
// sup-norm smoothness both 1) and maps to the requested (delta0, lsmooth)
// scale by f(x) = delta0 * h(sqrt(lsmooth/delta0) * x). The mean gradient is
// exactly -eps/d per coordinate on the lattice {0, eta_u, ..., (N-1)eta_u}
// protected against the supplied learning rate, and the stochastic oracle
// adds rare spikes of size -c plus a drift that cancels their mean.
// ---------------------------------------------------------------------------

class HardInstance {
 public:
  HardInstance(Eigen::Index d, long horizon, double delta0, double lsmooth, double sigma,
               double eta)
      : d_(d), horizon_(horizon), delta0_(delta0), lsmooth_(lsmooth), sigma_(sigma), eta_(eta) {
    if (d_ < 1) throw InvalidInput("hard instance: dimension must be >= 1");
    if (horizon_ < 1) throw InvalidInput("hard instance: horizon must be >= 1");
    if (!(delta0_ > 0.0) || !(lsmooth_ > 0.0) || !(eta_ > 0.0) ||
        !std::isfinite(delta0_) || !std::isfinite(lsmooth_) || !std::isfinite(eta_)) {
      throw InvalidInput("hard instance: delta0, lsmooth, eta must be finite and > 0");
    }
    // The spike probability is proportional to sigma^(-2) * eps^2 with
    // eps itself proportional to a positive power of sigma, so sigma = 0
    // degenerates to a spike-free oracle and is rejected.
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
      throw InvalidInput("hard instance: sigma must be finite and > 0");
    }

    scale_x_ = std::sqrt(lsmooth_ / delta0_);   // x (native) -> u (unit scale)
    scale_g_ = std::sqrt(delta0_ * lsmooth_);   // unit-scale gradient -> native
    sigma_u_ = sigma_ / scale_g_;
    eta_u_ = eta_ * scale_x_;

    const double t = static_cast<double>(horizon_);
    eps_ = std::min(std::pow(static_cast<double>(d_), 0.25) * std::sqrt(sigma_u_) /
                        (std::pow(5.0, 0.25) * std::sqrt(t)),
                    sigma_u_ / std::sqrt(5.0));
    c_ = sigma_u_ * sigma_u_ / (5.0 * eps_);
    theta_ = 5.0 * eps_ * eps_ / (static_cast<double>(d_) * sigma_u_ * sigma_u_);
    n_ = static_cast<long>(std::floor(1.0 / (4.0 * eps_ * eps_)));
    if (n_ < 1) {
      throw ConstructionInfeasible("hard instance: no room for breakpoints at this epsilon");
    }

    std::vector<double> lattice(static_cast<std::size_t>(n_));
    for (long k = 0; k < n_; ++k) {
      lattice[static_cast<std::size_t>(k)] = static_cast<double>(k) * eta_u_;
    }
    p_prime_.emplace(eps_, lattice);
  }

  Eigen::Index dim() const { return d_; }
  long horizon() const { return horizon_; }
  double delta0() const { return delta0_; }
  double lsmooth() const { return lsmooth_; }
  double sigma() const { return sigma_; }
  double eta() const { return eta_; }

  double eps() const { return eps_; }
  double spike_magnitude() const { return c_; }
  double spike_probability() const { return theta_; }
  long lattice_size() const { return n_; }
  double eta_unit() const { return eta_u_; }
  double sigma_unit() const { return sigma_u_; }
  const PiecewiseDerivative& p_prime() const { return *p_prime_; }

  // Start point is pinned to the origin: the protected lattice is anchored
  // there, so any other start voids the construction.
  Eigen::VectorXd initial_point() const { return Eigen::VectorXd::Zero(d_); }

  void validate_start(const Eigen::VectorXd& x) const {
    if (x.size() != d_ || !(x.array() == 0.0).all()) {
      throw InvalidInput("hard instance: start point must be exactly zero");
    }
  }

  // Noise on the unit scale, as a reusable model: spikes of -c with
  // probability theta, drift c * theta per coordinate (mean zero).
  NoiseModel noise_unit() const {
    return NoiseModel::bernoulli_spike(c_, theta_,
                                       Eigen::VectorXd::Constant(d_, c_ * theta_));
  }

  // Same model expressed on the native scale (spike and drift times scale_g).
  NoiseModel noise_native() const {
    const double cn = scale_g_ * c_;
    return NoiseModel::bernoulli_spike(cn, theta_, Eigen::VectorXd::Constant(d_, cn * theta_));
  }

  // Exact covariance of the native-scale stochastic gradient about its mean.
  SymMatrix noise_covariance() const {
    const double v = scale_g_ * scale_g_ * c_ * c_ * theta_ * (1.0 - theta_);
    return SymMatrix::Scaled(d_, v);
  }

  double loss(const Eigen::VectorXd& x) const {
    check_dim(x);
    std::vector<double> terms(static_cast<std::size_t>(d_));
    for (Eigen::Index i = 0; i < d_; ++i) {
      terms[static_cast<std::size_t>(i)] = p_prime_->antiderivative(scale_x_ * x[i]);
    }
    return delta0_ * (pairwise_sum(terms) / static_cast<double>(d_));
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::VectorXd g(d_);
    const double dd = static_cast<double>(d_);
    for (Eigen::Index i = 0; i < d_; ++i) {
      g[i] = scale_g_ * ((*p_prime_)(scale_x_ * x[i]) / dd);
    }
    return g;
  }

  // Stochastic gradient at step t. Per coordinate, on the unit scale:
  //   g_i = p'(u_i)/d + eps/d + spike_i,   spike_i in {0, -c}.
  // The drift eps/d cancels the spike mean c*theta = eps/d. On the lattice
  // p'(u_i) is bitwise -eps, so spike-free coordinates are exactly zero.
  Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& x, std::uint64_t t,
                                      std::uint64_t seed) const {
    check_dim(x);
    Eigen::VectorXd g(d_);
    const double dd = static_cast<double>(d_);
    const double drift = eps_ / dd;
    for (Eigen::Index i = 0; i < d_; ++i) {
      const double base = (*p_prime_)(scale_x_ * x[i]) / dd + drift;
      const bool hit =
          keyed_bernoulli(theta_, seed, RngStream::kNoise, t, static_cast<std::uint64_t>(i));
      g[i] = scale_g_ * (base + (hit ? -c_ : 0.0));
    }
    return g;
  }

  // Value of the sampled loss f_t(x) = f(x) + <noise_t, x> on the native scale.
  double stochastic_loss(const Eigen::VectorXd& x, std::uint64_t t, std::uint64_t seed) const {
    check_dim(x);
    const double dd = static_cast<double>(d_);
    double lin = 0.0;
    for (Eigen::Index i = 0; i < d_; ++i) {
      const bool hit =
          keyed_bernoulli(theta_, seed, RngStream::kNoise, t, static_cast<std::uint64_t>(i));
      lin += ((hit ? -c_ : 0.0) + eps_ / dd) * x[i];
    }
    return loss(x) + scale_g_ * lin;
  }

  // Theoretical floor for E[min_t ||grad f(x_t)||_1] on the native scale.
  double gradient_floor() const {
    const double e2 = std::exp(-2.0);
    const double t = static_cast<double>(horizon_);
    const double first = e2 * std::pow(5.0, -0.25) *
                         std::pow(static_cast<double>(d_) * lsmooth_ * delta0_ * sigma_ * sigma_, 0.25) /
                         std::sqrt(t);
    const double second = e2 * sigma_ / std::sqrt(5.0);
    return std::min(first, second);
  }

 private:
  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != d_) throw InvalidInput("hard instance: dimension mismatch");
  }

  Eigen::Index d_;
  long horizon_;
  double delta0_, lsmooth_, sigma_, eta_;
  double scale_x_ = 1.0, scale_g_ = 1.0;
  double sigma_u_ = 0.0, eta_u_ = 0.0;
  double eps_ = 0.0, c_ = 0.0, theta_ = 0.0;
  long n_ = 0;
  std::optional<PiecewiseDerivative> p_prime_;
};

// ---------------------------------------------------------------------------
// Problem variant and uniform oracle entry points
// ---------------------------------------------------------------------------

using Problem = std::variant<QuadraticProblem, WashboardProblem, HardInstance>;

inline Eigen::Index problem_dim(const Problem& p) {
  return std::visit([](const auto& q) { return q.dim(); }, p);
}

inline NoiseModel problem_noise(const Problem& p) {
  if (const auto* h = std::get_if<HardInstance>(&p)) return h->noise_native();
  if (const auto* q = std::get_if<QuadraticProblem>(&p)) return q->noise();
  return std::get<WashboardProblem>(p).noise();
}

inline bool problem_deterministic(const Problem& p) {
  if (std::holds_alternative<HardInstance>(p)) return false;
  return problem_noise(p).deterministic();
}

// Start-point validation: the lower-bound instance accepts only the origin;
// the others only check the dimension.
inline void validate_start(const Problem& p, const Eigen::VectorXd& x0) {
  if (x0.size() != problem_dim(p)) throw InvalidInput("start point: dimension mismatch");
  if (!x0.allFinite()) throw InvalidInput("start point: must be finite");
  if (const auto* h = std::get_if<HardInstance>(&p)) h->validate_start(x0);
}

inline double loss(const Problem& p, const Eigen::VectorXd& x) {
  const double v = std::visit([&](const auto& q) { return q.loss(x); }, p);
  if (!std::isfinite(v)) throw NumericalError("loss: non-finite value");
  return v;
}

inline Eigen::VectorXd gradient(const Problem& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd g = std::visit([&](const auto& q) { return q.gradient(x); }, p);
  if (!g.allFinite()) throw NumericalError("gradient: non-finite value");
  return g;
}

// Exact, deterministic oracle: (value, gradient).
inline std::pair<double, Eigen::VectorXd> grad(const Problem& p, const Eigen::VectorXd& x) {
  return {loss(p, x), gradient(p, x)};
}

// Stochastic oracle: unbiased, reproducible given (seed, t).
inline std::pair<double, Eigen::VectorXd> stoch_grad(const Problem& p, const Eigen::VectorXd& x,
                                                     std::uint64_t t, std::uint64_t seed) {
  if (const auto* h = std::get_if<HardInstance>(&p)) {
    Eigen::VectorXd g = h->stochastic_gradient(x, t, seed);
    const double v = h->stochastic_loss(x, t, seed);
    if (!std::isfinite(v) || !g.allFinite()) throw NumericalError("stoch_grad: non-finite value");
    return {v, std::move(g)};
  }
  const NoiseModel nm = problem_noise(p);
  auto [v, g] = grad(p, x);
  if (nm.deterministic()) return {v, std::move(g)};
  const Eigen::VectorXd delta = nm.draw(seed, t, x.size());
  v += delta.dot(x);
  g += delta;
  if (!std::isfinite(v) || !g.allFinite()) throw NumericalError("stoch_grad: non-finite value");
  return {v, std::move(g)};
}

}  // namespace precopt
