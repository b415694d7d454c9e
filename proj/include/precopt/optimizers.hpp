#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include <precopt/errors.hpp>
#include <precopt/precond.hpp>
#include <precopt/problems.hpp>

namespace precopt {

// State machines for preconditioned adaptive descent (cumulative / EMA /
// weighted accumulation), normalized steepest descent with momentum, the
// accelerated adaptive method, and its ball-projected variant, plus the
// horizon-based hyperparameter tuning rule and a trajectory runner.

// ---------------------------------------------------------------------------
// Accumulation modes
// ---------------------------------------------------------------------------

class AccumulationMode {
 public:
  enum class Kind { Cumulative, Ema, Weighted };

  static AccumulationMode cumulative() { return AccumulationMode(Kind::Cumulative, 1.0); }

  static AccumulationMode ema(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidInput("ema: beta must lie in (0, 1)");
    return AccumulationMode(Kind::Ema, beta);
  }

  static AccumulationMode weighted(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("weighted: beta must lie in (0, 1]");
    return AccumulationMode(Kind::Weighted, beta);
  }

  Kind kind() const { return kind_; }
  double beta() const { return beta_; }
  // Accumulator update is M <- decay * M + gain * g g'.
  double decay() const { return kind_ == Kind::Cumulative ? 1.0 : beta_; }
  double gain() const { return kind_ == Kind::Ema ? 1.0 - beta_ : 1.0; }

  std::string name() const {
    switch (kind_) {
      case Kind::Cumulative: return "cumulative";
      case Kind::Ema: return "ema";
      case Kind::Weighted: return "weighted";
    }
    return "?";
  }

 private:
  AccumulationMode(Kind k, double b) : kind_(k), beta_(b) {}
  Kind kind_;
  double beta_;
};

// ---------------------------------------------------------------------------
// Gradient oracle: (x, t) -> (value, gradient), reproducible given (seed, t).
// ---------------------------------------------------------------------------

struct GradOracle {
  std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&, long)> eval;
  bool deterministic = true;

  static GradOracle exact(const Problem& p) {
    auto keep = std::make_shared<const Problem>(p);
    GradOracle o;
    o.deterministic = true;
    o.eval = [keep](const Eigen::VectorXd& x, long) { return grad(*keep, x); };
    return o;
  }

  static GradOracle from_problem(const Problem& p, std::uint64_t seed) {
    if (problem_deterministic(p)) return exact(p);
    auto keep = std::make_shared<const Problem>(p);
    GradOracle o;
    o.deterministic = false;
    o.eval = [keep, seed](const Eigen::VectorXd& x, long t) {
      return stoch_grad(*keep, x, static_cast<std::uint64_t>(t), seed);
    };
    return o;
  }
};

// ---------------------------------------------------------------------------
// Adaptive preconditioned descent
// ---------------------------------------------------------------------------

class AdaptiveState {
 public:
  AdaptiveState(PreconditionerSet set, AccumulationMode mode, double eta, double eps,
                Eigen::VectorXd x0)
      : set_(set), mode_(mode), eta_(eta), eps_(eps), x_(std::move(x0)),
        m_(SymMatrix::Zero(set.dim)) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw InvalidInput("adaptive: eta must be > 0");
    if (!(eps_ >= 0.0) || !std::isfinite(eps_)) throw InvalidInput("adaptive: eps must be >= 0");
    if (x_.size() != set_.dim || !x_.allFinite()) {
      throw InvalidInput("adaptive: start point must be finite with the set's dimension");
    }
  }

  const PreconditionerSet& set() const { return set_; }
  const AccumulationMode& mode() const { return mode_; }
  double eta() const { return eta_; }
  double eps() const { return eps_; }
  const Eigen::VectorXd& x() const { return x_; }
  long t() const { return t_; }
  const SymMatrix& accumulator() const { return m_; }

  bool has_preconditioner() const { return last_spec_.has_value(); }
  // Root of the projected accumulator used by the most recent step.
  SymMatrix last_root() const {
    if (!last_spec_) throw InvalidInput("last_root: no step taken yet");
    return detail::root_from(*last_spec_);
  }
  const detail::ProjSpectrum& last_spectrum() const {
    if (!last_spec_) throw InvalidInput("last_spectrum: no step taken yet");
    return *last_spec_;
  }

  friend AdaptiveState& adaptive_step(AdaptiveState& s, const Eigen::VectorXd& g);

 private:
  PreconditionerSet set_;
  AccumulationMode mode_;
  double eta_, eps_;
  Eigen::VectorXd x_;
  SymMatrix m_;
  long t_ = 0;
  std::optional<detail::ProjSpectrum> last_spec_;
};

// One update: accumulate g g', project onto the cone, apply the inverse root.
inline AdaptiveState& adaptive_step(AdaptiveState& s, const Eigen::VectorXd& g) {
  if (g.size() != s.set_.dim) throw InvalidInput("adaptive_step: gradient dimension mismatch");
  if (!g.allFinite()) throw NumericalError("adaptive_step: non-finite gradient");
  Eigen::MatrixXd acc = s.mode_.decay() * s.m_.mat();
  acc.noalias() += s.mode_.gain() * (g * g.transpose());
  if (!acc.allFinite()) throw NumericalError("adaptive_step: accumulator overflow");
  s.m_ = SymMatrix(acc);
  SymMatrix shifted = s.m_;
  if (s.eps_ != 0.0) shifted = shifted.add_scaled_identity(s.eps_);
  s.last_spec_ = detail::project_spectrum(s.set_, shifted);
  s.x_ -= s.eta_ * detail::apply_inv_root(*s.last_spec_, g);
  if (!s.x_.allFinite()) throw NumericalError("adaptive_step: non-finite iterate");
  ++s.t_;
  return s;
}

// ---------------------------------------------------------------------------
// Normalized steepest descent with momentum
// ---------------------------------------------------------------------------

class NsdState {
 public:
  NsdState(PreconditionerSet set, double eta, double alpha, Eigen::VectorXd x0)
      : set_(set), eta_(eta), alpha_(alpha), x_(std::move(x0)) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw InvalidInput("nsd: eta must be > 0");
    if (!(alpha_ > 0.0 && alpha_ <= 1.0)) throw InvalidInput("nsd: alpha must lie in (0, 1]");
    if (x_.size() != set_.dim || !x_.allFinite()) {
      throw InvalidInput("nsd: start point must be finite with the set's dimension");
    }
    m_ = Eigen::VectorXd::Zero(set_.dim);
  }

  const PreconditionerSet& set() const { return set_; }
  double eta() const { return eta_; }
  double alpha() const { return alpha_; }
  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& momentum() const { return m_; }
  long t() const { return t_; }
  // Set when the most recent step saw a zero momentum vector and held x.
  bool last_step_held() const { return last_step_held_; }
  long holds() const { return holds_; }

  friend NsdState& nsd_step(NsdState& s, const Eigen::VectorXd& g);

 private:
  PreconditionerSet set_;
  double eta_, alpha_;
  Eigen::VectorXd x_, m_;
  long t_ = 0;
  bool last_step_held_ = false;
  long holds_ = 0;
};

// One update: blend the gradient into the momentum, move one unit-norm step.
inline NsdState& nsd_step(NsdState& s, const Eigen::VectorXd& g) {
  if (g.size() != s.set_.dim) throw InvalidInput("nsd_step: gradient dimension mismatch");
  if (!g.allFinite()) throw NumericalError("nsd_step: non-finite gradient");
  if (s.t_ == 0) {
    s.m_ = g;
  } else {
    s.m_ = (1.0 - s.alpha_) * s.m_ + s.alpha_ * g;
  }
  if (s.m_.isZero(0.0)) {
    s.last_step_held_ = true;
    ++s.holds_;
  } else {
    s.last_step_held_ = false;
    s.x_ -= s.eta_ * steepest_direction(s.set_, s.m_);
    if (!s.x_.allFinite()) throw NumericalError("nsd_step: non-finite iterate");
  }
  ++s.t_;
  return s;
}

// ---------------------------------------------------------------------------
// Accelerated adaptive descent (optionally ball-projected)
// ---------------------------------------------------------------------------

class AcceleratedState {
 public:
  using Schedule = std::function<double(long)>;

  AcceleratedState(PreconditionerSet set, double eta, double eps, Eigen::VectorXd x0,
                   std::optional<double> radius = std::nullopt, Schedule schedule = nullptr)
      : set_(set), eta_(eta), eps_(eps), x_(std::move(x0)), radius_(radius),
        schedule_(std::move(schedule)), m_(SymMatrix::Zero(set.dim)) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw InvalidInput("accelerated: eta must be > 0");
    if (!(eps_ >= 0.0) || !std::isfinite(eps_)) {
      throw InvalidInput("accelerated: eps must be >= 0");
    }
    if (x_.size() != set_.dim || !x_.allFinite()) {
      throw InvalidInput("accelerated: start point must be finite with the set's dimension");
    }
    if (radius_ && !(*radius_ > 0.0)) throw InvalidInput("accelerated: radius must be > 0");
    if (!schedule_) schedule_ = [](long t) { return 2.0 / static_cast<double>(t + 2); };
    xbar_ = x_;  // anchor starts at the iterate
  }

  const PreconditionerSet& set() const { return set_; }
  double eta() const { return eta_; }
  double eps() const { return eps_; }
  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& xbar() const { return xbar_; }
  long t() const { return t_; }
  const SymMatrix& accumulator() const { return m_; }
  std::optional<double> radius() const { return radius_; }
  double alpha_at(long t) const { return schedule_(t); }

  bool has_preconditioner() const { return last_spec_.has_value(); }
  SymMatrix last_root() const {
    if (!last_spec_) throw InvalidInput("last_root: no step taken yet");
    return detail::root_from(*last_spec_);
  }

  friend AcceleratedState& accelerated_step(AcceleratedState& s, const GradOracle& oracle);
  friend AcceleratedState& accelerated_projected_step(AcceleratedState& s,
                                                      const GradOracle& oracle);

 private:
  Eigen::VectorXd half_step(const GradOracle& oracle, double alpha) {
    const Eigen::VectorXd z = alpha * x_ + (1.0 - alpha) * xbar_;
    Eigen::VectorXd g = oracle.eval(z, t_).second;
    if (g.size() != set_.dim) throw InvalidInput("accelerated: gradient dimension mismatch");
    if (!g.allFinite()) throw NumericalError("accelerated: non-finite gradient");
    g /= alpha;  // gradient of the modified loss a^-2 f(a x + (1-a) xbar)
    Eigen::MatrixXd acc = m_.mat();
    acc.noalias() += g * g.transpose();
    if (!acc.allFinite()) throw NumericalError("accelerated: accumulator overflow");
    m_ = SymMatrix(acc);
    SymMatrix shifted = m_;
    if (eps_ != 0.0) shifted = shifted.add_scaled_identity(eps_);
    last_spec_ = detail::project_spectrum(set_, shifted);
    return x_ - eta_ * detail::apply_inv_root(*last_spec_, g);
  }

  double checked_alpha() const {
    const double a = schedule_(t_);
    if (!(a > 0.0 && a <= 1.0)) throw InvalidInput("accelerated: alpha must lie in (0, 1]");
    return a;
  }

  PreconditionerSet set_;
  double eta_, eps_;
  Eigen::VectorXd x_, xbar_;
  std::optional<double> radius_;
  Schedule schedule_;
  SymMatrix m_;
  long t_ = 0;
  std::optional<detail::ProjSpectrum> last_spec_;
};

inline AcceleratedState& accelerated_step(AcceleratedState& s, const GradOracle& oracle) {
  const double alpha = s.checked_alpha();
  const Eigen::VectorXd x_new = s.half_step(oracle, alpha);
  if (!x_new.allFinite()) throw NumericalError("accelerated_step: non-finite iterate");
  s.x_ = x_new;
  s.xbar_ = alpha * s.x_ + (1.0 - alpha) * s.xbar_;
  ++s.t_;
  return s;
}

// Ball-projected variant: the iterate is pulled back into the radius-D ball
// in the set's norm (measured under the current preconditioner metric), while
// the anchor blends in the unprojected half-point.
inline AcceleratedState& accelerated_projected_step(AcceleratedState& s,
                                                    const GradOracle& oracle) {
  if (!s.radius_) throw InvalidInput("projected step: radius not set");
  if (s.set_.kind == SetKind::KronLeft) {
    throw Unsupported("projected step: Kronecker-factored sets not supported");
  }
  const double alpha = s.checked_alpha();
  const Eigen::VectorXd x_half = s.half_step(oracle, alpha);
  if (!x_half.allFinite()) throw NumericalError("projected step: non-finite half-point");
  const SymMatrix v = detail::root_from(*s.last_spec_);
  s.x_ = project_ball(s.set_, v, x_half, *s.radius_);
  s.xbar_ = alpha * x_half + (1.0 - alpha) * s.xbar_;
  ++s.t_;
  return s;
}

// ---------------------------------------------------------------------------
// Horizon-based tuning for normalized steepest descent
// ---------------------------------------------------------------------------

struct NsdTuning {
  double alpha;
  double eta;
};

// Picks (alpha, eta) from the initial gap, smoothness, noise level, and
// horizon. The signal-to-noise ratio a0 = sqrt(delta0 * lsmooth) / sigma
// selects among four regimes; sigma = 0 counts as infinite a0.
inline NsdTuning nsd_tuning(double delta0, double lsmooth, double sigma, long horizon) {
  if (!(delta0 > 0.0) || !(lsmooth > 0.0) || !std::isfinite(delta0) || !std::isfinite(lsmooth)) {
    throw InvalidInput("nsd_tuning: delta0 and lsmooth must be finite and > 0");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidInput("nsd_tuning: sigma must be finite and >= 0");
  }
  if (horizon < 1) throw InvalidInput("nsd_tuning: horizon must be >= 1");

  const double t = static_cast<double>(horizon);
  const double base = std::sqrt(delta0 / lsmooth);
  const double a0 = sigma == 0.0 ? std::numeric_limits<double>::infinity()
                                 : std::sqrt(delta0 * lsmooth) / sigma;
  const double eta_noise = sigma == 0.0
                               ? 0.0
                               : std::pow(delta0, 0.75) * std::pow(lsmooth, -0.25) /
                                     (std::sqrt(sigma) * std::pow(t, 0.75));
  if (a0 < 1.0) {
    if (t < std::pow(a0, -6.0)) {
      return {std::pow(t, -2.0 / 3.0), base * std::pow(t, -5.0 / 12.0)};
    }
    return {a0 / std::sqrt(t), eta_noise};
  }
  if (t <= a0 * a0) {
    return {1.0, base / std::sqrt(t)};
  }
  return {a0 / std::sqrt(t), eta_noise};
}

// ---------------------------------------------------------------------------
// Trajectory runner
// ---------------------------------------------------------------------------

enum class Algorithm { Adaptive, Nsd, Accelerated, AcceleratedProjected };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Adaptive: return "adaptive";
    case Algorithm::Nsd: return "nsd";
    case Algorithm::Accelerated: return "accelerated";
    case Algorithm::AcceleratedProjected: return "accelerated_projected";
  }
  return "?";
}

struct AlgoConfig {
  Algorithm algorithm = Algorithm::Adaptive;
  PreconditionerSet set = PreconditionerSet::Full(1);
  AccumulationMode mode = AccumulationMode::cumulative();  // adaptive only
  double eta = 0.1;
  double eps = 0.0;          // adaptive / accelerated
  double alpha = 1.0;        // momentum for nsd
  std::optional<double> accel_alpha;  // constant schedule override for accelerated
  std::optional<double> radius;       // projected variant only
};

struct TrajectoryRow {
  long t = 0;
  double loss = 0.0;
  double grad_l1 = 0.0;
  double grad_l2 = 0.0;
  double grad_dual = 0.0;
  double step_chnorm = 0.0;
  std::optional<double> xbar_loss;  // accelerated variants only
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  Eigen::VectorXd x_final;
  Eigen::VectorXd xbar_final;  // size 0 unless an accelerated variant ran
  bool failed = false;
  std::string error;
  long failed_at = -1;  // step index at which the run aborted

  double min_grad_l1() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) m = std::min(m, r.grad_l1);
    return m;
  }
  double min_grad_dual() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) m = std::min(m, r.grad_dual);
    return m;
  }
};

// Executes T steps of the configured algorithm on the problem, recording the
// true (mean) loss and gradient norms at every iterate, plus the size of each
// displacement in the set's norm. Deterministic given (config, problem, x0,
// T, seed): all randomness is keyed.
inline Trajectory run(const AlgoConfig& cfg, const Problem& problem, const Eigen::VectorXd& x0,
                      long horizon, std::uint64_t seed) {
  if (horizon < 0) throw InvalidInput("run: horizon must be >= 0");
  if (problem_dim(problem) != cfg.set.dim) {
    throw InvalidInput("run: problem and set dimensions differ");
  }
  validate_start(problem, x0);

  const bool accelerated = cfg.algorithm == Algorithm::Accelerated ||
                           cfg.algorithm == Algorithm::AcceleratedProjected;
  const GradOracle oracle = GradOracle::from_problem(problem, seed);

  std::optional<AdaptiveState> ada;
  std::optional<NsdState> nsd;
  std::optional<AcceleratedState> acc;
  switch (cfg.algorithm) {
    case Algorithm::Adaptive:
      ada.emplace(cfg.set, cfg.mode, cfg.eta, cfg.eps, x0);
      break;
    case Algorithm::Nsd:
      nsd.emplace(cfg.set, cfg.eta, cfg.alpha, x0);
      break;
    case Algorithm::Accelerated:
    case Algorithm::AcceleratedProjected: {
      AcceleratedState::Schedule sched = nullptr;
      if (cfg.accel_alpha) {
        const double a = *cfg.accel_alpha;
        sched = [a](long) { return a; };
      }
      acc.emplace(cfg.set, cfg.eta, cfg.eps,
                  x0, cfg.algorithm == Algorithm::AcceleratedProjected ? cfg.radius : std::nullopt,
                  std::move(sched));
      break;
    }
  }

  Trajectory out;
  out.rows.reserve(static_cast<std::size_t>(horizon) + 1);

  const auto current_x = [&]() -> const Eigen::VectorXd& {
    if (ada) return ada->x();
    if (nsd) return nsd->x();
    return acc->x();
  };

  const auto record = [&](long t, const Eigen::VectorXd& prev_x) {
    const Eigen::VectorXd& x = current_x();
    TrajectoryRow row;
    row.t = t;
    row.loss = loss(problem, x);
    const Eigen::VectorXd g = gradient(problem, x);
    row.grad_l1 = g.lpNorm<1>();
    row.grad_l2 = g.norm();
    row.grad_dual = dual_norm(cfg.set, g);
    row.step_chnorm = (t == 0) ? 0.0 : ch_norm(cfg.set, x - prev_x);
    if (accelerated) row.xbar_loss = loss(problem, acc->xbar());
    out.rows.push_back(std::move(row));
  };

  record(0, x0);
  for (long t = 0; t < horizon; ++t) {
    const Eigen::VectorXd prev = current_x();
    try {
      if (ada) {
        const Eigen::VectorXd g = oracle.eval(ada->x(), t).second;
        adaptive_step(*ada, g);
      } else if (nsd) {
        const Eigen::VectorXd g = oracle.eval(nsd->x(), t).second;
        nsd_step(*nsd, g);
      } else if (cfg.algorithm == Algorithm::Accelerated) {
        accelerated_step(*acc, oracle);
      } else {
        accelerated_projected_step(*acc, oracle);
      }
      record(t + 1, prev);
    } catch (const NumericalError& e) {
      out.failed = true;
      out.error = e.what();
      out.failed_at = t;
      break;
    } catch (const SingularPreconditioner& e) {
      out.failed = true;
      out.error = e.what();
      out.failed_at = t;
      break;
    } catch (const NotPositiveDefinite& e) {
      out.failed = true;
      out.error = e.what();
      out.failed_at = t;
      break;
    } catch (const NotPsd& e) {
      out.failed = true;
      out.error = e.what();
      out.failed_at = t;
      break;
    }
  }

  out.x_final = current_x();
  if (accelerated) out.xbar_final = acc->xbar();
  return out;
}

}  // namespace precopt
