#pragma once

// Randomized property suites over the preconditioner cones, the norm family,
// the matrix-inequality validators, the algorithm equivalences, and the
// lower-bound construction. Each suite runs a fixed set of named properties
// under a single master seed and reports per-property trial counts, failure
// counts, and residual extremes; the first failing trial is serialized as a
// counterexample. Shared by the command-line `validate` subcommand and the
// acceptance tests so both exercise identical code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "precopt/analysis.hpp"
#include "precopt/errors.hpp"
#include "precopt/optimizers.hpp"
#include "precopt/precond.hpp"
#include "precopt/problems.hpp"
#include "precopt/rng.hpp"
#include "precopt/sym.hpp"

namespace precopt::validate {

inline constexpr std::uint64_t kDefaultMasterSeed = 0x5eedf00dULL;

// Outcome of one named property: `failures == 0` means every trial satisfied
// `residual <= tolerance`. `worst` is the most adverse residual observed, so
// `worst - tolerance` is the (signed) margin of the tightest trial.
struct PropertyResult {
  std::string name;
  long trials = 0;
  long failures = 0;
  double worst = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  std::string counterexample;  // serialized first failure; empty when clean

  bool passed() const { return failures == 0; }
};

struct SuiteReport {
  std::string suite;
  std::vector<PropertyResult> properties;

  bool passed() const {
    return std::all_of(properties.begin(), properties.end(),
                       [](const PropertyResult& p) { return p.passed(); });
  }
  long total_trials() const {
    long n = 0;
    for (const auto& p : properties) n += p.trials;
    return n;
  }
};

inline nlohmann::ordered_json to_json(const PropertyResult& p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["trials"] = p.trials;
  j["failures"] = p.failures;
  j["worst_residual"] = p.worst;
  j["tolerance"] = p.tolerance;
  j["passed"] = p.passed();
  if (!p.counterexample.empty()) j["counterexample"] = p.counterexample;
  return j;
}

inline nlohmann::ordered_json to_json(const SuiteReport& r) {
  nlohmann::ordered_json j;
  j["suite"] = r.suite;
  j["passed"] = r.passed();
  j["total_trials"] = r.total_trials();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : r.properties) arr.push_back(to_json(p));
  j["properties"] = arr;
  return j;
}

namespace detail {

// Accumulates trials for one property. A trial passes when its residual is
// at most the tolerance; the first failure's context is kept verbatim.
class PropertyCheck {
 public:
  PropertyCheck(std::string name, double tolerance) : r_{} {
    r_.name = std::move(name);
    r_.tolerance = tolerance;
  }

  void trial(double residual, const std::function<std::string()>& context = {}) {
    ++r_.trials;
    r_.worst = std::max(r_.worst, residual);
    if (!(residual <= r_.tolerance)) {
      ++r_.failures;
      if (r_.counterexample.empty()) {
        r_.counterexample = context ? context() : "residual " + std::to_string(residual);
      }
    }
  }

  PropertyResult finish() const { return r_; }

 private:
  PropertyResult r_;
};

inline SymMatrix random_sym(SeqRng& rng, int d, double scale = 1.0) {
  Eigen::MatrixXd b = rng.normal_matrix(d, d) * scale;
  return SymMatrix(0.5 * (b + b.transpose()));
}

inline SymMatrix random_psd(SeqRng& rng, int d, double scale = 1.0) {
  Eigen::MatrixXd b = rng.normal_matrix(d, d);
  return SymMatrix(Eigen::MatrixXd(scale * (b * b.transpose()) / static_cast<double>(d)));
}

inline SymMatrix random_pd(SeqRng& rng, int d, double ridge = 0.1) {
  return random_psd(rng, d).add_scaled_identity(ridge);
}

inline Eigen::MatrixXd random_orthogonal(SeqRng& rng, int d) {
  const Eigen::MatrixXd g = rng.normal_matrix(d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Fix the sign convention so the distribution is Haar-like.
  const Eigen::VectorXd diag = qr.matrixQR().diagonal();
  for (int i = 0; i < d; ++i) {
    if (diag[i] < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

// PD matrix with eigenvalues drawn log-uniformly from [lo, hi].
inline SymMatrix random_pd_spectrum(SeqRng& rng, int d, double lo, double hi) {
  const Eigen::MatrixXd q = random_orthogonal(rng, d);
  Eigen::VectorXd lam(d);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < d; ++i) lam[i] = std::exp(llo + (lhi - llo) * rng.uniform());
  return SymMatrix(Eigen::MatrixXd(q * lam.asDiagonal() * q.transpose()));
}

// Strictly positive-definite member of the set's cone with unit trace.
inline SymMatrix random_unit_trace_member(SeqRng& rng, const PreconditionerSet& set) {
  const int d = set.dim;
  switch (set.kind) {
    case SetKind::Scalar:
      return SymMatrix::Scaled(d, 1.0 / static_cast<double>(d));
    case SetKind::Diagonal: {
      Eigen::VectorXd h(d);
      for (int i = 0; i < d; ++i) h[i] = 0.05 + rng.uniform();
      h /= h.sum();
      return SymMatrix::Diag(h);
    }
    case SetKind::Full: {
      SymMatrix m = random_pd(rng, d, 0.05);
      return SymMatrix(Eigen::MatrixXd(m.mat() / m.trace()));
    }
    case SetKind::KronLeft: {
      const SymMatrix a = random_pd(rng, set.dL, 0.05);
      const SymMatrix m(::precopt::detail::kron_with_identity(a.mat(), set.dR));
      return SymMatrix(Eigen::MatrixXd(m.mat() / m.trace()));
    }
  }
  throw InvalidInput("random_unit_trace_member: unknown set kind");
}

// The four cones exercised at small dimensions; KronLeft gets a nontrivial
// factorization whenever the dimension is composite.
inline std::vector<PreconditionerSet> probe_sets() {
  return {PreconditionerSet::Scalar(5), PreconditionerSet::Diagonal(7),
          PreconditionerSet::Full(6), PreconditionerSet::KronLeft(2, 3),
          PreconditionerSet::KronLeft(4, 2)};
}

inline std::string describe(const PreconditionerSet& set) { return set.name(); }

inline std::string failure_context(const PreconditionerSet& set, long trial, double residual) {
  nlohmann::ordered_json j;
  j["set"] = describe(set);
  j["trial"] = trial;
  j["residual"] = residual;
  return j.dump();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Suite: projections
// ---------------------------------------------------------------------------

inline SuiteReport suite_projections(std::uint64_t seed = kDefaultMasterSeed) {
  using detail::PropertyCheck;
  constexpr long kTrialsPerSet = 300;
  const auto sets = detail::probe_sets();

  PropertyCheck additivity("projection-additivity", 1e-10);
  PropertyCheck shift("projection-shift", 1e-10);
  PropertyCheck monotone("projection-monotonicity", 1e-9);
  PropertyCheck halfpow("projection-half-power-lipschitz", 1e-9);
  PropertyCheck rankone("projection-rank-one-perturbation", 1e-9);
  PropertyCheck duality("dual-norm-trace-identity", 1e-9);
  PropertyCheck direction("steepest-direction-optimality", 1e-10);
  PropertyCheck ball("ball-projection-kkt", 1e-9);

  long trial_id = 0;
  for (const auto& set : sets) {
    SeqRng rng(seed + static_cast<std::uint64_t>(set.kind) + 10 * set.dim,
               RngStream::kValidation);
    const int d = set.dim;
    for (long t = 0; t < kTrialsPerSet; ++t, ++trial_id) {
      const SymMatrix m1 = detail::random_psd(rng, d);
      const SymMatrix m2 = detail::random_psd(rng, d);
      const auto p1 = project_PH(set, m1);
      const auto p2 = project_PH(set, m2);

      {  // square(M1 + M2) == square(M1) + square(M2)
        const SymMatrix sum = project_PH(set, m1 + m2).square;
        const Eigen::MatrixXd want = p1.square.mat() + p2.square.mat();
        const double rel = (sum.mat() - want).norm() / std::max(1.0, want.norm());
        additivity.trial(rel, [&] { return detail::failure_context(set, trial_id, rel); });
      }
      {  // square(M + lambda I) == square(M) + lambda I
        const double lam = 3.0 * rng.uniform();
        const SymMatrix got = project_PH(set, m1.add_scaled_identity(lam)).square;
        Eigen::MatrixXd want = p1.square.mat();
        want.diagonal().array() += lam;
        const double rel = (got.mat() - want).norm() / std::max(1.0, want.norm());
        shift.trial(rel, [&] { return detail::failure_context(set, trial_id, rel); });
      }
      {  // A <= B implies root(A) <= root(B)
        const SymMatrix a = m1;
        const SymMatrix b = m1 + m2;
        const Eigen::MatrixXd gap =
            project_PH(set, b).root.mat() - project_PH(set, a).root.mat();
        const double lmin = eig_sym(SymMatrix(gap)).eigenvalues[0];
        const double scale = std::max(1.0, op_norm(project_PH(set, b).root));
        const double res = -lmin / scale;
        monotone.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {  // ||root(B) - root(A)||_op <= ||B - A||_op^(1/2)
        const double lhs = op_norm(p2.root - p1.root);
        const double rhs = std::sqrt(op_norm(m2 - m1));
        const double res = (lhs - rhs) / std::max(1.0, rhs);
        halfpow.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {  // rank-one perturbations move the root by at most sqrt(2)||x - y||
        const Eigen::VectorXd x = rng.normal_vector(d);
        const Eigen::VectorXd y = x + 0.3 * rng.normal_vector(d);
        const SymMatrix ax(Eigen::MatrixXd(m1.mat() + x * x.transpose()));
        const SymMatrix ay(Eigen::MatrixXd(m1.mat() + y * y.transpose()));
        const double lhs = op_norm(project_PH(set, ax).root - project_PH(set, ay).root);
        const double rhs = std::sqrt(2.0) * (x - y).norm();
        const double res = (lhs - rhs) / std::max(1.0, rhs);
        rankone.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {  // dual norm == trace of the projected root; unit-trace members give
        // lower bounds on its square
        const Eigen::VectorXd x = rng.normal_vector(d);
        const double dn = dual_norm(set, x);
        const SymMatrix outer(Eigen::MatrixXd(x * x.transpose()));
        const double tr = project_PH(set, outer).root.trace();
        double res = std::abs(dn - tr) / std::max(1.0, dn);
        for (int k = 0; k < 10; ++k) {
          // Unit-trace members over-estimate the squared dual norm, which is
          // the infimum of x' H^-1 x over the unit-trace slice of the cone.
          const SymMatrix h = detail::random_unit_trace_member(rng, set);
          const double q = x.dot(h.mat().ldlt().solve(x));
          res = std::max(res, (dn * dn - q) / std::max(1.0, dn * dn));
        }
        duality.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {  // steepest direction: unit set-norm, pairing attains the dual norm
        const Eigen::VectorXd m = rng.normal_vector(d);
        const Eigen::VectorXd u = steepest_direction(set, m);
        const double dn = dual_norm(set, m);
        const double res = std::max(ch_norm(set, u) - 1.0,
                                    std::abs(m.dot(u) - dn) / std::max(1.0, dn));
        direction.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      if (set.kind != SetKind::KronLeft) {  // ball projection KKT conditions
        // The metric matrix is always a preconditioner root, so draw it from
        // the cone itself.
        const SymMatrix member = detail::random_unit_trace_member(rng, set);
        const SymMatrix v(Eigen::MatrixXd(
            (0.3 + rng.uniform()) * static_cast<double>(d) * member.mat()));
        const Eigen::VectorXd x = 2.0 * rng.normal_vector(d);
        const double radius = 0.2 + rng.uniform();
        const Eigen::VectorXd y = project_ball(set, v, x, radius);
        double res = (ch_norm(set, y) - radius) / radius;
        if (ch_norm(set, x) > radius * (1.0 + 1e-9)) {
          // Constraint binds: y must beat every feasible z in the V-metric,
          // i.e. (x - y)' V (z - y) <= 0 up to rounding.
          const double scale =
              std::max(1.0, op_norm(v) * (x - y).norm() * std::max(1.0, radius));
          for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd z = rng.normal_vector(d);
            const double zn = ch_norm(set, z);
            z *= (radius * rng.uniform()) / std::max(zn, 1e-12);
            const double kkt = (x - y).dot(v.apply(z - y)) / scale;
            res = std::max(res, kkt);
          }
        }
        ball.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
    }
  }

  SuiteReport rep;
  rep.suite = "projections";
  for (auto* c : {&additivity, &shift, &monotone, &halfpow, &rankone, &duality,
                  &direction, &ball}) {
    rep.properties.push_back(c->finish());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Suite: norms
// ---------------------------------------------------------------------------

namespace detail {

inline double nuclear_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().sum();
}

inline double closed_form_ch(const PreconditionerSet& set, const Eigen::VectorXd& x) {
  const double d = static_cast<double>(set.dim);
  switch (set.kind) {
    case SetKind::Scalar: return x.norm() / std::sqrt(d);
    case SetKind::Diagonal: return x.lpNorm<Eigen::Infinity>();
    case SetKind::Full: return x.norm();
    case SetKind::KronLeft: {
      const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>
          g(x.data(), set.dL, set.dR);
      return Eigen::JacobiSVD<Eigen::MatrixXd>(g).singularValues()[0] /
             std::sqrt(static_cast<double>(set.dR));
    }
  }
  throw InvalidInput("closed_form_ch: unknown set kind");
}

inline double closed_form_dual(const PreconditionerSet& set, const Eigen::VectorXd& x) {
  const double d = static_cast<double>(set.dim);
  switch (set.kind) {
    case SetKind::Scalar: return std::sqrt(d) * x.norm();
    case SetKind::Diagonal: return x.lpNorm<1>();
    case SetKind::Full: return x.norm();
    case SetKind::KronLeft: {
      const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>
          g(x.data(), set.dL, set.dR);
      return std::sqrt(static_cast<double>(set.dR)) * nuclear_norm(g);
    }
  }
  throw InvalidInput("closed_form_dual: unknown set kind");
}

// Extremal ratio dual_norm / l2 over the unit sphere, in closed form.
inline std::pair<double, double> dual_ratio_range(const PreconditionerSet& set) {
  const double d = static_cast<double>(set.dim);
  switch (set.kind) {
    case SetKind::Scalar: return {std::sqrt(d), std::sqrt(d)};
    case SetKind::Diagonal: return {1.0, std::sqrt(d)};
    case SetKind::Full: return {1.0, 1.0};
    case SetKind::KronLeft: {
      const double r = std::sqrt(static_cast<double>(set.dR));
      return {r, r * std::sqrt(static_cast<double>(std::min(set.dL, set.dR)))};
    }
  }
  throw InvalidInput("dual_ratio_range: unknown set kind");
}

}  // namespace detail

inline SuiteReport suite_norms(std::uint64_t seed = kDefaultMasterSeed) {
  using detail::PropertyCheck;
  constexpr long kTrialsPerSet = 300;
  const auto sets = detail::probe_sets();

  PropertyCheck ch_closed("set-norm-closed-forms", 1e-11);
  PropertyCheck ch_sup("set-norm-dominates-members", 1e-9);
  PropertyCheck dual_closed("dual-norm-closed-forms", 1e-10);
  PropertyCheck pairing("cauchy-schwarz-pairing", 1e-9);
  PropertyCheck triangle("norm-triangle-inequality", 1e-10);
  PropertyCheck distortion("distortion-envelope", 1e-9);
  PropertyCheck seminorm("weighted-seminorm-direct-formula", 1e-11);

  long trial_id = 0;
  for (const auto& set : sets) {
    SeqRng rng(seed + 100 + static_cast<std::uint64_t>(set.kind) + 10 * set.dim,
               RngStream::kValidation);
    const int d = set.dim;
    const auto [rmin, rmax] = detail::dual_ratio_range(set);
    for (long t = 0; t < kTrialsPerSet; ++t, ++trial_id) {
      const Eigen::VectorXd x = rng.normal_vector(d);
      const Eigen::VectorXd y = rng.normal_vector(d);

      const double cn = ch_norm(set, x);
      {
        const double want = detail::closed_form_ch(set, x);
        const double res = std::abs(cn - want) / std::max(1.0, want);
        ch_closed.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {
        // The set norm is the supremum of the weighted seminorms over
        // unit-trace members, so every sampled member sits below it.
        double res = -1.0;
        for (int k = 0; k < 8; ++k) {
          const SymMatrix h = detail::random_unit_trace_member(rng, set);
          res = std::max(res, (h_seminorm(h, x) - cn) / std::max(1.0, cn));
        }
        ch_sup.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      const double dn = dual_norm(set, x);
      {
        const double want = detail::closed_form_dual(set, x);
        const double res = std::abs(dn - want) / std::max(1.0, want);
        dual_closed.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {
        const double bound = ch_norm(set, y) * dn;
        const double res = (std::abs(x.dot(y)) - bound) / std::max(1.0, bound);
        pairing.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {
        const double rc = (ch_norm(set, x + y) - (cn + ch_norm(set, y))) /
                          std::max(1.0, cn + ch_norm(set, y));
        const double rd = (dual_norm(set, x + y) - (dn + dual_norm(set, y))) /
                          std::max(1.0, dn + dual_norm(set, y));
        const double res = std::max(rc, rd);
        triangle.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {
        // Sampled dual/l2 ratios stay inside the closed-form envelope whose
        // width is the set's distortion constant.
        const double ratio = dn / x.norm();
        double res = std::max(ratio - rmax, rmin - ratio) / std::max(1.0, rmax);
        res = std::max(res, std::abs(norm_distortion(set) - rmax / rmin) /
                                std::max(1.0, rmax / rmin));
        distortion.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
      {
        const SymMatrix h = detail::random_psd(rng, d);
        const double want = std::sqrt(std::max(0.0, x.dot(h.apply(x))));
        const double res = std::abs(h_seminorm(h, x) - want) / std::max(1.0, want);
        seminorm.trial(res, [&] { return detail::failure_context(set, trial_id, res); });
      }
    }
  }

  SuiteReport rep;
  rep.suite = "norms";
  for (auto* c : {&ch_closed, &ch_sup, &dual_closed, &pairing, &triangle, &distortion,
                  &seminorm}) {
    rep.properties.push_back(c->finish());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Suite: inequalities
// ---------------------------------------------------------------------------

inline SuiteReport suite_inequalities(std::uint64_t seed = kDefaultMasterSeed) {
  using detail::PropertyCheck;
  constexpr double kLo = 1e-3, kHi = 1e3;

  PropertyCheck logineq("log-difference-domination", 1e-8);
  PropertyCheck dlogineq("log-derivative-domination", 1e-8);
  PropertyCheck dlogfd("log-derivative-finite-difference", 1e-5);
  PropertyCheck stbound("commutative-regret-sum-bound", 0.0);
  PropertyCheck secorder("second-order-regret-sum", 0.0);

  SeqRng rng(seed + 200, RngStream::kValidation);

  for (long t = 0; t < 500; ++t) {  // ordered PD pairs with pinned spectra
    const int d = 2 + static_cast<int>(rng.below(7));
    const SymMatrix y = detail::random_pd_spectrum(rng, d, 2.0 * kLo, kHi / 3.0);
    SymMatrix p = detail::random_psd(rng, d);
    const double room = kHi - eig_sym(y).eigenvalues[d - 1];
    const double pmax = std::max(op_norm(p), 1e-12);
    const double s = rng.uniform() * std::min(1.0, room / pmax);
    const SymMatrix x = y + SymMatrix(Eigen::MatrixXd(s * p.mat()));
    const auto v = check_log_inequality(x, y, kLo, kHi);
    const double scale = std::max({1.0, op_norm(x), op_norm(y)});
    const double res = -v.min_eig_residual / scale;
    logineq.trial(res, [&] {
      nlohmann::ordered_json j;
      j["trial"] = t;
      j["dim"] = d;
      j["residual"] = v.min_eig_residual;
      return j.dump();
    });
  }

  for (long t = 0; t < 500; ++t) {  // PD base, PSD direction
    const int d = 2 + static_cast<int>(rng.below(7));
    const SymMatrix x = detail::random_pd_spectrum(rng, d, kLo, kHi);
    const SymMatrix a = detail::random_psd(rng, d);
    const auto v = check_dlog_inequality(x, a, kLo, kHi);
    const double scale = std::max({1.0, op_norm(x), op_norm(a)});
    const double res = -v.min_eig_residual / scale;
    dlogineq.trial(res, [&] {
      nlohmann::ordered_json j;
      j["trial"] = t;
      j["dim"] = d;
      j["residual"] = v.min_eig_residual;
      return j.dump();
    });
  }

  for (long t = 0; t < 200; ++t) {  // directional derivative vs central differences
    const int d = 2 + static_cast<int>(rng.below(5));
    const SymMatrix x = detail::random_pd_spectrum(rng, d, 0.1, 10.0);
    const SymMatrix a = detail::random_sym(rng, d);
    const double h = 1e-5;
    const SymMatrix fwd = log_psd(x + SymMatrix(Eigen::MatrixXd(h * a.mat())));
    const SymMatrix bwd = log_psd(x + SymMatrix(Eigen::MatrixXd(-h * a.mat())));
    const Eigen::MatrixXd fd = (fwd.mat() - bwd.mat()) / (2.0 * h);
    const Eigen::MatrixXd an = dlog(x, a).mat();
    const double res = (an - fd).norm() / std::max(1.0, fd.norm());
    dlogfd.trial(res, [&] {
      nlohmann::ordered_json j;
      j["trial"] = t;
      j["dim"] = d;
      j["residual"] = res;
      return j.dump();
    });
  }

  const double betas[] = {0.5, 0.9, 0.99, 1.0};
  for (long t = 0; t < 200; ++t) {  // commutative accumulated-step bound
    const int d = 2 + static_cast<int>(rng.below(7));
    const PreconditionerSet set =
        (t % 5 == 0) ? PreconditionerSet::Scalar(d) : PreconditionerSet::Diagonal(d);
    const long steps = 20 + static_cast<long>(rng.below(181));
    const double beta = betas[rng.below(4)];
    const double eps = 0.01 + rng.uniform();
    std::vector<Eigen::VectorXd> gs;
    gs.reserve(static_cast<std::size_t>(steps));
    for (long s = 0; s < steps; ++s) gs.push_back(rng.normal_vector(d));
    const auto vs = v_sequence_from_gradients(set, gs, beta, eps);
    const auto verdict = check_ST_bound_commutative(set, vs, beta, eps);
    const double res = verdict.holds ? -1.0 : (verdict.lhs - verdict.rhs);
    stbound.trial(res, [&] {
      nlohmann::ordered_json j;
      j["trial"] = t;
      j["set"] = set.name();
      j["beta"] = beta;
      j["lhs"] = verdict.lhs;
      j["rhs"] = verdict.rhs;
      return j.dump();
    });
  }

  for (long t = 0; t < 200; ++t) {  // trace bound on the preconditioned-gradient sum
    const auto sets = detail::probe_sets();
    const PreconditionerSet& set = sets[static_cast<std::size_t>(t) % sets.size()];
    const int d = set.dim;
    const long steps = 5 + static_cast<long>(rng.below(40));
    const double beta = betas[rng.below(4)];
    const double eps = 0.01 + rng.uniform();
    std::vector<Eigen::VectorXd> gs;
    gs.reserve(static_cast<std::size_t>(steps));
    for (long s = 0; s < steps; ++s) gs.push_back(rng.normal_vector(d));
    SymMatrix h = detail::random_unit_trace_member(rng, set);
    const auto verdict = check_second_order_sum(gs, set, beta, eps, h);
    const double res = verdict.holds ? -1.0 : (verdict.lhs - verdict.rhs);
    secorder.trial(res, [&] {
      nlohmann::ordered_json j;
      j["trial"] = t;
      j["set"] = set.name();
      j["beta"] = beta;
      j["lhs"] = verdict.lhs;
      j["rhs"] = verdict.rhs;
      return j.dump();
    });
  }

  SuiteReport rep;
  rep.suite = "inequalities";
  for (auto* c : {&logineq, &dlogineq, &dlogfd, &stbound, &secorder}) {
    rep.properties.push_back(c->finish());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Suite: equivalences
// ---------------------------------------------------------------------------

inline SuiteReport suite_equivalences(std::uint64_t seed = kDefaultMasterSeed) {
  using detail::PropertyCheck;

  PropertyCheck ema("ema-weighted-reparameterization", 1e-10);
  PropertyCheck kron("kronecker-factored-reference", 1e-9);
  PropertyCheck fulleq("full-matrix-accumulator-reference", 1e-10);
  PropertyCheck scalareq("scalar-norm-closed-form", 1e-12);

  SeqRng rng(seed + 300, RngStream::kValidation);

  {  // EMA(beta, eta, eps) iterates match Weighted(beta, eta/sqrt(1-beta), eps/(1-beta))
    const auto sets = detail::probe_sets();
    const double betas[] = {0.3, 0.9, 0.99};
    for (const auto& set : sets) {
      for (double beta : betas) {
        const int d = set.dim;
        const double eta = 0.05, eps = 0.01;
        AdaptiveState a(set, AccumulationMode::ema(beta), eta, eps, rng.normal_vector(d));
        AdaptiveState b(set, AccumulationMode::weighted(beta), eta / std::sqrt(1.0 - beta),
                        eps / (1.0 - beta), a.x());
        double res = 0.0;
        for (int s = 0; s < 100; ++s) {
          const Eigen::VectorXd g = rng.normal_vector(d);
          adaptive_step(a, g);
          adaptive_step(b, g);
          res = std::max(res, (a.x() - b.x()).lpNorm<Eigen::Infinity>());
        }
        ema.trial(res, [&] { return detail::failure_context(set, 0, res); });
      }
    }
  }

  {  // KronLeft adaptive matches the left-factored accumulator under
    // (eta*sqrt(dR), dR*eps)
    const std::pair<int, int> dims[] = {{2, 2}, {2, 3}, {3, 2}, {2, 4}, {4, 2}};
    for (auto [dl, dr] : dims) {
      const auto set = PreconditionerSet::KronLeft(dl, dr);
      const int d = dl * dr;
      const double eta = 0.05, eps = 0.02;
      AdaptiveState a(set, AccumulationMode::cumulative(), eta, eps, rng.normal_vector(d));
      Eigen::MatrixXd xref(dl, dr);
      for (int i = 0; i < dl; ++i)
        for (int j = 0; j < dr; ++j) xref(i, j) = a.x()[i * dr + j];
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dl, dl);
      const double eta5 = eta * std::sqrt(static_cast<double>(dr));
      const double eps5 = static_cast<double>(dr) * eps;
      double res = 0.0;
      for (int s = 0; s < 50; ++s) {
        const Eigen::VectorXd g = rng.normal_vector(d);
        Eigen::MatrixXd gm(dl, dr);
        for (int i = 0; i < dl; ++i)
          for (int j = 0; j < dr; ++j) gm(i, j) = g[i * dr + j];
        adaptive_step(a, g);
        acc += gm * gm.transpose();
        const SymMatrix lt = SymMatrix{Eigen::MatrixXd(acc)}.add_scaled_identity(eps5);
        const EigDecomp e = eig_sym(lt);
        Eigen::MatrixXd inv_root = Eigen::MatrixXd::Zero(dl, dl);
        for (int k = 0; k < dl; ++k) {
          inv_root += (1.0 / std::sqrt(e.eigenvalues[k])) * e.eigenvectors.col(k) *
                      e.eigenvectors.col(k).transpose();
        }
        xref -= eta5 * inv_root * gm;
        for (int i = 0; i < dl; ++i)
          for (int j = 0; j < dr; ++j) {
            res = std::max(res, std::abs(a.x()[i * dr + j] - xref(i, j)));
          }
      }
      kron.trial(res, [&] { return detail::failure_context(set, 0, res); });
    }
  }

  {  // Full-set cumulative matches a directly coded full-matrix accumulator
    for (int rep = 0; rep < 5; ++rep) {
      const int d = 3 + rep;
      const auto set = PreconditionerSet::Full(d);
      const double eta = 0.05, eps = 0.02;
      AdaptiveState a(set, AccumulationMode::cumulative(), eta, eps, rng.normal_vector(d));
      Eigen::VectorXd xref = a.x();
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
      double res = 0.0;
      for (int s = 0; s < 100; ++s) {
        const Eigen::VectorXd g = rng.normal_vector(d);
        adaptive_step(a, g);
        acc += g * g.transpose();
        Eigen::MatrixXd m = acc + eps * Eigen::MatrixXd::Identity(d, d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        const Eigen::VectorXd lam = es.eigenvalues();
        Eigen::MatrixXd inv_root = Eigen::MatrixXd::Zero(d, d);
        for (int k = 0; k < d; ++k) {
          inv_root += (1.0 / std::sqrt(lam[k])) * es.eigenvectors().col(k) *
                      es.eigenvectors().col(k).transpose();
        }
        xref -= eta * inv_root * g;
        res = std::max(res, (a.x() - xref).lpNorm<Eigen::Infinity>());
      }
      fulleq.trial(res, [&] {
        return detail::failure_context(set, rep, res);
      });
    }
  }

  {  // Scalar set reduces to the norm-accumulator closed form
    for (int rep = 0; rep < 5; ++rep) {
      const int d = 2 + rep;
      const auto set = PreconditionerSet::Scalar(d);
      const double eta = 0.05, eps = 0.02;
      AdaptiveState a(set, AccumulationMode::cumulative(), eta, eps, rng.normal_vector(d));
      Eigen::VectorXd xref = a.x();
      double sumsq = 0.0;
      double res = 0.0;
      for (int s = 0; s < 100; ++s) {
        const Eigen::VectorXd g = rng.normal_vector(d);
        adaptive_step(a, g);
        sumsq += g.squaredNorm();
        xref -= eta * std::sqrt(static_cast<double>(d) /
                                (sumsq + eps * static_cast<double>(d))) *
                g;
        res = std::max(res, (a.x() - xref).lpNorm<Eigen::Infinity>());
      }
      scalareq.trial(res, [&] {
        return detail::failure_context(set, rep, res);
      });
    }
  }

  SuiteReport rep;
  rep.suite = "equivalences";
  for (auto* c : {&ema, &kron, &fulleq, &scalareq}) rep.properties.push_back(c->finish());
  return rep;
}

// ---------------------------------------------------------------------------
// Suite: hard-instance
// ---------------------------------------------------------------------------

inline SuiteReport suite_hard_instance(std::uint64_t seed = kDefaultMasterSeed) {
  using detail::PropertyCheck;

  PropertyCheck lattice("derivative-lattice-exactness", 0.0);
  PropertyCheck lipschitz("derivative-one-lipschitz", 0.0);
  PropertyCheck variance("noise-l1-variance-budget", 0.0);
  PropertyCheck unbiased("noise-unbiasedness-z-test", 3.0);
  PropertyCheck relations("construction-parameter-relations", 1e-12);

  const long horizon = 128;
  const auto tuned = nsd_tuning(1.0, 1.0, 1.0, horizon);
  const HardInstance inst(256, horizon, 1.0, 1.0, 1.0, tuned.eta);
  const auto& pp = inst.p_prime();

  {  // p'(k * eta) is bitwise -eps on the protected lattice
    const long n = std::min<long>(inst.lattice_size(), 10000);
    for (long k = 0; k < n; ++k) {
      const double u = static_cast<double>(k) * inst.eta_unit();
      const double res = std::abs(pp(u) - (-inst.eps()));
      lattice.trial(res, [&] {
        nlohmann::ordered_json j;
        j["k"] = k;
        j["value"] = pp(u);
        j["want"] = -inst.eps();
        return j.dump();
      });
    }
  }

  {  // |p'(u) - p'(v)| <= |u - v| on 1e4 random pairs within one period
    SeqRng rng(seed + 400, RngStream::kValidation);
    for (long t = 0; t < 10000; ++t) {
      const double u = pp.x0() + pp.period() * rng.uniform();
      const double v = pp.x0() + pp.period() * rng.uniform();
      const double slack = 1e-12 * std::max(1.0, std::abs(u) + std::abs(v));
      const double res = std::abs(pp(u) - pp(v)) - std::abs(u - v) - slack;
      lipschitz.trial(res, [&] {
        nlohmann::ordered_json j;
        j["u"] = u;
        j["v"] = v;
        j["gap"] = std::abs(pp(u) - pp(v)) - std::abs(u - v);
        return j.dump();
      });
    }
  }

  {  // mean ||noise||_1^2 over 1e5 draws stays within 1.05 sigma^2, and the
    // empirical mean passes a 3-sigma aggregate z-test against zero
    const NoiseModel noise = inst.noise_unit();
    const long n = 100000;
    const Eigen::Index d = inst.dim();
    double sum_l1sq = 0.0;
    double sum_total = 0.0;  // sum over draws of the coordinate sum
    for (long t = 0; t < n; ++t) {
      const Eigen::VectorXd delta =
          noise.draw(seed + 1, static_cast<std::uint64_t>(t), d);
      const double l1 = delta.lpNorm<1>();
      sum_l1sq += l1 * l1;
      sum_total += delta.sum();
    }
    const double mean_l1sq = sum_l1sq / static_cast<double>(n);
    const double sigma_sq = inst.sigma_unit() * inst.sigma_unit();
    variance.trial(mean_l1sq - 1.05 * sigma_sq, [&] {
      nlohmann::ordered_json j;
      j["mean_l1_sq"] = mean_l1sq;
      j["budget"] = 1.05 * sigma_sq;
      return j.dump();
    });

    // Var(sum_i delta_i) = d c^2 theta (1 - theta) per draw.
    const double c = inst.spike_magnitude();
    const double th = inst.spike_probability();
    const double var_total = static_cast<double>(d) * c * c * th * (1.0 - th);
    const double z = std::abs(sum_total / static_cast<double>(n)) /
                     std::sqrt(var_total / static_cast<double>(n));
    unbiased.trial(z, [&] {
      nlohmann::ordered_json j;
      j["z"] = z;
      return j.dump();
    });
  }

  {  // spike magnitude, probability, and lattice budget satisfy the
    // defining identities
    const double d = static_cast<double>(inst.dim());
    const double eps = inst.eps();
    const double su = inst.sigma_unit();
    const double c = inst.spike_magnitude();
    const double th = inst.spike_probability();
    double res = std::abs(c - su * su / (5.0 * eps)) / std::max(1.0, c);
    res = std::max(res, std::abs(th - 5.0 * eps * eps / (d * su * su)) / std::max(1e-6, th));
    res = std::max(res, std::abs(c * th * d - eps) / std::max(1.0, eps));
    const double want_n = std::floor(1.0 / (4.0 * eps * eps));
    res = std::max(res, std::abs(static_cast<double>(inst.lattice_size()) - want_n));
    relations.trial(res, [&] {
      nlohmann::ordered_json j;
      j["eps"] = eps;
      j["c"] = c;
      j["theta"] = th;
      j["lattice"] = inst.lattice_size();
      return j.dump();
    });
  }

  SuiteReport rep;
  rep.suite = "hard-instance";
  for (auto* c : {&lattice, &lipschitz, &variance, &unbiased, &relations}) {
    rep.properties.push_back(c->finish());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline std::vector<std::string> suite_names() {
  return {"projections", "norms", "inequalities", "equivalences", "hard-instance"};
}

inline SuiteReport run_suite(const std::string& name,
                             std::uint64_t seed = kDefaultMasterSeed) {
  if (name == "projections") return suite_projections(seed);
  if (name == "norms") return suite_norms(seed);
  if (name == "inequalities") return suite_inequalities(seed);
  if (name == "equivalences") return suite_equivalences(seed);
  if (name == "hard-instance") return suite_hard_instance(seed);
  throw InvalidInput("run_suite: unknown suite '" + name + "'");
}

inline std::vector<SuiteReport> run_suites(const std::string& which,
                                           std::uint64_t seed = kDefaultMasterSeed) {
  std::vector<SuiteReport> out;
  if (which == "all") {
    for (const auto& n : suite_names()) out.push_back(run_suite(n, seed));
  } else {
    out.push_back(run_suite(which, seed));
  }
  return out;
}

}  // namespace precopt::validate
