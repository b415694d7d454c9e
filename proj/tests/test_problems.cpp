#include <precopt/problems.hpp>

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

namespace precopt {
namespace {

namespace ts = precopt::testing;

// ---------------------------------------------------------------------------
// Noise models
// ---------------------------------------------------------------------------

TEST(NoiseModel, FactoriesValidateInputs) {
  EXPECT_THROW(NoiseModel::gaussian_iso(-1.0), InvalidInput);
  EXPECT_THROW(NoiseModel::gaussian_iso(std::nan("")), InvalidInput);
  Eigen::Matrix2d neg;
  neg << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  EXPECT_THROW(NoiseModel::gaussian_cov(SymMatrix(neg)), NotPsd);
  EXPECT_THROW(NoiseModel::bernoulli_spike(0.5, 1.5, Eigen::VectorXd::Zero(2)), InvalidInput);
  EXPECT_THROW(NoiseModel::bernoulli_spike(0.5, -0.1, Eigen::VectorXd::Zero(2)), InvalidInput);
  EXPECT_TRUE(NoiseModel::none().deterministic());
  EXPECT_FALSE(NoiseModel::gaussian_iso(1.0).deterministic());
}

TEST(NoiseModel, DrawsAreKeyedByStepAndCoordinate) {
  const NoiseModel m = NoiseModel::gaussian_iso(2.0);
  const Eigen::VectorXd a = m.draw(42, 7, 5);
  const Eigen::VectorXd b = m.draw(42, 7, 5);
  ASSERT_EQ(a, b);  // bit-identical replay
  EXPECT_NE(a, m.draw(42, 8, 5));
  EXPECT_NE(a, m.draw(43, 7, 5));
  // Coordinate i depends only on (seed, t, i): a shorter draw is a prefix.
  const Eigen::VectorXd c = m.draw(42, 7, 3);
  EXPECT_EQ(a.head(3), c);
}

TEST(NoiseModel, GaussianIsoMoments) {
  const double var = 2.25;
  const NoiseModel m = NoiseModel::gaussian_iso(var);
  const int n = 100000, d = 3;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (int t = 0; t < n; ++t) {
    const Eigen::VectorXd x = m.draw(5, static_cast<std::uint64_t>(t), d);
    mean += x;
    second += x * x.transpose();
  }
  mean /= n;
  second /= n;
  const double se_mean = 3.0 * std::sqrt(var / n);
  for (int i = 0; i < d; ++i) {
    EXPECT_NEAR(mean[i], 0.0, se_mean);
    EXPECT_NEAR(second(i, i), var, 3.0 * var * std::sqrt(2.0 / n));
    for (int j = 0; j < i; ++j) EXPECT_NEAR(second(i, j), 0.0, 3.0 * var / std::sqrt(n));
  }
  EXPECT_NEAR(m.covariance(d)(0, 0), var, 0.0);
}

TEST(NoiseModel, GaussianCovMatchesCovarianceEntrywise) {
  SeqRng rng(314, RngStream::kValidation);
  const SymMatrix sigma = ts::random_psd(rng, 3);
  const NoiseModel m = NoiseModel::gaussian_cov(sigma);
  const int n = 100000, d = 3;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (int t = 0; t < n; ++t) {
    const Eigen::VectorXd x = m.draw(11, static_cast<std::uint64_t>(t), d);
    mean += x;
    second += x * x.transpose();
  }
  mean /= n;
  second /= n;
  for (int i = 0; i < d; ++i) {
    EXPECT_NEAR(mean[i], 0.0, 3.0 * std::sqrt(sigma(i, i) / n));
    for (int j = 0; j <= i; ++j) {
      const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / n);
      EXPECT_NEAR(second(i, j), sigma(i, j), 3.0 * se) << i << "," << j;
    }
  }
  EXPECT_THROW(m.draw(11, 0, 2), InvalidInput);  // dimension must match covariance
}

TEST(NoiseModel, BernoulliSpikeMomentsAndCenteringDrift) {
  const double c = 0.8, theta = 0.07;
  const int d = 4, n = 100000;
  const NoiseModel m =
      NoiseModel::bernoulli_spike(c, theta, Eigen::VectorXd::Constant(d, c * theta));
  EXPECT_EQ(m.mean(d).norm(), 0.0);  // drift cancels the spike mean exactly
  const double vcoord = c * c * theta * (1.0 - theta);
  EXPECT_NEAR(m.covariance(d)(1, 1), vcoord, 1e-15);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  double l1sq = 0.0;
  for (int t = 0; t < n; ++t) {
    const Eigen::VectorXd x = m.draw(21, static_cast<std::uint64_t>(t), d);
    mean += x;
    l1sq += x.lpNorm<1>() * x.lpNorm<1>();
  }
  mean /= n;
  l1sq /= n;
  for (int i = 0; i < d; ++i) EXPECT_NEAR(mean[i], 0.0, 3.0 * std::sqrt(vcoord / n));
  const double el1sq =
      c * c * (d * theta * (1.0 - theta) +
               d * (d - 1) * 4.0 * theta * theta * (1.0 - theta) * (1.0 - theta));
  EXPECT_NEAR(l1sq, el1sq, 0.05 * el1sq);
}

// ---------------------------------------------------------------------------
// Quadratic problems
// ---------------------------------------------------------------------------

TEST(Quadratic, ValueAndGradientClosedForm) {
  QuadraticProblem p(SymMatrix::Identity(2), Eigen::VectorXd::Zero(2));
  Eigen::Vector2d x(1.0, 2.0);
  EXPECT_EQ(p.loss(x), 2.5);
  EXPECT_EQ(p.gradient(x), x);

  SeqRng rng(9, RngStream::kValidation);
  const SymMatrix a = ts::random_sym(rng, 4);
  const Eigen::VectorXd b = rng.normal_vector(4);
  QuadraticProblem q(a, b);
  const Eigen::VectorXd y = rng.normal_vector(4);
  EXPECT_EQ(q.gradient(y), (a.mat() * y - b).eval());
}

TEST(Quadratic, StationaryPointSolvesSystem) {
  SeqRng rng(10, RngStream::kValidation);
  const SymMatrix a = ts::random_pd(rng, 5);
  const Eigen::VectorXd b = rng.normal_vector(5);
  QuadraticProblem p(a, b);
  ASSERT_TRUE(p.stationary_consistent());
  EXPECT_LE((a.apply(p.x_star()) - b).norm(), 1e-10 * (1.0 + b.norm()));
  EXPECT_LE(p.f_star(), p.loss(rng.normal_vector(5)));
}

TEST(Quadratic, SingularHessianConsistencyFlag) {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  a(0, 0) = 1.0;
  QuadraticProblem consistent(SymMatrix(a), Eigen::Vector2d(1.0, 0.0));
  EXPECT_TRUE(consistent.stationary_consistent());
  EXPECT_NEAR(consistent.x_star()[0], 1.0, 1e-12);
  EXPECT_NEAR(consistent.x_star()[1], 0.0, 1e-12);

  QuadraticProblem inconsistent(SymMatrix(a), Eigen::Vector2d(0.0, 1.0));
  EXPECT_FALSE(inconsistent.stationary_consistent());
  EXPECT_THROW(inconsistent.f_star(), InvalidInput);
}

// ---------------------------------------------------------------------------
// Washboard objective
// ---------------------------------------------------------------------------

TEST(Washboard, WaveShapeAndContinuity) {
  const double a = 0.7;
  const WashboardProblem w(1, a, Eigen::VectorXd::Zero(1));
  EXPECT_EQ(w.q_prime(0.0), 0.0);
  EXPECT_EQ(w.q_prime(a), a);
  EXPECT_EQ(w.q_prime(2.0 * a), 0.0);
  EXPECT_NEAR(w.q_prime(3.0 * a), -a, 1e-15);
  EXPECT_NEAR(w.q_prime(4.0 * a - 1e-12), 0.0, 2e-12);

  EXPECT_EQ(w.q_value(0.0), 0.0);
  EXPECT_NEAR(w.q_value(a), 0.5 * a * a, 1e-15);
  EXPECT_NEAR(w.q_value(2.0 * a), a * a, 1e-15);
  EXPECT_NEAR(w.q_value(3.0 * a), 0.5 * a * a, 1e-14);
  EXPECT_NEAR(w.q_value(4.0 * a), 0.0, 1e-14);
  // C^1 junctions: value and derivative agree from both sides of each knot.
  for (double knot : {a, 3.0 * a}) {
    EXPECT_NEAR(w.q_value(knot - 1e-9), w.q_value(knot + 1e-9), 1e-8);
    EXPECT_NEAR(w.q_prime(knot - 1e-9), w.q_prime(knot + 1e-9), 3e-9);
  }
}

TEST(Washboard, GradientMatchesCentralDifferences) {
  const WashboardProblem w = WashboardProblem::golden(4, 0.7);
  SeqRng rng(77, RngStream::kValidation);
  int checked = 0;
  while (checked < 20) {
    const Eigen::VectorXd x = 3.0 * rng.normal_vector(4);
    // Skip points whose phase sits within 1e-3 of a derivative kink.
    bool safe = true;
    for (int i = 0; i < 4; ++i) {
      double s = std::fmod(x[i] - w.offsets()[i], 4.0 * 0.7);
      if (s < 0) s += 4.0 * 0.7;
      for (double k : {0.0, 0.7, 3.0 * 0.7, 4.0 * 0.7}) {
        if (std::abs(s - k) < 1e-3) safe = false;
      }
    }
    if (!safe) continue;
    ++checked;
    const Eigen::VectorXd g = w.gradient(x);
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      EXPECT_NEAR(g[i], (w.loss(xp) - w.loss(xm)) / 2e-6, 1e-6);
    }
  }
}

TEST(Washboard, GradientLipschitzAndDescentLemma) {
  const int d = 6;
  const WashboardProblem w = WashboardProblem::golden(d, 0.5);
  SeqRng rng(78, RngStream::kValidation);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::VectorXd x = 5.0 * rng.normal_vector(d);
    const Eigen::VectorXd y = x + 0.5 * rng.normal_vector(d);
    const double lip = (w.gradient(x) - w.gradient(y)).lpNorm<1>();
    EXPECT_LE(lip, (x - y).lpNorm<Eigen::Infinity>() * (1.0 + 1e-12) + 1e-15);
    const double gap =
        w.loss(y) - w.loss(x) - w.gradient(x).dot(y - x);
    const double bound = 0.5 * std::pow((x - y).lpNorm<Eigen::Infinity>(), 2);
    EXPECT_LE(gap, bound * (1.0 + 1e-10) + 1e-15);
  }
  // Minimum value 0 is attained when every coordinate sits at its offset.
  EXPECT_NEAR(w.loss(w.offsets()), 0.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Piecewise derivative (tent construction)
// ---------------------------------------------------------------------------

TEST(PiecewiseDerivative, TentValuesAndPlateau) {
  const double eps = 0.25;
  const PiecewiseDerivative g(eps, {0.0, 1.0});
  EXPECT_EQ(g.period(), 4.0);
  ASSERT_EQ(g.knots().size(), 2u);
  EXPECT_EQ(g(0.0), -eps);
  EXPECT_EQ(g(1.0), -eps);
  EXPECT_EQ(g(0.5), -eps + 0.5);            // midpoint of a gap of 1
  EXPECT_EQ(g(2.5), -eps + 1.5);            // midpoint of the closing segment [1, 4)
  EXPECT_NEAR(g(3.9), -eps - (3.9 - 4.0), 1e-15);
  EXPECT_EQ(g(-0.5), -eps);                 // left plateau
  EXPECT_EQ(g(-1e9), -eps);
}

TEST(PiecewiseDerivative, BreakpointsHitLevelExactly) {
  const double eps = 0.05;  // budget 1/(4 eps^2) = 100 points
  SeqRng rng(55, RngStream::kValidation);
  std::vector<double> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(rng.uniform(0.0, 1.0 / eps));
  pts.push_back(0.0);
  const PiecewiseDerivative g(eps, pts);
  for (double y : g.knots()) {
    EXPECT_EQ(g(y), -eps);  // bitwise at the breakpoints themselves
    // One period out, y + period lands on a coarser ulp grid, so the tent is
    // re-entered a rounding error away from the knot.
    EXPECT_NEAR(g(y + g.period()), -eps, 1e-12);
  }
}

TEST(PiecewiseDerivative, LipschitzOnRandomPairs) {
  const double eps = 0.05;
  SeqRng rng(56, RngStream::kValidation);
  std::vector<double> pts = {0.0};
  for (int i = 0; i < 10; ++i) pts.push_back(rng.uniform(0.0, 1.0 / eps));
  const PiecewiseDerivative g(eps, pts);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(-5.0, 45.0);
    const double b = rng.uniform(-5.0, 45.0);
    EXPECT_LE(std::abs(g(a) - g(b)), std::abs(a - b) * (1.0 + 1e-12) + 1e-15);
  }
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(0.0, 30.0);
    EXPECT_NEAR(g(x + g.period()), g(x), 1e-12);
  }
}

TEST(PiecewiseDerivative, FoldsBreakpointsIntoOnePeriod) {
  const double eps = 0.25;  // period 4
  const PiecewiseDerivative g(eps, {0.0, 1.0, 1.0 + 4.0, 2.5});
  ASSERT_EQ(g.knots().size(), 3u);  // 1 + period folds onto 1
  EXPECT_EQ(g.knots()[0], 0.0);
  EXPECT_EQ(g.knots()[1], 1.0);
  EXPECT_EQ(g.knots()[2], 2.5);
  EXPECT_EQ(g(5.0), -eps);  // 5 = 1 + period
}

TEST(PiecewiseDerivative, ConstructionErrors) {
  EXPECT_THROW(PiecewiseDerivative(0.5, {0.0, 1.0}), ConstructionInfeasible);  // max 1 point
  EXPECT_NO_THROW(PiecewiseDerivative(0.5, {0.0}));
  EXPECT_THROW(PiecewiseDerivative(0.0, {0.0}), InvalidInput);
  EXPECT_THROW(PiecewiseDerivative(-1.0, {0.0}), InvalidInput);
  EXPECT_THROW(PiecewiseDerivative(0.1, {}), InvalidInput);
  EXPECT_THROW(PiecewiseDerivative(0.1, {std::nan("")}), InvalidInput);
}

TEST(PiecewiseDerivative, IntegralNonnegativeOverPeriodAndBoundedDip) {
  SeqRng rng(57, RngStream::kValidation);
  for (int trial = 0; trial < 3; ++trial) {
    const double eps = rng.uniform(0.05, 0.1);  // budget >= 25 breakpoints
    std::vector<double> pts = {0.0};
    const int extra = static_cast<int>(rng.below(8));
    for (int i = 0; i < extra; ++i) pts.push_back(rng.uniform(0.0, 1.0 / eps));
    const PiecewiseDerivative g(eps, pts);
    EXPECT_GE(g.period_integral(), -1e-6);
    // Running integral from x0 never dips below -1 (depth bound).
    const int n = 10000;
    const double h = g.period() / n;
    double acc = 0.0, lo = 0.0, prev = g(g.x0());
    for (int k = 1; k <= n; ++k) {
      const double cur = g(g.x0() + h * k);
      acc += 0.5 * h * (prev + cur);
      prev = cur;
      lo = std::min(lo, acc);
    }
    EXPECT_GE(lo, -1.0 - 1e-6);
    EXPECT_NEAR(acc, g.period_integral(), 1e-4);
    // Far-field antiderivative decomposes into whole periods plus remainder.
    const double r = rng.uniform(0.0, g.period());
    EXPECT_NEAR(g.antiderivative(g.x0() + 3.0 * g.period() + r),
                3.0 * g.period_integral() + g.antiderivative(g.x0() + r), 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Hard instance
// ---------------------------------------------------------------------------

TEST(HardInstance, DerivedConstantsMatchFrozenValues) {
  const HardInstance big(256, 128, 1.0, 1.0, 1.0, std::pow(128.0, -0.75));
  EXPECT_NEAR(big.eps(), 0.23643540225079396, 1e-12 * 0.236);
  EXPECT_NEAR(big.spike_magnitude(), 0.8458970107524513, 1e-12);
  EXPECT_NEAR(big.spike_probability(), 0.0010918300671385692, 1e-15);
  EXPECT_EQ(big.lattice_size(), 4);
  EXPECT_NEAR(big.gradient_floor(), 0.031998052130773655, 1e-13);
  EXPECT_LE(big.spike_probability(), 1.0 / 256.0);
  // Expected spike mass: E||delta||_1 = c * d * theta = eps.
  EXPECT_NEAR(big.spike_magnitude() * 256.0 * big.spike_probability(), big.eps(),
              1e-12 * big.eps());

  const HardInstance scaled(8, 50, 2.0, 3.0, 1.5, 0.05);
  EXPECT_NEAR(scaled.eps(), 0.12446659545769566, 1e-12);
  EXPECT_NEAR(scaled.spike_magnitude(), 0.602571314208489, 1e-12);
  EXPECT_NEAR(scaled.spike_probability(), 0.025819888974716106, 1e-14);
  EXPECT_EQ(scaled.lattice_size(), 16);
  EXPECT_NEAR(scaled.gradient_floor(), 0.041260973635981905, 1e-13);
  EXPECT_NEAR(scaled.sigma_unit(), 1.5 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(scaled.eta_unit(), 0.05 * std::sqrt(1.5), 1e-15);
}

TEST(HardInstance, LatticePointsAreExactlyFlat) {
  const HardInstance inst(4, 16, 1.0, 1.0, 1.0, 0.1);
  for (long k = 0; k < inst.lattice_size(); ++k) {
    const double u = static_cast<double>(k) * inst.eta_unit();
    EXPECT_EQ(inst.p_prime()(u), -inst.eps());  // bitwise
  }
  // Mean gradient on the lattice: every coordinate exactly -eps/d (unit scale
  // and scale factor 1 here).
  Eigen::VectorXd x(4);
  x << 0.0, inst.eta_unit(), 2.0 * inst.eta_unit(), 3.0 * inst.eta_unit();
  const Eigen::VectorXd g = inst.gradient(x);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(g[i], -inst.eps() / 4.0);
}

TEST(HardInstance, SpikeFreeCoordinatesAreExactlyZeroAtStart) {
  const HardInstance inst(256, 128, 1.0, 1.0, 1.0, std::pow(128.0, -0.75));
  const Eigen::VectorXd x0 = inst.initial_point();
  const std::uint64_t seed = 7;
  int spikes = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Eigen::VectorXd g = inst.stochastic_gradient(x0, t, seed);
    for (Eigen::Index i = 0; i < 256; ++i) {
      const bool hit = keyed_bernoulli(inst.spike_probability(), seed, RngStream::kNoise, t,
                                       static_cast<std::uint64_t>(i));
      if (hit) {
        ++spikes;
        EXPECT_EQ(g[i], -inst.spike_magnitude());
      } else {
        EXPECT_EQ(g[i], 0.0);  // exact cancellation on the lattice
      }
    }
  }
  EXPECT_GT(spikes, 0);  // theta*256*20 ~ 5.6 expected hits
}

TEST(HardInstance, StochasticOracleUnbiasedPerCoordinate) {
  const HardInstance inst(4, 16, 1.0, 1.0, 1.0, 0.1);
  const int n = 100000;
  Eigen::VectorXd x(4);
  x << 0.0, inst.eta_unit(), 0.37, -0.8;  // mix of lattice and off-lattice points
  const Eigen::VectorXd mean_grad = inst.gradient(x);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
  for (int t = 0; t < n; ++t) {
    acc += inst.stochastic_gradient(x, static_cast<std::uint64_t>(t), 3);
  }
  acc /= n;
  const double sd = inst.spike_magnitude() *
                    std::sqrt(inst.spike_probability() * (1.0 - inst.spike_probability()));
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(acc[i], mean_grad[i], 3.0 * sd / std::sqrt(static_cast<double>(n)));
  }
}

TEST(HardInstance, NoiseL1VarianceWithinBudget) {
  const HardInstance inst(64, 32, 1.0, 1.0, 1.0, 0.05);
  const Eigen::VectorXd x0 = inst.initial_point();
  const Eigen::VectorXd mean_grad = inst.gradient(x0);
  const int n = 100000;
  double l1sq = 0.0;
  for (int t = 0; t < n; ++t) {
    const double v =
        (inst.stochastic_gradient(x0, static_cast<std::uint64_t>(t), 9) - mean_grad).lpNorm<1>();
    l1sq += v * v;
  }
  l1sq /= n;
  EXPECT_LE(l1sq, 1.05 * inst.sigma() * inst.sigma());
  EXPECT_GT(l1sq, 0.0);
}

TEST(HardInstance, UnitScaleRescalingConsistency) {
  // Sign-descent iterates on the native problem coincide with rescaled
  // iterates on the unit-scale problem driven by the same spike pattern.
  const HardInstance native(6, 50, 2.0, 3.0, 1.5, 0.05);
  const HardInstance unit(6, 50, 1.0, 1.0, native.sigma_unit(), native.eta_unit());
  ASSERT_NEAR(unit.eps(), native.eps(), 0.0);
  ASSERT_NEAR(unit.spike_probability(), native.spike_probability(), 0.0);

  const double alpha = 0.4, scale_x = std::sqrt(3.0 / 2.0);
  const std::uint64_t seed = 12;
  Eigen::VectorXd x = native.initial_point(), xu = unit.initial_point();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(6), mu = Eigen::VectorXd::Zero(6);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd g = native.stochastic_gradient(x, static_cast<std::uint64_t>(t), seed);
    const Eigen::VectorXd gu = unit.stochastic_gradient(xu, static_cast<std::uint64_t>(t), seed);
    if (t == 0) {
      m = g;
      mu = gu;
    } else {
      m = (1.0 - alpha) * m + alpha * g;
      mu = (1.0 - alpha) * mu + alpha * gu;
    }
    for (int i = 0; i < 6; ++i) {
      x[i] -= 0.05 * ((m[i] > 0.0) - (m[i] < 0.0));
      xu[i] -= native.eta_unit() * ((mu[i] > 0.0) - (mu[i] < 0.0));
    }
    EXPECT_LE((x - xu / scale_x).lpNorm<Eigen::Infinity>(), 1e-10) << "t=" << t;
  }
}

TEST(HardInstance, DepthInvariantHoldsOnPeriod) {
  for (const HardInstance& inst :
       {HardInstance(4, 16, 1.0, 1.0, 1.0, 0.1),
        HardInstance(256, 128, 1.0, 1.0, 1.0, std::pow(128.0, -0.75))}) {
    const PiecewiseDerivative& g = inst.p_prime();
    const int n = 10000;
    const double h = g.period() / n;
    double acc = 0.0, lo = 0.0, prev = g(g.x0());
    for (int k = 1; k <= n; ++k) {
      const double cur = g(g.x0() + h * k);
      acc += 0.5 * h * (prev + cur);
      prev = cur;
      lo = std::min(lo, acc);
    }
    EXPECT_GE(lo, -1.0 - 1e-6);   // initial gap to the infimum stays at most 1
    EXPECT_GE(acc, -1e-6);        // one-period integral nonnegative
  }
}

TEST(HardInstance, StartPointMustBeOrigin) {
  const HardInstance inst(4, 16, 1.0, 1.0, 1.0, 0.1);
  EXPECT_NO_THROW(inst.validate_start(Eigen::VectorXd::Zero(4)));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  x[2] = 1e-30;
  EXPECT_THROW(inst.validate_start(x), InvalidInput);
  EXPECT_THROW(inst.validate_start(Eigen::VectorXd::Zero(3)), InvalidInput);

  const Problem p = inst;
  EXPECT_NO_THROW(validate_start(p, Eigen::VectorXd::Zero(4)));
  EXPECT_THROW(validate_start(p, x), InvalidInput);
}

TEST(HardInstance, ConstructionRejectsDegenerateParameters) {
  EXPECT_THROW(HardInstance(4, 16, 1.0, 1.0, 0.0, 0.1), InvalidInput);   // noise-free
  EXPECT_THROW(HardInstance(0, 16, 1.0, 1.0, 1.0, 0.1), InvalidInput);
  EXPECT_THROW(HardInstance(4, 0, 1.0, 1.0, 1.0, 0.1), InvalidInput);
  EXPECT_THROW(HardInstance(4, 16, -1.0, 1.0, 1.0, 0.1), InvalidInput);
  EXPECT_THROW(HardInstance(4, 16, 1.0, 1.0, 1.0, 0.0), InvalidInput);
  // Large sigma pushes the flat level past 1/2: no room for even one point.
  EXPECT_THROW(HardInstance(1, 1, 1.0, 1.0, 2.0, 0.1), ConstructionInfeasible);
}

// ---------------------------------------------------------------------------
// Variant dispatch
// ---------------------------------------------------------------------------

TEST(ProblemVariant, DispatchAndDeterministicOracle) {
  const Problem p = QuadraticProblem(SymMatrix::Identity(2), Eigen::VectorXd::Zero(2),
                                     NoiseModel::none());
  EXPECT_EQ(problem_dim(p), 2);
  EXPECT_TRUE(problem_deterministic(p));
  const Eigen::Vector2d x(1.0, 2.0);
  auto [v, g] = grad(p, x);
  EXPECT_EQ(v, 2.5);
  auto [vs, gs] = stoch_grad(p, x, 17, 4);
  EXPECT_EQ(vs, v);
  EXPECT_EQ(gs, g);  // NoiseModel::none: stochastic oracle equals the exact one
}

TEST(ProblemVariant, StochasticValueIsLinearlyPerturbedLoss) {
  const Problem p = QuadraticProblem(SymMatrix::Identity(3), Eigen::VectorXd::Ones(3),
                                     NoiseModel::gaussian_iso(0.5));
  SeqRng rng(99, RngStream::kValidation);
  const Eigen::VectorXd x = rng.normal_vector(3);
  auto [v0, g0] = grad(p, x);
  auto [v1, g1] = stoch_grad(p, x, 5, 123);
  auto [v2, g2] = stoch_grad(p, x, 5, 123);
  EXPECT_EQ(v1, v2);  // reproducible given (seed, t)
  EXPECT_EQ(g1, g2);
  const Eigen::VectorXd delta = g1 - g0;
  EXPECT_GT(delta.norm(), 0.0);
  EXPECT_NEAR(v1, v0 + delta.dot(x), 1e-12);
}

TEST(ProblemVariant, NonFiniteResultsRaiseNumericalError) {
  const Problem p = QuadraticProblem(SymMatrix::Identity(2), Eigen::VectorXd::Zero(2));
  const Eigen::Vector2d huge(1e200, 0.0);
  EXPECT_THROW(loss(p, huge), NumericalError);
  EXPECT_THROW(validate_start(p, Eigen::VectorXd::Zero(3)), InvalidInput);
}

TEST(ProblemVariant, HardInstanceNoiseModelConsistency) {
  const HardInstance inst(8, 50, 2.0, 3.0, 1.5, 0.05);
  const NoiseModel native = inst.noise_native();
  const SymMatrix cov = native.covariance(8);
  const SymMatrix ref = inst.noise_covariance();
  EXPECT_NEAR(cov(0, 0), ref(0, 0), 1e-15 * std::abs(ref(0, 0)));
  EXPECT_EQ(native.mean(8).norm(), 0.0);
  const Problem p = inst;
  EXPECT_FALSE(problem_deterministic(p));
}

}  // namespace
}  // namespace precopt
