#include <precopt/bench.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <precopt/validate.hpp>

namespace precopt::bench {
namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fresh_dir(const std::string& tag) {
  const fs::path p = fs::path(::testing::TempDir()) / ("precopt_bench_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

ExperimentConfig small_quadratic_config() {
  ExperimentConfig c;
  c.name = "quad";
  c.problem = {{"kind", "quadratic"},
               {"hessian", {{"type", "diagonal"}, {"values", {1.0, 4.0, 9.0}}}},
               {"linear", {1.0, -2.0, 0.5}}};
  c.set_kind = "diagonal";
  c.algorithm = "adaptive";
  c.eta = 0.3;
  c.eps = 1e-8;
  c.horizon = 12;
  c.seeds = {3, 1, 7};
  c.x0 = std::vector<double>{2.0, -1.0, 1.5};
  return c;
}

// ---------------------------------------------------------------------------
// Config serialization
// ---------------------------------------------------------------------------

TEST(Config, JsonRoundTripIsLossless) {
  ExperimentConfig c = small_quadratic_config();
  c.mode = "ema";
  c.beta = 0.9375;                  // exact binary fraction
  c.eta = 0.1;                      // repeating binary fraction
  c.eps = 1.2345678901234567e-13;   // all 17 digits meaningful
  c.accel_alpha = 2.0 / 3.0;
  c.radius = 1e300;
  const json j1 = to_json(c);
  const ExperimentConfig back = config_from_json(j1);
  const json j2 = to_json(back);
  EXPECT_EQ(j1.dump(), j2.dump());
  EXPECT_EQ(back.eta, c.eta);
  EXPECT_EQ(back.eps, c.eps);
  EXPECT_EQ(back.beta, c.beta);
  EXPECT_EQ(*back.accel_alpha, *c.accel_alpha);
  EXPECT_EQ(*back.radius, *c.radius);
  EXPECT_EQ(back.seeds, c.seeds);
  EXPECT_EQ(*back.x0, *c.x0);
}

TEST(Config, HashIsStableAndContentSensitive) {
  const ExperimentConfig c = small_quadratic_config();
  const std::string h1 = config_hash(c);
  const std::string h2 = config_hash(config_from_json(to_json(c)));
  EXPECT_EQ(h1, h2);
  EXPECT_EQ(h1.size(), 16u);
  ExperimentConfig d = c;
  d.eta = c.eta + 1e-12;
  EXPECT_NE(config_hash(d), h1);
  ExperimentConfig e = c;
  e.seeds.push_back(99);
  EXPECT_NE(config_hash(e), h1);
}

TEST(Config, RejectsMalformedInput) {
  json j = to_json(small_quadratic_config());
  {
    json bad = j;
    bad["schema_version"] = 2;
    EXPECT_THROW(config_from_json(bad), InvalidInput);
  }
  {
    json bad = j;
    bad.erase("problem");
    EXPECT_THROW(config_from_json(bad), InvalidInput);
  }
  {
    json bad = j;
    bad["seeds"] = json::array();
    EXPECT_THROW(config_from_json(bad), InvalidInput);
  }
  {
    json bad = j;
    bad["format"] = "parquet";
    EXPECT_THROW(config_from_json(bad), InvalidInput);
  }
  EXPECT_THROW(config_from_json(json::array()), InvalidInput);
}

// ---------------------------------------------------------------------------
// Problem construction from JSON
// ---------------------------------------------------------------------------

TEST(ProblemJson, HessianVariants) {
  const SymMatrix diag = hessian_from_json({{"type", "diagonal"}, {"values", {2.0, 5.0}}});
  EXPECT_EQ(diag(0, 0), 2.0);
  EXPECT_EQ(diag(1, 1), 5.0);
  EXPECT_EQ(diag(0, 1), 0.0);

  const SymMatrix dense =
      hessian_from_json({{"type", "dense"}, {"rows", {{2.0, 1.0}, {1.0, 3.0}}}});
  EXPECT_EQ(dense(0, 1), 1.0);
  EXPECT_EQ(dense(1, 1), 3.0);

  const SymMatrix ax = hessian_from_json(
      {{"type", "logspace"}, {"dim", 6}, {"cond", 100.0}, {"scale", 2.0}});
  const EigDecomp e = eig_sym(ax);
  EXPECT_NEAR(e.eigenvalues[5] / e.eigenvalues[0], 100.0, 1e-9);
  EXPECT_NEAR(e.eigenvalues[5], 2.0, 1e-12);

  const json rotated = {{"type", "logspace"}, {"dim", 6}, {"cond", 100.0},
                        {"scale", 2.0}, {"rotate_seed", 11}};
  const SymMatrix r1 = hessian_from_json(rotated);
  const SymMatrix r2 = hessian_from_json(rotated);
  EXPECT_EQ((r1.mat() - r2.mat()).norm(), 0.0);  // bitwise reproducible
  const EigDecomp er = eig_sym(r1);
  EXPECT_NEAR(er.eigenvalues[5] / er.eigenvalues[0], 100.0, 1e-9);
  // A rotation leaves the spectrum alone but fills in off-diagonal entries.
  double off = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 6; ++k)
      if (i != k) off = std::max(off, std::abs(r1(i, k)));
  EXPECT_GT(off, 1e-6);

  EXPECT_THROW(hessian_from_json({{"type", "mystery"}}), InvalidInput);
  EXPECT_THROW(hessian_from_json({{"type", "dense"}, {"rows", {{1.0, 0.0}}}}), InvalidInput);
}

TEST(ProblemJson, NoiseVariantsAndDeterminism) {
  EXPECT_TRUE(noise_from_json({{"kind", "none"}}).deterministic());
  EXPECT_TRUE(noise_from_json(json()).deterministic());
  const NoiseModel iso = noise_from_json({{"kind", "gaussian_iso"}, {"variance", 2.0}});
  EXPECT_FALSE(iso.deterministic());
  EXPECT_EQ(iso.covariance(2)(0, 0), 2.0);
  const NoiseModel cov =
      noise_from_json({{"kind", "gaussian_cov"}, {"rows", {{2.0, 1.0}, {1.0, 2.0}}}});
  EXPECT_EQ(cov.covariance(2)(0, 1), 1.0);
  const NoiseModel spike = noise_from_json(
      {{"kind", "bernoulli_spike"}, {"c", 3.0}, {"theta", 0.25}, {"drift", {0.75, 0.75}}});
  EXPECT_EQ(spike.mean(2)[0], 0.0);
  EXPECT_THROW(noise_from_json({{"kind", "pink"}}), InvalidInput);

  // Same JSON, two constructions: identical draws and identical dynamics.
  const json pj = {{"kind", "quadratic"},
                   {"hessian", {{"type", "logspace"}, {"dim", 4}, {"cond", 10.0},
                                {"rotate_seed", 5}}},
                   {"noise", {{"kind", "gaussian_iso"}, {"variance", 0.5}}}};
  const Problem p1 = problem_from_json(pj);
  const Problem p2 = problem_from_json(pj);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  EXPECT_EQ(loss(p1, x), loss(p2, x));
  EXPECT_EQ((gradient(p1, x) - gradient(p2, x)).norm(), 0.0);
  const auto [v1, g1] = stoch_grad(p1, x, 3, 17);
  const auto [v2, g2] = stoch_grad(p2, x, 3, 17);
  EXPECT_EQ(v1, v2);
  EXPECT_EQ((g1 - g2).norm(), 0.0);
}

TEST(ProblemJson, SetAndAlgorithmWiring) {
  ExperimentConfig c = small_quadratic_config();
  c.set_kind = "kron_left";
  c.dl = 3;
  c.dr = 1;
  const PreconditionerSet set = set_from_config(c, 3);
  EXPECT_EQ(set.kind, SetKind::KronLeft);
  c.dl = 2;
  EXPECT_THROW(set_from_config(c, 3), InvalidInput);
  c.set_kind = "hexagonal";
  EXPECT_THROW(set_from_config(c, 3), InvalidInput);

  ExperimentConfig a = small_quadratic_config();
  a.algorithm = "accelerated";
  a.accel_alpha = 0.5;
  const AlgoConfig algo = algo_from_config(a, 3);
  EXPECT_EQ(algo.algorithm, Algorithm::Accelerated);
  ASSERT_TRUE(algo.accel_alpha.has_value());
  EXPECT_EQ(*algo.accel_alpha, 0.5);
  a.algorithm = "warp";
  EXPECT_THROW(algo_from_config(a, 3), InvalidInput);
  a.algorithm = "adaptive";
  a.mode = "sometimes";
  EXPECT_THROW(algo_from_config(a, 3), InvalidInput);
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

TEST(Traces, CsvHeaderIsExact) {
  EXPECT_EQ(trace_header(false), "t,loss,grad_l1,grad_l2,grad_dual,step_chnorm");
  EXPECT_EQ(trace_header(true), "t,loss,grad_l1,grad_l2,grad_dual,step_chnorm,xbar_loss");
}

TEST(Traces, EmittedCsvRoundTripsByteExactly) {
  const std::string dir = fresh_dir("csv_roundtrip");
  const ExperimentConfig c = small_quadratic_config();
  const RunResult r = run_experiment(c, dir);
  ASSERT_EQ(r.exit_code, 0) << r.reason;
  ASSERT_EQ(r.trace_paths.size(), 4u);  // three traces + summary
  int csv_count = 0;
  for (const auto& path : r.trace_paths) {
    if (path.size() < 4 || path.substr(path.size() - 4) != ".csv") continue;
    ++csv_count;
    const std::string original = slurp(path);
    const ParsedTrace parsed = parse_trace_file(path);
    EXPECT_FALSE(parsed.has_xbar);
    ASSERT_EQ(parsed.rows.size(), 13u);  // horizon + 1
    // Re-serialize the parsed rows: bit-identical text proves the 17-digit
    // format round-trips through strtod without loss.
    Trajectory tr;
    tr.rows = parsed.rows;
    std::ostringstream out;
    write_trace_csv(out, tr, false);
    EXPECT_EQ(out.str(), original);
  }
  EXPECT_EQ(csv_count, 3);
}

TEST(Traces, JsonFormatCarriesIdenticalValues) {
  const std::string dir_csv = fresh_dir("fmt_csv");
  const std::string dir_json = fresh_dir("fmt_json");
  ExperimentConfig c = small_quadratic_config();
  c.algorithm = "accelerated";
  c.eps = 1e-6;
  const RunResult rc = run_experiment(c, dir_csv);
  c.format = "json";
  const RunResult rj = run_experiment(c, dir_json);
  ASSERT_EQ(rc.exit_code, 0);
  ASSERT_EQ(rj.exit_code, 0);
  for (std::size_t i = 0; i + 1 < rc.trace_paths.size(); ++i) {
    const ParsedTrace a = parse_trace_file(rc.trace_paths[i]);
    const ParsedTrace b = parse_trace_file(rj.trace_paths[i]);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    EXPECT_TRUE(a.has_xbar);
    EXPECT_TRUE(b.has_xbar);
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      EXPECT_EQ(a.rows[k].t, b.rows[k].t);
      EXPECT_EQ(a.rows[k].loss, b.rows[k].loss);
      EXPECT_EQ(a.rows[k].grad_l1, b.rows[k].grad_l1);
      EXPECT_EQ(a.rows[k].grad_l2, b.rows[k].grad_l2);
      EXPECT_EQ(a.rows[k].grad_dual, b.rows[k].grad_dual);
      EXPECT_EQ(a.rows[k].step_chnorm, b.rows[k].step_chnorm);
      EXPECT_EQ(*a.rows[k].xbar_loss, *b.rows[k].xbar_loss);
    }
  }
}

TEST(Traces, ReplayIsByteIdentical) {
  const std::string d1 = fresh_dir("replay1");
  const std::string d2 = fresh_dir("replay2");
  ExperimentConfig c = small_quadratic_config();
  c.problem["noise"] = {{"kind", "gaussian_iso"}, {"variance", 0.25}};
  const RunResult r1 = run_experiment(c, d1);
  const RunResult r2 = run_experiment(c, d2);
  ASSERT_EQ(r1.exit_code, 0);
  ASSERT_EQ(r2.exit_code, 0);
  ASSERT_EQ(r1.trace_paths.size(), r2.trace_paths.size());
  for (std::size_t i = 0; i < r1.trace_paths.size(); ++i) {
    EXPECT_EQ(slurp(r1.trace_paths[i]), slurp(r2.trace_paths[i]))
        << r1.trace_paths[i];
  }
}

TEST(Traces, ParallelSeedsMatchSequential) {
  const std::string d1 = fresh_dir("jobs1");
  const std::string d4 = fresh_dir("jobs4");
  ExperimentConfig c = small_quadratic_config();
  c.seeds = {11, 5, 2, 8, 13, 1};
  c.problem["noise"] = {{"kind", "gaussian_iso"}, {"variance", 0.5}};
  const RunResult r1 = run_experiment(c, d1, 1);
  const RunResult r4 = run_experiment(c, d4, 4);
  ASSERT_EQ(r1.exit_code, 0);
  ASSERT_EQ(r4.exit_code, 0);
  ASSERT_EQ(r1.trace_paths.size(), r4.trace_paths.size());
  for (std::size_t i = 0; i < r1.trace_paths.size(); ++i) {
    EXPECT_EQ(slurp(r1.trace_paths[i]), slurp(r4.trace_paths[i]));
  }
}

TEST(Traces, MalformedFilesAreRejected) {
  {
    std::istringstream in("not,a,real,header\n");
    EXPECT_THROW(parse_trace_csv(in), InvalidInput);
  }
  {
    std::istringstream in("t,loss,grad_l1,grad_l2,grad_dual,step_chnorm\n1,2,3\n");
    EXPECT_THROW(parse_trace_csv(in), InvalidInput);
  }
  {
    std::istringstream in("");
    EXPECT_THROW(parse_trace_csv(in), InvalidInput);
  }
}

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

TEST(ExitCodes, UnsupportedCombinationIsTwo) {
  const std::string dir = fresh_dir("exit2");
  ExperimentConfig c;
  c.name = "projkron";
  c.problem = {{"kind", "quadratic"},
               {"hessian", {{"type", "diagonal"}, {"values", {1.0, 1.0, 1.0, 1.0}}}}};
  c.set_kind = "kron_left";
  c.dl = 2;
  c.dr = 2;
  c.algorithm = "accelerated_projected";
  c.radius = 1.0;
  c.horizon = 4;
  c.x0 = std::vector<double>{0.1, 0.2, 0.3, 0.4};
  const RunResult r = run_experiment(c, dir);
  EXPECT_EQ(r.exit_code, 2);
  const json reason = json::parse(r.reason);
  EXPECT_EQ(reason.at("error"), "unsupported");
}

TEST(ExitCodes, ConfigErrorIsTwo) {
  const std::string dir = fresh_dir("exit2b");
  ExperimentConfig c = small_quadratic_config();
  c.set_kind = "kron_left";
  c.dl = 2;
  c.dr = 2;  // 4 != problem dim 3
  const RunResult r = run_experiment(c, dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(json::parse(r.reason).at("error"), "invalid_config");

  ExperimentConfig m = small_quadratic_config();
  m.algorithm = "accelerated_projected";  // no radius supplied
  const RunResult r2 = run_experiment(m, fresh_dir("exit2c"));
  EXPECT_EQ(r2.exit_code, 2);
}

TEST(ExitCodes, NumericalFailureIsThreeWithPartialTrace) {
  const std::string dir = fresh_dir("exit3");
  ExperimentConfig c;
  c.name = "blowup";
  c.problem = {{"kind", "quadratic"},
               {"hessian", {{"type", "diagonal"}, {"values", {1e200, 1.0}}}}};
  c.set_kind = "full";
  c.algorithm = "adaptive";
  c.horizon = 5;
  c.seeds = {1};
  c.x0 = std::vector<double>{1.0, 1.0};
  const RunResult r = run_experiment(c, dir);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(json::parse(r.reason).at("error"), "numerical_failure");
  const ParsedTrace tr = parse_trace_file(r.trace_paths.front());
  EXPECT_EQ(tr.rows.size(), 1u);  // aborted before completing step 0
  EXPECT_EQ(r.summary.at("failures").size(), 1u);
  EXPECT_EQ(r.summary.at("exit_code").get<int>(), 3);
}

// ---------------------------------------------------------------------------
// Summaries and slopes
// ---------------------------------------------------------------------------

TEST(Slopes, FitRecoversSyntheticPowerLaws) {
  std::vector<TrajectoryRow> rows;
  for (long t = 0; t <= 200; ++t) {
    TrajectoryRow r;
    r.t = t;
    r.loss = 5.0 * std::pow(static_cast<double>(std::max<long>(t, 1)), -2.0) + 3.0;
    r.grad_l1 = (t % 7 == 0) ? std::pow(static_cast<double>(std::max<long>(t, 1)), -0.5)
                             : 10.0;  // running min recovers the envelope
    rows.push_back(r);
  }
  const std::vector<std::vector<TrajectoryRow>> runs = {rows};
  EXPECT_NEAR(fit_slope(runs, MetricSpec{"loss", false, 3.0}, 8, 200), -2.0, 1e-9);
  EXPECT_NEAR(fit_slope(runs, MetricSpec{"grad_l1", true, 0.0}, 8, 200), -0.5, 0.05);
  EXPECT_THROW(fit_slope(runs, MetricSpec{"loss", false, 1e9}, 8, 200), InvalidInput);
  EXPECT_THROW(fit_slope({}, MetricSpec{}, 0, 10), InvalidInput);
}

TEST(Slopes, SummarySlopesAreRecomputableFromTraceFiles) {
  const std::string dir = fresh_dir("recompute");
  ExperimentConfig c;
  c.name = "accel";
  c.problem = {{"kind", "quadratic"},
               {"hessian", {{"type", "logspace"}, {"dim", 6}, {"cond", 50.0},
                            {"rotate_seed", 3}}},
               {"linear", {0.4, -0.2, 0.1, 0.3, -0.5, 0.2}}};
  c.set_kind = "full";
  c.algorithm = "accelerated";
  c.eta = 1.0;
  c.eps = 1e-8;
  c.horizon = 256;
  c.seeds = {1, 2};
  c.x0 = std::vector<double>(6, 1.0);
  const RunResult r = run_experiment(c, dir);
  ASSERT_EQ(r.exit_code, 0) << r.reason;
  const json slopes = r.summary.at("slopes");
  ASSERT_TRUE(slopes.contains("excess_xbar_loss"));
  ASSERT_TRUE(slopes.contains("loss_offset"));
  const double offset = slopes.at("loss_offset").get<double>();
  const long lo = slopes.at("window").at(0).get<long>();
  const long hi = slopes.at("window").at(1).get<long>();
  EXPECT_EQ(lo, 8);
  EXPECT_EQ(hi, 256);

  std::vector<std::vector<TrajectoryRow>> runs;
  for (const auto& path : r.trace_paths) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
      runs.push_back(parse_trace_file(path).rows);
    }
  }
  ASSERT_EQ(runs.size(), 2u);
  const double recomputed =
      fit_slope(runs, MetricSpec{"xbar_loss", false, offset}, lo, hi);
  EXPECT_EQ(recomputed, slopes.at("excess_xbar_loss").get<double>());
  const double g1 = fit_slope(runs, MetricSpec{"grad_l1", true, 0.0}, lo, hi);
  EXPECT_EQ(g1, slopes.at("min_grad_l1").get<double>());
}

TEST(Slopes, SummaryStatsMatchTrajectoryExtremes) {
  const std::string dir = fresh_dir("stats");
  ExperimentConfig c = small_quadratic_config();
  c.problem["noise"] = {{"kind", "gaussian_iso"}, {"variance", 0.1}};
  const RunResult r = run_experiment(c, dir);
  ASSERT_EQ(r.exit_code, 0);
  std::vector<double> mins;
  for (const auto& path : r.trace_paths) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
      const ParsedTrace tr = parse_trace_file(path);
      double m = std::numeric_limits<double>::infinity();
      for (const auto& row : tr.rows) m = std::min(m, row.grad_l1);
      mins.push_back(m);
    }
  }
  ASSERT_EQ(mins.size(), 3u);
  const json stats = r.summary.at("metric_summaries").at("min_grad_l1");
  EXPECT_EQ(stats.at("min").get<double>(), *std::min_element(mins.begin(), mins.end()));
  EXPECT_EQ(stats.at("max").get<double>(), *std::max_element(mins.begin(), mins.end()));
  const double mean = (mins[0] + mins[1] + mins[2]) / 3.0;
  EXPECT_NEAR(stats.at("mean").get<double>(), mean, 1e-15);
}

TEST(Slopes, WindowCoversLastFiveOctaves) {
  EXPECT_EQ(summary_slope_window(1024).first, 32);
  EXPECT_EQ(summary_slope_window(1024).second, 1024);
  EXPECT_EQ(summary_slope_window(10).first, 1);
}

// ---------------------------------------------------------------------------
// Lower-bound study
// ---------------------------------------------------------------------------

TEST(LowerBound, ReportCarriesAuditAndFloor) {
  const auto tuned = nsd_tuning(1.0, 1.0, 1.0, 32);
  const LowerBoundReport rep =
      lowerbound(16, 32, 1.0, 1.0, 1.0, tuned.eta, tuned.alpha, 20, 1, 1);
  EXPECT_EQ(rep.dim, 16);
  EXPECT_EQ(rep.seeds, 20);
  EXPECT_GT(rep.floor, 0.0);
  EXPECT_GT(rep.empirical_mean, 0.0);
  EXPECT_EQ(rep.ratio, rep.empirical_mean / rep.floor);
  EXPECT_TRUE(rep.audit.at("lattice_exact").get<bool>());
  EXPECT_TRUE(rep.audit.at("lipschitz_ok").get<bool>());
  EXPECT_TRUE(rep.audit.at("noise_variance_ok").get<bool>());
  EXPECT_TRUE(rep.audit.at("unbiased_ok").get<bool>());
  const json j = to_json(rep);
  EXPECT_TRUE(j.contains("stationarity_floor"));
  EXPECT_TRUE(j.contains("calibration"));
  EXPECT_EQ(j.at("constants").at("lattice_size").get<long>(),
            rep.constants.at("lattice_size").get<long>());
}

TEST(LowerBound, FloorFormulaMatchesDirectEvaluation) {
  // min(e^-2 5^-1/4 (d L D s^2)^1/4 T^-1/2, e^-2 5^-1/2 s) evaluated by hand
  // for two parameter points, one on each side of the min.
  const double e2 = std::exp(-2.0);
  {
    const double direct = e2 * std::pow(5.0, -0.25) * std::pow(256.0, 0.25) /
                          std::sqrt(128.0);
    EXPECT_NEAR(stationarity_floor(256, 128, 1.0, 1.0, 1.0), direct, 1e-15);
  }
  {
    // Tiny horizon: the sigma branch is smaller.
    const double direct = e2 * std::pow(5.0, -0.5) * 2.0;
    EXPECT_NEAR(stationarity_floor(4, 1, 1.0, 1.0, 2.0), direct, 1e-15);
  }
}

TEST(LowerBound, DegenerateRequestsAreRejected) {
  EXPECT_THROW(lowerbound(16, 32, 1.0, 1.0, 0.0, 0.1, 0.5, 4), InvalidInput);
  EXPECT_THROW(lowerbound(16, 32, 1.0, 1.0, 1.0, 0.1, 0.5, 0), InvalidInput);
  EXPECT_THROW(lowerbound(16, 32, -1.0, 1.0, 1.0, 0.1, 0.5, 4), InvalidInput);
}

TEST(LowerBound, StartPointIsPinnedToOrigin) {
  // The runner inside lowerbound always starts at zero; a manual run from a
  // different point on the same instance is rejected by the problem itself.
  const HardInstance inst(8, 16, 1.0, 1.0, 1.0, 0.05);
  AlgoConfig algo;
  algo.algorithm = Algorithm::Nsd;
  algo.set = PreconditionerSet::Diagonal(8);
  algo.eta = 0.05;
  algo.alpha = 0.5;
  EXPECT_THROW(run(algo, Problem(inst), Eigen::VectorXd::Ones(8), 16, 1), InvalidInput);
}

// ---------------------------------------------------------------------------
// Validation suites (smoke: the full gate lives in the acceptance binary)
// ---------------------------------------------------------------------------

TEST(ValidateSuites, EverySuitePassesUnderTheDefaultSeed) {
  for (const auto& rep : precopt::validate::run_suites("all")) {
    EXPECT_TRUE(rep.passed()) << precopt::validate::to_json(rep).dump(2);
    EXPECT_GT(rep.total_trials(), 0);
  }
}

TEST(ValidateSuites, UnknownSuiteNameIsRejected) {
  EXPECT_THROW(precopt::validate::run_suite("telemetry"), InvalidInput);
}

TEST(ValidateSuites, ReportSerializationListsProperties) {
  const auto rep = precopt::validate::run_suite("equivalences");
  const auto j = precopt::validate::to_json(rep);
  EXPECT_EQ(j.at("suite"), "equivalences");
  EXPECT_TRUE(j.at("passed").get<bool>());
  EXPECT_EQ(j.at("properties").size(), 4u);
  for (const auto& p : j.at("properties")) {
    EXPECT_TRUE(p.contains("trials"));
    EXPECT_TRUE(p.contains("failures"));
    EXPECT_TRUE(p.contains("worst_residual"));
  }
}

}  // namespace
}  // namespace precopt::bench
