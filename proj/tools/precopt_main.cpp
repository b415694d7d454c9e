// Command-line front end: seeded experiment runs from JSON configs, the
// randomized property suites, the stationarity lower-bound study, and offline
// slope refits of emitted trace files.
//
// Exit codes: 0 success, 1 property failure, 2 configuration error,
// 3 numerical failure. Every flag can also be supplied through an
// environment variable with the PRECOPT_ prefix (e.g. PRECOPT_JOBS).

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <precopt/bench.hpp>
#include <precopt/validate.hpp>

namespace {

using precopt::bench::json;

// "N..M" (inclusive) or a single "N".
std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    return {std::stoull(text)};
  }
  const std::uint64_t lo = std::stoull(text.substr(0, dots));
  const std::uint64_t hi = std::stoull(text.substr(dots + 2));
  if (hi < lo) throw precopt::InvalidInput("seeds: range must satisfy N <= M");
  if (hi - lo > 1000000) throw precopt::InvalidInput("seeds: range too large");
  std::vector<std::uint64_t> out;
  out.reserve(hi - lo + 1);
  for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

void print_error(const char* code, const std::string& what) {
  json j;
  j["error"] = code;
  j["what"] = what;
  std::cerr << j.dump() << "\n";
}

int cmd_run(const std::string& config_path, const std::string& seed_text,
            const std::string& out_flag, const std::string& format_flag, int jobs) {
  precopt::bench::ExperimentConfig cfg = precopt::bench::load_config(config_path);
  if (!seed_text.empty()) cfg.seeds = parse_seed_range(seed_text);
  if (!format_flag.empty()) {
    if (format_flag != "csv" && format_flag != "json") {
      throw precopt::InvalidInput("format must be csv or json");
    }
    cfg.format = format_flag;
  }
  const std::string out_dir = out_flag.empty() ? cfg.out : out_flag;
  const precopt::bench::RunResult res = precopt::bench::run_experiment(cfg, out_dir, jobs);
  if (res.exit_code != 0) {
    std::cerr << res.reason << "\n";
  }
  if (!res.summary.is_null()) std::cout << res.summary.dump(2) << "\n";
  return res.exit_code;
}

int cmd_validate(const std::string& suite, std::uint64_t master_seed) {
  const auto reports = precopt::validate::run_suites(suite, master_seed);
  bool all_pass = true;
  for (const auto& rep : reports) {
    for (const auto& p : rep.properties) {
      std::printf("[%s] %-40s trials=%-6ld failures=%-4ld worst=%.3e tol=%.1e %s\n",
                  rep.suite.c_str(), p.name.c_str(), p.trials, p.failures, p.worst,
                  p.tolerance, p.passed() ? "pass" : "FAIL");
      if (!p.passed() && !p.counterexample.empty()) {
        std::printf("    counterexample: %s\n", p.counterexample.c_str());
      }
    }
    all_pass = all_pass && rep.passed();
  }
  std::printf("validate %s: %s\n", suite.c_str(), all_pass ? "PASS" : "FAIL");
  if (!all_pass) {
    for (const auto& rep : reports) {
      if (!rep.passed()) std::cerr << precopt::validate::to_json(rep).dump() << "\n";
    }
    return 1;
  }
  return 0;
}

int cmd_lowerbound(long dim, long horizon, double delta0, double lsmooth, double sigma,
                   std::optional<double> eta, std::optional<double> alpha, long nseeds,
                   std::uint64_t seed0, int jobs, const std::string& out) {
  double use_eta, use_alpha;
  if (eta && alpha) {
    use_eta = *eta;
    use_alpha = *alpha;
  } else if (!eta && !alpha) {
    const auto tuned = precopt::nsd_tuning(delta0, lsmooth, sigma, horizon);
    use_eta = tuned.eta;
    use_alpha = tuned.alpha;
  } else {
    throw precopt::InvalidInput("lowerbound: give both --eta and --alpha, or neither");
  }
  const auto rep = precopt::bench::lowerbound(dim, horizon, delta0, lsmooth, sigma, use_eta,
                                              use_alpha, nseeds, seed0, jobs);
  const json j = precopt::bench::to_json(rep);
  std::cout << j.dump(2) << "\n";
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    const std::string path = (std::filesystem::path(out) / "lowerbound.json").string();
    std::ofstream f(path);
    if (!f) throw precopt::InvalidInput("lowerbound: cannot write '" + path + "'");
    f << j.dump(2) << "\n";
  }
  const bool audit_ok = rep.audit.at("lattice_exact").get<bool>() &&
                        rep.audit.at("lipschitz_ok").get<bool>() &&
                        rep.audit.at("noise_variance_ok").get<bool>() &&
                        rep.audit.at("unbiased_ok").get<bool>();
  return (rep.meets_half_floor && audit_ok) ? 0 : 1;
}

int cmd_rates(const std::vector<std::string>& files, const std::string& metric, bool cummin,
              double offset, long t_min, long t_max) {
  std::vector<std::vector<precopt::TrajectoryRow>> runs;
  runs.reserve(files.size());
  for (const auto& f : files) {
    runs.push_back(precopt::bench::parse_trace_file(f).rows);
  }
  long hi = t_max;
  if (hi < 0) {
    hi = 0;
    for (const auto& r : runs) {
      if (!r.empty()) hi = std::max(hi, r.back().t);
    }
  }
  const precopt::bench::MetricSpec spec{metric, cummin, offset};
  const double slope = precopt::bench::fit_slope(runs, spec, t_min, hi);
  json j;
  j["metric"] = metric;
  j["running_min"] = cummin;
  j["offset"] = offset;
  j["window"] = json::array({t_min, hi});
  j["files"] = files;
  j["slope"] = slope;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive-preconditioner optimization toolkit"};
  app.require_subcommand(1);

  // --- run ---
  auto* run_cmd = app.add_subcommand("run", "execute a JSON-configured experiment");
  std::string config_path, seed_text, out_flag, format_flag;
  int jobs = 1;
  run_cmd->add_option("--config", config_path, "experiment config JSON path")
      ->envname("PRECOPT_CONFIG")
      ->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed_text, "single seed override")
                       ->envname("PRECOPT_SEED");
  run_cmd->add_option("--seeds", seed_text, "seed range override N..M")
      ->envname("PRECOPT_SEEDS")
      ->excludes(seed_opt);
  run_cmd->add_option("--out", out_flag, "output directory (overrides config)")
      ->envname("PRECOPT_OUT");
  run_cmd->add_option("--format", format_flag, "trace format: csv|json")
      ->envname("PRECOPT_FORMAT");
  run_cmd->add_option("--jobs", jobs, "parallel seed workers")->envname("PRECOPT_JOBS");

  // --- validate ---
  auto* val_cmd = app.add_subcommand("validate", "run a randomized property suite");
  std::string suite = "all";
  std::uint64_t master_seed = precopt::validate::kDefaultMasterSeed;
  val_cmd
      ->add_option("suite", suite,
                   "projections|norms|inequalities|equivalences|hard-instance|all")
      ->envname("PRECOPT_SUITE");
  val_cmd->add_option("--master-seed", master_seed, "master seed for instance generation")
      ->envname("PRECOPT_MASTER_SEED");

  // --- lowerbound ---
  auto* lb_cmd = app.add_subcommand("lowerbound", "stationarity lower-bound study");
  long lb_dim = 256, lb_horizon = 128, lb_nseeds = 200;
  double lb_delta0 = 1.0, lb_lsmooth = 1.0, lb_sigma = 1.0;
  std::optional<double> lb_eta, lb_alpha;
  std::uint64_t lb_seed0 = 1;
  std::string lb_out;
  int lb_jobs = 1;
  lb_cmd->add_option("--dim", lb_dim, "dimension")->envname("PRECOPT_DIM");
  lb_cmd->add_option("--horizon", lb_horizon, "step budget")->envname("PRECOPT_HORIZON");
  lb_cmd->add_option("--delta0", lb_delta0, "initial objective gap")
      ->envname("PRECOPT_DELTA0");
  lb_cmd->add_option("--lsmooth", lb_lsmooth, "smoothness constant")
      ->envname("PRECOPT_LSMOOTH");
  lb_cmd->add_option("--sigma", lb_sigma, "noise level")->envname("PRECOPT_SIGMA");
  lb_cmd->add_option("--eta", lb_eta, "step size (default: tuned)")->envname("PRECOPT_ETA");
  lb_cmd->add_option("--alpha", lb_alpha, "momentum weight (default: tuned)")
      ->envname("PRECOPT_ALPHA");
  lb_cmd->add_option("--nseeds", lb_nseeds, "number of seeds")->envname("PRECOPT_NSEEDS");
  lb_cmd->add_option("--seed0", lb_seed0, "first seed")->envname("PRECOPT_SEED0");
  lb_cmd->add_option("--out", lb_out, "directory for the report JSON")
      ->envname("PRECOPT_OUT");
  lb_cmd->add_option("--jobs", lb_jobs, "parallel seed workers")->envname("PRECOPT_JOBS");

  // --- rates ---
  auto* rates_cmd = app.add_subcommand("rates", "refit log-log slopes from trace files");
  std::vector<std::string> rate_files;
  std::string metric = "loss";
  bool cummin = false;
  double offset = 0.0;
  long t_min = 1, t_max = -1;
  rates_cmd->add_option("files", rate_files, "trace files (csv or json)")->required();
  rates_cmd
      ->add_option("--metric", metric,
                   "loss|grad_l1|grad_l2|grad_dual|step_chnorm|xbar_loss")
      ->envname("PRECOPT_METRIC");
  rates_cmd->add_flag("--cummin", cummin, "fit the running minimum of the metric")
      ->envname("PRECOPT_CUMMIN");
  rates_cmd->add_option("--offset", offset, "constant subtracted before the log")
      ->envname("PRECOPT_OFFSET");
  rates_cmd->add_option("--t-min", t_min, "window lower edge")->envname("PRECOPT_TMIN");
  rates_cmd->add_option("--t-max", t_max, "window upper edge (default: last step)")
      ->envname("PRECOPT_TMAX");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // flag/usage problems are configuration errors
  }

  try {
    if (*run_cmd) return cmd_run(config_path, seed_text, out_flag, format_flag, jobs);
    if (*val_cmd) return cmd_validate(suite, master_seed);
    if (*lb_cmd) {
      return cmd_lowerbound(lb_dim, lb_horizon, lb_delta0, lb_lsmooth, lb_sigma, lb_eta,
                            lb_alpha, lb_nseeds, lb_seed0, lb_jobs, lb_out);
    }
    if (*rates_cmd) return cmd_rates(rate_files, metric, cummin, offset, t_min, t_max);
  } catch (const precopt::Unsupported& e) {
    print_error("unsupported", e.what());
    return 2;
  } catch (const precopt::ConstructionInfeasible& e) {
    print_error("construction_infeasible", e.what());
    return 2;
  } catch (const precopt::InvalidInput& e) {
    print_error("invalid_config", e.what());
    return 2;
  } catch (const precopt::NumericalError& e) {
    print_error("numerical_failure", e.what());
    return 3;
  } catch (const precopt::Error& e) {
    print_error("numerical_failure", e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error("invalid_config", e.what());
    return 2;
  }
  return 0;
}
