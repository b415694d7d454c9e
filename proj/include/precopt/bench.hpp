#pragma once

// JSON-configured experiment plumbing: problem construction from a versioned
// config schema, per-seed trajectory runs with CSV/JSON trace emission,
// summary records with fitted log-log slopes, and the stationarity
// lower-bound study. All float formatting uses 17 significant digits so every
// emitted file round-trips bit-exactly.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "precopt/analysis.hpp"
#include "precopt/errors.hpp"
#include "precopt/optimizers.hpp"
#include "precopt/precond.hpp"
#include "precopt/problems.hpp"
#include "precopt/rng.hpp"

namespace precopt::bench {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Formatting helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline Eigen::MatrixXd random_orthogonal(SeqRng& rng, int d) {
  const Eigen::MatrixXd g = rng.normal_matrix(d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::VectorXd diag = qr.matrixQR().diagonal();
  for (int i = 0; i < d; ++i) {
    if (diag[i] < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

inline Eigen::VectorXd vector_from_json(const json& j, const char* who) {
  if (!j.is_array()) throw InvalidInput(std::string(who) + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) v[i++] = e.get<double>();
  return v;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string name = "run";
  json problem = json::object();  // see problem_from_json for the sub-schema
  std::string set_kind = "full";  // scalar | diagonal | full | kron_left
  int dl = 0, dr = 0;             // kron_left factor shapes
  std::string algorithm = "adaptive";  // adaptive | nsd | accelerated |
                                       // accelerated_projected
  std::string mode = "cumulative";     // cumulative | ema | weighted
  double beta = 1.0;                   // ema / weighted decay
  double eta = 0.1;
  double eps = 0.0;
  double alpha = 1.0;  // nsd momentum weight
  std::optional<double> accel_alpha;
  std::optional<double> radius;
  long horizon = 100;
  std::vector<std::uint64_t> seeds = {1};
  std::optional<std::vector<double>> x0;
  std::string out = "out";     // directory for traces and the summary
  std::string format = "csv";  // csv | json
};

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  j["problem"] = c.problem;
  json set;
  set["kind"] = c.set_kind;
  if (c.set_kind == "kron_left") {
    set["dl"] = c.dl;
    set["dr"] = c.dr;
  }
  j["set"] = set;
  j["algorithm"] = c.algorithm;
  json mode;
  mode["kind"] = c.mode;
  if (c.mode != "cumulative") mode["beta"] = c.beta;
  j["mode"] = mode;
  j["eta"] = c.eta;
  j["eps"] = c.eps;
  j["alpha"] = c.alpha;
  if (c.accel_alpha) j["accel_alpha"] = *c.accel_alpha;
  if (c.radius) j["radius"] = *c.radius;
  j["horizon"] = c.horizon;
  j["seeds"] = c.seeds;
  if (c.x0) j["x0"] = *c.x0;
  j["out"] = c.out;
  j["format"] = c.format;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("config: expected a JSON object");
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion) {
    throw InvalidInput("config: missing or unsupported schema_version (want 1)");
  }
  ExperimentConfig c;
  c.name = j.value("name", std::string("run"));
  if (!j.contains("problem")) throw InvalidInput("config: missing problem");
  c.problem = j.at("problem");
  if (j.contains("set")) {
    const json& s = j.at("set");
    c.set_kind = s.at("kind").get<std::string>();
    c.dl = s.value("dl", 0);
    c.dr = s.value("dr", 0);
  }
  c.algorithm = j.value("algorithm", std::string("adaptive"));
  if (j.contains("mode")) {
    const json& m = j.at("mode");
    c.mode = m.at("kind").get<std::string>();
    c.beta = m.value("beta", 1.0);
  }
  c.eta = j.value("eta", 0.1);
  c.eps = j.value("eps", 0.0);
  c.alpha = j.value("alpha", 1.0);
  if (j.contains("accel_alpha")) c.accel_alpha = j.at("accel_alpha").get<double>();
  if (j.contains("radius")) c.radius = j.at("radius").get<double>();
  c.horizon = j.value("horizon", 100L);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (c.seeds.empty()) throw InvalidInput("config: seeds must be nonempty");
  if (j.contains("x0")) c.x0 = j.at("x0").get<std::vector<double>>();
  c.out = j.value("out", std::string("out"));
  c.format = j.value("format", std::string("csv"));
  if (c.format != "csv" && c.format != "json") {
    throw InvalidInput("config: format must be csv or json");
  }
  return c;
}

// Stable content identifier: FNV-1a over the canonical serialized form.
inline std::string config_hash(const ExperimentConfig& c) {
  return detail::hex64(detail::fnv1a64(to_json(c).dump()));
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw InvalidInput(std::string("config: JSON parse error: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

inline NoiseModel noise_from_json(const json& j) {
  if (j.is_null()) return NoiseModel::none();
  if (!j.is_object() || !j.contains("kind")) {
    throw InvalidInput("noise: expected an object with a kind");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") return NoiseModel::none();
  if (kind == "gaussian_iso") return NoiseModel::gaussian_iso(j.at("variance").get<double>());
  if (kind == "gaussian_cov") {
    const json& rows = j.at("rows");
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      if (static_cast<int>(rows.at(i).size()) != d) {
        throw InvalidInput("noise: covariance rows must be square");
      }
      for (int k = 0; k < d; ++k) m(i, k) = rows.at(i).at(k).get<double>();
    }
    return NoiseModel::gaussian_cov(SymMatrix(m));
  }
  if (kind == "bernoulli_spike") {
    return NoiseModel::bernoulli_spike(j.at("c").get<double>(),
                                       j.at("theta").get<double>(),
                                       detail::vector_from_json(j.at("drift"), "noise drift"));
  }
  throw InvalidInput("noise: unknown kind '" + kind + "'");
}

inline SymMatrix hessian_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) {
    throw InvalidInput("hessian: expected an object with a type");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "diagonal") {
    return SymMatrix::Diag(detail::vector_from_json(j.at("values"), "hessian values"));
  }
  if (type == "dense") {
    const json& rows = j.at("rows");
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      if (static_cast<int>(rows.at(i).size()) != d) {
        throw InvalidInput("hessian: rows must form a square matrix");
      }
      for (int k = 0; k < d; ++k) m(i, k) = rows.at(i).at(k).get<double>();
    }
    return SymMatrix(m);
  }
  if (type == "logspace") {
    const int d = j.at("dim").get<int>();
    const double cond = j.at("cond").get<double>();
    const double scale = j.value("scale", 1.0);
    if (d < 1 || !(cond >= 1.0) || !(scale > 0.0)) {
      throw InvalidInput("hessian: logspace needs dim >= 1, cond >= 1, scale > 0");
    }
    Eigen::VectorXd lam(d);
    for (int i = 0; i < d; ++i) {
      const double frac = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
      lam[i] = scale * std::pow(cond, -frac);  // spans [scale/cond, scale]
    }
    if (!j.contains("rotate_seed")) return SymMatrix::Diag(lam);
    SeqRng rng(j.at("rotate_seed").get<std::uint64_t>(), RngStream::kProblemSetup);
    const Eigen::MatrixXd q = detail::random_orthogonal(rng, d);
    return SymMatrix(Eigen::MatrixXd(q * lam.asDiagonal() * q.transpose()));
  }
  throw InvalidInput("hessian: unknown type '" + type + "'");
}

inline Problem problem_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw InvalidInput("problem: expected an object with a kind");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") {
    const SymMatrix a = hessian_from_json(j.at("hessian"));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(a.dim());
    if (j.contains("linear")) {
      b = detail::vector_from_json(j.at("linear"), "problem linear term");
    }
    return QuadraticProblem(a, b, noise_from_json(j.value("noise", json())));
  }
  if (kind == "washboard") {
    const Eigen::Index d = j.at("dim").get<Eigen::Index>();
    const double amplitude = j.at("amplitude").get<double>();
    const NoiseModel noise = noise_from_json(j.value("noise", json()));
    if (j.contains("offsets")) {
      return WashboardProblem(d, amplitude,
                              detail::vector_from_json(j.at("offsets"), "problem offsets"),
                              noise);
    }
    return WashboardProblem::golden(d, amplitude, noise);
  }
  if (kind == "hard") {
    return HardInstance(j.at("dim").get<Eigen::Index>(), j.at("horizon").get<long>(),
                        j.at("delta0").get<double>(), j.at("lsmooth").get<double>(),
                        j.at("sigma").get<double>(), j.at("eta").get<double>());
  }
  throw InvalidInput("problem: unknown kind '" + kind + "'");
}

inline PreconditionerSet set_from_config(const ExperimentConfig& c, int dim) {
  if (c.set_kind == "scalar") return PreconditionerSet::Scalar(dim);
  if (c.set_kind == "diagonal") return PreconditionerSet::Diagonal(dim);
  if (c.set_kind == "full") return PreconditionerSet::Full(dim);
  if (c.set_kind == "kron_left") {
    if (c.dl * c.dr != dim) {
      throw InvalidInput("config: kron_left factors must multiply to the problem dimension");
    }
    return PreconditionerSet::KronLeft(c.dl, c.dr);
  }
  throw InvalidInput("config: unknown set kind '" + c.set_kind + "'");
}

inline AlgoConfig algo_from_config(const ExperimentConfig& c, int dim) {
  AlgoConfig a;
  if (c.algorithm == "adaptive") {
    a.algorithm = Algorithm::Adaptive;
  } else if (c.algorithm == "nsd") {
    a.algorithm = Algorithm::Nsd;
  } else if (c.algorithm == "accelerated") {
    a.algorithm = Algorithm::Accelerated;
  } else if (c.algorithm == "accelerated_projected") {
    a.algorithm = Algorithm::AcceleratedProjected;
  } else {
    throw InvalidInput("config: unknown algorithm '" + c.algorithm + "'");
  }
  a.set = set_from_config(c, dim);
  if (c.mode == "cumulative") {
    a.mode = AccumulationMode::cumulative();
  } else if (c.mode == "ema") {
    a.mode = AccumulationMode::ema(c.beta);
  } else if (c.mode == "weighted") {
    a.mode = AccumulationMode::weighted(c.beta);
  } else {
    throw InvalidInput("config: unknown accumulation mode '" + c.mode + "'");
  }
  a.eta = c.eta;
  a.eps = c.eps;
  a.alpha = c.alpha;
  a.accel_alpha = c.accel_alpha;
  a.radius = c.radius;
  return a;
}

inline Eigen::VectorXd start_point(const ExperimentConfig& c, const Problem& p) {
  if (c.x0) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(c.x0->size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = (*c.x0)[static_cast<std::size_t>(i)];
    }
    return x;
  }
  return Eigen::VectorXd::Zero(problem_dim(p));
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

struct ParsedTrace {
  std::vector<TrajectoryRow> rows;
  bool has_xbar = false;
};

inline std::string trace_header(bool xbar) {
  std::string h = "t,loss,grad_l1,grad_l2,grad_dual,step_chnorm";
  if (xbar) h += ",xbar_loss";
  return h;
}

inline void write_trace_csv(std::ostream& out, const Trajectory& tr, bool xbar) {
  out << trace_header(xbar) << "\n";
  for (const auto& r : tr.rows) {
    out << r.t << ',' << detail::format_double(r.loss) << ','
        << detail::format_double(r.grad_l1) << ',' << detail::format_double(r.grad_l2) << ','
        << detail::format_double(r.grad_dual) << ',' << detail::format_double(r.step_chnorm);
    if (xbar) out << ',' << detail::format_double(r.xbar_loss ? *r.xbar_loss : 0.0);
    out << "\n";
  }
}

inline json trace_to_json(const Trajectory& tr, bool xbar, const std::string& hash,
                          std::uint64_t seed) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = hash;
  j["seed"] = seed;
  j["failed"] = tr.failed;
  if (tr.failed) {
    j["error"] = tr.error;
    j["failed_at"] = tr.failed_at;
  }
  json cols = json::array();
  {
    std::stringstream ss(trace_header(xbar));
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
  }
  j["columns"] = cols;
  json rows = json::array();
  for (const auto& r : tr.rows) {
    json row = json::array();
    row.push_back(r.t);
    row.push_back(r.loss);
    row.push_back(r.grad_l1);
    row.push_back(r.grad_l2);
    row.push_back(r.grad_dual);
    row.push_back(r.step_chnorm);
    if (xbar) row.push_back(r.xbar_loss ? *r.xbar_loss : 0.0);
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

inline ParsedTrace parse_trace_csv(std::istream& in) {
  ParsedTrace out;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("trace: empty file");
  if (line == trace_header(true)) {
    out.has_xbar = true;
  } else if (line != trace_header(false)) {
    throw InvalidInput("trace: unrecognized header '" + line + "'");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    const std::size_t want = out.has_xbar ? 7 : 6;
    if (fields.size() != want) throw InvalidInput("trace: malformed row '" + line + "'");
    TrajectoryRow r;
    r.t = std::stol(fields[0]);
    r.loss = std::strtod(fields[1].c_str(), nullptr);
    r.grad_l1 = std::strtod(fields[2].c_str(), nullptr);
    r.grad_l2 = std::strtod(fields[3].c_str(), nullptr);
    r.grad_dual = std::strtod(fields[4].c_str(), nullptr);
    r.step_chnorm = std::strtod(fields[5].c_str(), nullptr);
    if (out.has_xbar) r.xbar_loss = std::strtod(fields[6].c_str(), nullptr);
    out.rows.push_back(r);
  }
  return out;
}

inline ParsedTrace parse_trace_json(const json& j) {
  ParsedTrace out;
  const auto& cols = j.at("columns");
  out.has_xbar = !cols.empty() && cols.back().get<std::string>() == "xbar_loss";
  for (const auto& row : j.at("rows")) {
    TrajectoryRow r;
    r.t = row.at(0).get<long>();
    r.loss = row.at(1).get<double>();
    r.grad_l1 = row.at(2).get<double>();
    r.grad_l2 = row.at(3).get<double>();
    r.grad_dual = row.at(4).get<double>();
    r.step_chnorm = row.at(5).get<double>();
    if (out.has_xbar) r.xbar_loss = row.at(6).get<double>();
    out.rows.push_back(r);
  }
  return out;
}

inline ParsedTrace parse_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("trace: cannot open '" + path + "'");
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    json j;
    in >> j;
    return parse_trace_json(j);
  }
  return parse_trace_csv(in);
}

// ---------------------------------------------------------------------------
// Slope fitting over trace collections
// ---------------------------------------------------------------------------

// Declarative metric: a trace column, an optional running-minimum transform,
// and an optional constant offset subtracted before taking logs.
struct MetricSpec {
  std::string column = "loss";  // loss | grad_l1 | grad_l2 | grad_dual |
                                // step_chnorm | xbar_loss
  bool running_min = false;
  double offset = 0.0;
};

namespace detail {

inline double row_value(const TrajectoryRow& r, const std::string& column) {
  if (column == "loss") return r.loss;
  if (column == "grad_l1") return r.grad_l1;
  if (column == "grad_l2") return r.grad_l2;
  if (column == "grad_dual") return r.grad_dual;
  if (column == "step_chnorm") return r.step_chnorm;
  if (column == "xbar_loss") {
    if (!r.xbar_loss) throw InvalidInput("metric: trace has no xbar_loss column");
    return *r.xbar_loss;
  }
  throw InvalidInput("metric: unknown column '" + column + "'");
}

}  // namespace detail

// Mean of the metric across runs at each step, restricted to [t_lo, t_hi],
// then a log-log slope fit. Rows with nonpositive transformed values are
// dropped; at least eight surviving points are required.
inline double fit_slope(const std::vector<std::vector<TrajectoryRow>>& runs,
                        const MetricSpec& spec, long t_lo, long t_hi) {
  if (runs.empty()) throw InvalidInput("fit_slope: no runs");
  std::size_t len = runs.front().size();
  for (const auto& r : runs) len = std::min(len, r.size());

  std::vector<std::vector<double>> series(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto& s = series[r];
    s.resize(len);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) {
      double v = detail::row_value(runs[r][i], spec.column);
      if (spec.running_min) v = best = std::min(best, v);
      s[i] = v - spec.offset;
    }
  }

  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < len; ++i) {
    const long t = runs.front()[i].t;
    if (t < t_lo || t > t_hi) continue;
    double acc = 0.0;
    for (const auto& s : series) acc += s[i];
    const double mean = acc / static_cast<double>(runs.size());
    if (mean > 0.0 && t > 0) {
      ts.push_back(static_cast<double>(t));
      ys.push_back(mean);
    }
  }
  return rate_fit(ts, ys);
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 config/unsupported, 3 numerical failure
  std::string reason;  // machine-readable JSON when exit_code != 0
  json summary;
  std::vector<std::string> trace_paths;
};

namespace detail {

inline json stats_over(const std::vector<double>& xs) {
  json j;
  double mn = std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> copy = xs;
  for (double v : xs) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  j["mean"] = pairwise_sum(copy) / static_cast<double>(xs.size());
  j["min"] = mn;
  j["max"] = mx;
  return j;
}

inline std::string error_reason(const char* code, const std::string& what) {
  json j;
  j["error"] = code;
  j["what"] = what;
  return j.dump();
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions inside
// workers are captured and rethrown on the calling thread.
template <typename Fn>
inline void parallel_for(long n, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

// Slope window used for summaries: the last five octaves of the horizon.
inline std::pair<long, long> summary_slope_window(long horizon) {
  return {std::max<long>(1, horizon / 32), horizon};
}

inline RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                int jobs = 1) {
  RunResult res;
  const std::string hash = config_hash(cfg);

  std::optional<Problem> problem;
  std::optional<AlgoConfig> algo;
  Eigen::VectorXd x0;
  try {
    problem.emplace(problem_from_json(cfg.problem));
    algo.emplace(algo_from_config(cfg, static_cast<int>(problem_dim(*problem))));
    x0 = start_point(cfg, *problem);
    if (cfg.horizon < 0) throw InvalidInput("config: horizon must be >= 0");
  } catch (const Unsupported& e) {
    res.exit_code = 2;
    res.reason = detail::error_reason("unsupported", e.what());
    return res;
  } catch (const Error& e) {
    res.exit_code = 2;
    res.reason = detail::error_reason("invalid_config", e.what());
    return res;
  }

  const bool accelerated = algo->algorithm == Algorithm::Accelerated ||
                           algo->algorithm == Algorithm::AcceleratedProjected;
  const long n = static_cast<long>(cfg.seeds.size());
  std::vector<Trajectory> trajectories(static_cast<std::size_t>(n));
  try {
    detail::parallel_for(n, jobs, [&](long i) {
      trajectories[static_cast<std::size_t>(i)] =
          run(*algo, *problem, x0, cfg.horizon, cfg.seeds[static_cast<std::size_t>(i)]);
    });
  } catch (const Unsupported& e) {
    res.exit_code = 2;
    res.reason = detail::error_reason("unsupported", e.what());
    return res;
  } catch (const Error& e) {
    res.exit_code = 2;
    res.reason = detail::error_reason("invalid_config", e.what());
    return res;
  }

  std::filesystem::create_directories(out_dir);
  json failures = json::array();
  for (long i = 0; i < n; ++i) {
    const auto& tr = trajectories[static_cast<std::size_t>(i)];
    const std::uint64_t seed = cfg.seeds[static_cast<std::size_t>(i)];
    const std::string ext = cfg.format == "json" ? ".json" : ".csv";
    const std::string path =
        (std::filesystem::path(out_dir) /
         (cfg.name + "_seed" + std::to_string(seed) + ext))
            .string();
    std::ofstream out(path);
    if (!out) throw InvalidInput("run: cannot write '" + path + "'");
    if (cfg.format == "json") {
      out << trace_to_json(tr, accelerated, hash, seed).dump(2) << "\n";
    } else {
      write_trace_csv(out, tr, accelerated);
    }
    res.trace_paths.push_back(path);
    if (tr.failed) {
      json f;
      f["seed"] = seed;
      f["error"] = tr.error;
      f["failed_at"] = tr.failed_at;
      failures.push_back(f);
    }
  }

  // Summary: per-seed scalar metrics plus slope fits over the seed-mean curve.
  json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["config_hash"] = hash;
  summary["name"] = cfg.name;
  summary["algorithm"] = cfg.algorithm;
  summary["set"] = cfg.set_kind;
  summary["horizon"] = cfg.horizon;
  summary["seeds"] = cfg.seeds;
  summary["failures"] = failures;

  std::vector<double> final_loss, min_l1, min_dual, final_xbar;
  for (const auto& tr : trajectories) {
    if (tr.rows.empty()) continue;
    final_loss.push_back(tr.rows.back().loss);
    min_l1.push_back(tr.min_grad_l1());
    min_dual.push_back(tr.min_grad_dual());
    if (accelerated && tr.rows.back().xbar_loss) {
      final_xbar.push_back(*tr.rows.back().xbar_loss);
    }
  }
  json metrics;
  if (!final_loss.empty()) metrics["final_loss"] = detail::stats_over(final_loss);
  if (!min_l1.empty()) metrics["min_grad_l1"] = detail::stats_over(min_l1);
  if (!min_dual.empty()) metrics["min_grad_dual"] = detail::stats_over(min_dual);
  if (!final_xbar.empty()) metrics["final_xbar_loss"] = detail::stats_over(final_xbar);
  summary["metric_summaries"] = metrics;

  const auto [t_lo, t_hi] = summary_slope_window(cfg.horizon);
  json slopes;
  slopes["window"] = json::array({t_lo, t_hi});
  const bool clean = failures.empty();
  double offset = 0.0;
  bool have_offset = false;
  if (const auto* q = std::get_if<QuadraticProblem>(&*problem)) {
    if (q->stationary_consistent()) {
      offset = q->f_star();
      have_offset = true;
      slopes["loss_offset"] = offset;
    }
  }
  if (clean) {
    std::vector<std::vector<TrajectoryRow>> rows;
    rows.reserve(trajectories.size());
    for (const auto& tr : trajectories) rows.push_back(tr.rows);
    const auto try_fit = [&](const char* key, const MetricSpec& spec) {
      try {
        slopes[key] = fit_slope(rows, spec, t_lo, t_hi);
      } catch (const Error&) {
        // Not enough positive points in the window; omit the entry.
      }
    };
    if (have_offset) {
      try_fit("excess_loss", MetricSpec{"loss", false, offset});
      if (accelerated) try_fit("excess_xbar_loss", MetricSpec{"xbar_loss", false, offset});
    }
    try_fit("min_grad_l1", MetricSpec{"grad_l1", true, 0.0});
    try_fit("grad_dual", MetricSpec{"grad_dual", false, 0.0});
  }
  summary["slopes"] = slopes;

  if (const auto* h = std::get_if<HardInstance>(&*problem)) {
    json floors;
    const double dlds = static_cast<double>(h->dim()) * h->lsmooth() * h->delta0() *
                        h->sigma() * h->sigma();
    const double floor = std::min(
        std::exp(-2.0) * std::pow(5.0, -0.25) * std::pow(dlds, 0.25) /
            std::sqrt(static_cast<double>(h->horizon())),
        std::exp(-2.0) * std::pow(5.0, -0.5) * h->sigma());
    floors["stationarity_floor"] = floor;
    floors["calibration"] =
        "pass threshold mean >= 0.5 * stationarity_floor is a Monte-Carlo "
        "calibration of this artifact, not a stated confidence bound";
    summary["floors"] = floors;
  }

  if (!failures.empty()) {
    res.exit_code = 3;
    res.reason = detail::error_reason("numerical_failure", failures.dump());
  }
  summary["exit_code"] = res.exit_code;
  res.summary = summary;

  const std::string spath =
      (std::filesystem::path(out_dir) / (cfg.name + "_summary.json")).string();
  std::ofstream sout(spath);
  if (!sout) throw InvalidInput("run: cannot write '" + spath + "'");
  sout << summary.dump(2) << "\n";
  res.trace_paths.push_back(spath);
  return res;
}

// ---------------------------------------------------------------------------
// Lower-bound study
// ---------------------------------------------------------------------------

struct LowerBoundReport {
  long dim = 0;
  long horizon = 0;
  double delta0 = 0.0, lsmooth = 0.0, sigma = 0.0, eta = 0.0, alpha = 0.0;
  long seeds = 0;
  double empirical_mean = 0.0;  // mean over seeds of min_t l1-norm of grad f
  double floor = 0.0;
  double ratio = 0.0;
  bool meets_half_floor = false;
  json audit;
  json constants;
};

inline json to_json(const LowerBoundReport& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["dim"] = r.dim;
  j["horizon"] = r.horizon;
  j["delta0"] = r.delta0;
  j["lsmooth"] = r.lsmooth;
  j["sigma"] = r.sigma;
  j["eta"] = r.eta;
  j["alpha"] = r.alpha;
  j["seeds"] = r.seeds;
  j["empirical_mean_min_grad_l1"] = r.empirical_mean;
  j["stationarity_floor"] = r.floor;
  j["ratio"] = r.ratio;
  j["meets_half_floor"] = r.meets_half_floor;
  j["calibration"] =
      "pass threshold mean >= 0.5 * stationarity_floor is a Monte-Carlo "
      "calibration of this artifact, not a stated confidence bound";
  j["constants"] = r.constants;
  j["audit"] = r.audit;
  return j;
}

inline double stationarity_floor(long d, long horizon, double delta0, double lsmooth,
                                 double sigma) {
  const double dlds =
      static_cast<double>(d) * lsmooth * delta0 * sigma * sigma;
  return std::min(std::exp(-2.0) * std::pow(5.0, -0.25) * std::pow(dlds, 0.25) /
                      std::sqrt(static_cast<double>(horizon)),
                  std::exp(-2.0) * std::pow(5.0, -0.5) * sigma);
}

inline LowerBoundReport lowerbound(long d, long horizon, double delta0, double lsmooth,
                                   double sigma, double eta, double alpha, long nseeds,
                                   std::uint64_t seed0 = 1, int jobs = 1) {
  if (nseeds < 1) throw InvalidInput("lowerbound: need at least one seed");
  const HardInstance inst(d, horizon, delta0, lsmooth, sigma, eta);
  const Problem problem = inst;

  AlgoConfig algo;
  algo.algorithm = Algorithm::Nsd;
  algo.set = PreconditionerSet::Diagonal(static_cast<int>(d));
  algo.eta = eta;
  algo.alpha = alpha;

  std::vector<double> mins(static_cast<std::size_t>(nseeds));
  detail::parallel_for(nseeds, jobs, [&](long i) {
    const Trajectory tr = run(algo, problem, inst.initial_point(), horizon,
                              seed0 + static_cast<std::uint64_t>(i));
    if (tr.failed) {
      throw NumericalError("lowerbound: run failed at seed " +
                           std::to_string(seed0 + static_cast<std::uint64_t>(i)) + ": " +
                           tr.error);
    }
    mins[static_cast<std::size_t>(i)] = tr.min_grad_l1();
  });

  LowerBoundReport rep;
  rep.dim = d;
  rep.horizon = horizon;
  rep.delta0 = delta0;
  rep.lsmooth = lsmooth;
  rep.sigma = sigma;
  rep.eta = eta;
  rep.alpha = alpha;
  rep.seeds = nseeds;
  rep.empirical_mean = pairwise_sum(mins) / static_cast<double>(nseeds);
  rep.floor = stationarity_floor(d, horizon, delta0, lsmooth, sigma);
  rep.ratio = rep.empirical_mean / rep.floor;
  rep.meets_half_floor = rep.empirical_mean >= 0.5 * rep.floor;

  json consts;
  consts["eps"] = inst.eps();
  consts["spike_magnitude"] = inst.spike_magnitude();
  consts["spike_probability"] = inst.spike_probability();
  consts["lattice_size"] = inst.lattice_size();
  consts["eta_unit"] = inst.eta_unit();
  consts["sigma_unit"] = inst.sigma_unit();
  rep.constants = consts;

  // Construction audit: exact lattice values, Lipschitz sampling, noise
  // moments against their budgets.
  json audit;
  {
    const auto& pp = inst.p_prime();
    const long npts = std::min<long>(inst.lattice_size(), 10000);
    long exact = 0;
    for (long k = 0; k < npts; ++k) {
      const double u = static_cast<double>(k) * inst.eta_unit();
      if (pp(u) == -inst.eps()) ++exact;
    }
    audit["lattice_points_checked"] = npts;
    audit["lattice_exact"] = exact == npts;

    SeqRng rng(seed0, RngStream::kValidation);
    double worst = -std::numeric_limits<double>::infinity();
    for (long t = 0; t < 10000; ++t) {
      const double u = pp.x0() + pp.period() * rng.uniform();
      const double v = pp.x0() + pp.period() * rng.uniform();
      worst = std::max(worst, std::abs(pp(u) - pp(v)) - std::abs(u - v));
    }
    audit["lipschitz_pairs"] = 10000;
    audit["lipschitz_excess"] = worst;
    audit["lipschitz_ok"] = worst <= 1e-12;

    const NoiseModel noise = inst.noise_unit();
    const long draws = 100000;
    double sum_l1sq = 0.0, sum_total = 0.0;
    for (long t = 0; t < draws; ++t) {
      const Eigen::VectorXd delta =
          noise.draw(seed0 + 7, static_cast<std::uint64_t>(t), inst.dim());
      const double l1 = delta.lpNorm<1>();
      sum_l1sq += l1 * l1;
      sum_total += delta.sum();
    }
    const double mean_l1sq = sum_l1sq / static_cast<double>(draws);
    const double budget = 1.05 * inst.sigma_unit() * inst.sigma_unit();
    audit["noise_draws"] = draws;
    audit["noise_l1_variance"] = mean_l1sq;
    audit["noise_l1_variance_budget"] = budget;
    audit["noise_variance_ok"] = mean_l1sq <= budget;
    const double var_total = static_cast<double>(inst.dim()) * inst.spike_magnitude() *
                             inst.spike_magnitude() * inst.spike_probability() *
                             (1.0 - inst.spike_probability());
    const double z = std::abs(sum_total / static_cast<double>(draws)) /
                     std::sqrt(var_total / static_cast<double>(draws));
    audit["unbiasedness_z"] = z;
    audit["unbiased_ok"] = z <= 3.0;
  }
  rep.audit = audit;
  return rep;
}

}  // namespace precopt::bench
