#include "aniso/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "aniso/alm.hpp"
#include "aniso/operators.hpp"
#include "aniso/ppa.hpp"
#include "aniso/prox.hpp"
#include "aniso/spec_string.hpp"

namespace aniso {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Vec parse_vector(const std::string& text, const std::string& what) {
  const auto items = split(text, ',');
  if (items.empty()) throw ParseError("empty vector for " + what);
  Vec v(static_cast<long>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v[static_cast<long>(i)] = parse_double(items[i], what);
  return v;
}

ExperimentKind parse_kind(const std::string& text) {
  if (text == "ppa_run") return ExperimentKind::PpaRun;
  if (text == "alm_run") return ExperimentKind::AlmRun;
  if (text == "verify_identities") return ExperimentKind::VerifyIdentities;
  if (text == "rate_study") return ExperimentKind::RateStudy;
  throw ParseError("unknown experiment kind '" + text + "'");
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError("invalid boolean '" + text + "' for " + what);
}

int parse_positive_int(const std::string& text, const std::string& what) {
  const long v = parse_long(text, what);
  if (v < 1 || v > std::numeric_limits<int>::max()) throw ParseError(what + " must be a positive integer");
  return static_cast<int>(v);
}

std::string timestamp_line() {
  return fmt::format("# generated {:%Y-%m-%dT%H:%M:%SZ}\n", fmt::gmtime(std::time(nullptr)));
}

std::string fmt_or_na(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : "nan"; }

// Problem spec with the config seed applied (when the spec has none) and paper dimensions on request.
std::string alm_problem_spec(const ExperimentConfig& c) {
  SpecString s = parse_spec_string(c.problem);
  if (c.seed && !s.has("seed")) s.params["seed"] = std::to_string(*c.seed);
  if (c.paper_scale) {
    if (s.name == "game") s.params["n"] = "150", s.params["m"] = "160";
    if (s.name == "l1reg") s.params["n"] = "145", s.params["m"] = "150";
  }
  std::string out = s.name;
  char sep = ':';
  for (const auto& [k, v] : s.params) {
    out += sep + k + "=" + v;
    sep = ',';
  }
  return out;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

struct Estimates {
  double order = kNaN;
  double rate = kNaN;
};

Estimates try_estimate(const std::vector<double>& errors, int tail) {
  try {
    const auto e = estimate_order(errors, tail);
    return {e.order, e.rate};
  } catch (const InsufficientData&) {
    return {};
  }
}

double try_q_factor(const std::vector<double>& errors, int window) {
  try {
    return tail_q_factor(errors, window);
  } catch (const InsufficientData&) {
    return kNaN;
  }
}

PpaConfig ppa_config(const ExperimentConfig& c, const ProxKernel& kernel, double lambda) {
  PpaConfig pc(kernel);
  pc.lambda = lambda;
  pc.max_outer = c.max_outer;
  pc.eps0 = c.eps0.value_or(0.0);
  pc.stop.dual_norm_tol = c.dual_norm_tol;
  pc.stop.step_tol = c.step_tol;
  pc.solver.residual_tol = c.residual_tol;
  return pc;
}

RunOutcome run_ppa_experiment(const ExperimentConfig& c, std::ostream& log) {
  const OperatorSpec op = parse_operator(c.problem, c.base_dir);
  const long n = op.dimension();
  const ProxKernel kernel = parse_kernel(c.kernel, n);
  const Vec x0 = c.x0.value_or(Vec::Zero(n));
  require_dim(x0, n);

  const auto start = std::chrono::steady_clock::now();
  const IterateTrace trace = run_ppa(op, ppa_config(c, kernel, c.lambda), x0);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ostringstream csv;
  csv << timestamp_line();
  csv << fmt::format("# ppa_run operator={} kernel={} lambda={}\n", op.name(), kernel.describe(), c.lambda);
  write_trace_csv(csv, trace);

  std::ostringstream sum;
  sum << fmt::format("experiment = ppa_run\noperator = {}\nkernel = {}\nlambda = {}\n", op.name(), kernel.describe(),
                     c.lambda);
  sum << fmt::format("iterations = {}\nstop_reason = {}\n", trace.size(), to_string(trace.stop));
  sum << "final_dual_norm = " << fmt_or_na(trace.records.back().dual_norm) << "\n";
  if (trace.x_star) {
    const auto dp = dist_p_column(trace);
    const auto d2 = dist_2_column(trace);
    const auto ep = try_estimate(dp, c.tail);
    const auto e2 = try_estimate(d2, c.tail);
    sum << "final_dist_2 = " << fmt_or_na((trace.x_final - *trace.x_star).norm()) << "\n";
    sum << "order_dist_p = " << fmt_or_na(ep.order) << "\nrate_dist_p = " << fmt_or_na(ep.rate) << "\n";
    sum << "order_dist_2 = " << fmt_or_na(e2.order) << "\nrate_dist_2 = " << fmt_or_na(e2.rate) << "\n";
    sum << "q_factor_dist_2 = " << fmt_or_na(try_q_factor(d2, c.tail)) << "\n";
  }
  sum << fmt::format("wall_time_s = {:.6f}\n", wall);

  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  write_file(dir / "trace.csv", csv.str());
  write_file(dir / "summary.txt", sum.str());
  log << fmt::format("ppa_run: {} iterations, stop = {}\n", trace.size(), to_string(trace.stop));
  return {{(dir / "trace.csv").string(), (dir / "summary.txt").string()}, static_cast<int>(trace.size())};
}

RunOutcome run_alm_experiment(const ExperimentConfig& c, std::ostream& log) {
  const SaddleProblem problem = parse_problem(alm_problem_spec(c));
  AlmConfig ac(parse_kernel(c.kernel, problem.n()), parse_kernel(c.dual_kernel, problem.m()));
  ac.max_outer = c.max_outer;
  ac.eps0 = c.eps0.value_or(1e-2);
  ac.inner_tol_floor = c.residual_tol;
  ac.gap_tol = c.gap_tol;
  ac.kkt_tol = c.kkt_tol;
  const bool game = problem.g_star == GStarKind::SimplexIndicator;
  const Vec x0 = c.x0.value_or(game ? Vec(Vec::Constant(problem.n(), 1.0 / problem.n())) : Vec(Vec::Zero(problem.n())));
  const Vec y0 = c.y0.value_or(game ? Vec(Vec::Constant(problem.m(), 1.0 / problem.m())) : Vec(Vec::Zero(problem.m())));

  const auto start = std::chrono::steady_clock::now();
  const AlmTrace trace = run_alm(problem, ac, x0, y0);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ostringstream csv;
  csv << timestamp_line();
  csv << fmt::format("# alm_run problem={} seed={} primal_kernel={} dual_kernel={}\n", problem.name, problem.seed,
                     ac.primal_kernel.describe(), ac.dual_kernel.describe());
  write_alm_csv(csv, trace);

  const auto& last = trace.records.back();
  std::ostringstream sum;
  sum << fmt::format("experiment = alm_run\nproblem = {}\nseed = {}\nprimal_kernel = {}\ndual_kernel = {}\n",
                     problem.name, problem.seed, ac.primal_kernel.describe(), ac.dual_kernel.describe());
  sum << fmt::format("iterations = {}\nreached_tolerance = {}\n", trace.size(), trace.reached_tolerance);
  sum << "final_gap = " << fmt_or_na(last.gap) << "\nfinal_kkt_residual = " << fmt_or_na(last.kkt_residual) << "\n";
  sum << "final_primal_value = " << fmt_or_na(last.primal_value) << "\nfinal_dual_value = " << fmt_or_na(last.dual_value)
      << "\n";
  sum << fmt::format("wall_time_s = {:.6f}\n", wall);

  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  write_file(dir / "trace.csv", csv.str());
  write_file(dir / "summary.txt", sum.str());
  log << fmt::format("alm_run: {} iterations, gap = {:.3e}\n", trace.size(), last.gap);
  return {{(dir / "trace.csv").string(), (dir / "summary.txt").string()}, static_cast<int>(trace.size())};
}

Vec random_vec(SeededUniform& rng, long n, double lo, double hi) {
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = rng(lo, hi);
  return v;
}

std::vector<ProxKernel> identity_kernels() {
  return {ProxKernel::separable_power(2, 1.5), ProxKernel::separable_power(2, 2.0), ProxKernel::separable_power(2, 3.0),
          ProxKernel::separable_power(2, 4.0), ProxKernel::isotropic_power(2, 3.0), ProxKernel::cosh(2)};
}

std::vector<OperatorSpec> identity_operators() {
  return {OperatorSpec::zero(2), OperatorSpec::identity(2), growth_instance_linear(), OperatorSpec::skew2()};
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::PpaRun:
      return "ppa_run";
    case ExperimentKind::AlmRun:
      return "alm_run";
    case ExperimentKind::VerifyIdentities:
      return "verify_identities";
    case ExperimentKind::RateStudy:
      return "rate_study";
  }
  return "unknown";
}

ExperimentConfig parse_config(std::istream& in, const std::string& base_dir) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(std::string("malformed config: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"experiment", {"kind", "seed", "output"}},
      {"problem", {"spec", "x0", "y0", "paper_scale"}},
      {"kernel", {"spec", "dual", "grid"}},
      {"solver",
       {"lambda", "lambdas", "max_outer", "dual_norm_tol", "step_tol", "residual_tol", "eps0", "gap_tol", "kkt_tol",
        "tail"}},
  };
  ExperimentConfig c;
  c.base_dir = base_dir;
  bool has_kind = false;
  for (const auto& [section, body] : tree) {
    const auto sec = allowed.find(section);
    if (sec == allowed.end()) throw ParseError("unknown config section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw ParseError("config key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      if (!sec->second.count(key)) throw ParseError("unknown key '" + key + "' in [" + section + "]");
      const std::string value = trim(node.data());
      const std::string what = section + "." + key;
      if (what == "experiment.kind") c.kind = parse_kind(value), has_kind = true;
      else if (what == "experiment.seed") c.seed = static_cast<std::uint64_t>(parse_long(value, what));
      else if (what == "experiment.output") c.output_dir = value;
      else if (what == "problem.spec") c.problem = value;
      else if (what == "problem.x0") c.x0 = parse_vector(value, what);
      else if (what == "problem.y0") c.y0 = parse_vector(value, what);
      else if (what == "problem.paper_scale") c.paper_scale = parse_bool(value, what);
      else if (what == "kernel.spec") c.kernel = value;
      else if (what == "kernel.dual") c.dual_kernel = value;
      else if (what == "kernel.grid") c.kernel_grid = split(value, ';');
      else if (what == "solver.lambda") c.lambda = parse_double(value, what);
      else if (what == "solver.lambdas") {
        c.lambda_grid.clear();
        for (const auto& item : split(value, ',')) c.lambda_grid.push_back(parse_double(item, what));
      } else if (what == "solver.max_outer") c.max_outer = parse_positive_int(value, what);
      else if (what == "solver.dual_norm_tol") c.dual_norm_tol = parse_double(value, what);
      else if (what == "solver.step_tol") c.step_tol = parse_double(value, what);
      else if (what == "solver.residual_tol") c.residual_tol = parse_double(value, what);
      else if (what == "solver.eps0") c.eps0 = parse_double(value, what);
      else if (what == "solver.gap_tol") c.gap_tol = parse_double(value, what);
      else if (what == "solver.kkt_tol") c.kkt_tol = parse_double(value, what);
      else if (what == "solver.tail") c.tail = parse_positive_int(value, what);
    }
  }
  if (!has_kind) throw ParseError("config is missing experiment.kind");
  if (!(c.lambda > 0.0 && c.lambda <= 1.0)) throw ParseError("solver.lambda must lie in (0, 1]");
  for (double l : c.lambda_grid) {
    if (!(l > 0.0 && l <= 1.0)) throw ParseError("solver.lambdas entries must lie in (0, 1]");
  }
  if (!(c.residual_tol > 0.0)) throw ParseError("solver.residual_tol must be positive");

  // Validate the specs up front so a bad config fails before any work starts.
  switch (c.kind) {
    case ExperimentKind::PpaRun:
    case ExperimentKind::RateStudy: {
      const long n = parse_operator(c.problem, c.base_dir).dimension();
      if (c.kind == ExperimentKind::PpaRun) parse_kernel(c.kernel, n);
      for (const auto& k : c.kernel_grid) parse_kernel(k, n);
      if (c.x0 && c.x0->size() != n) throw ParseError("problem.x0 has the wrong dimension");
      break;
    }
    case ExperimentKind::AlmRun: {
      const auto p = parse_problem(alm_problem_spec(c));
      parse_kernel(c.kernel, p.n());
      parse_kernel(c.dual_kernel, p.m());
      if (c.x0 && c.x0->size() != p.n()) throw ParseError("problem.x0 has the wrong dimension");
      if (c.y0 && c.y0->size() != p.m()) throw ParseError("problem.y0 has the wrong dimension");
      break;
    }
    case ExperimentKind::VerifyIdentities:
      break;
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read config '" + path + "'");
  return parse_config(in, fs::path(path).parent_path().string());
}

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
  switch (config.kind) {
    case ExperimentKind::PpaRun:
      return run_ppa_experiment(config, log);
    case ExperimentKind::AlmRun:
      return run_alm_experiment(config, log);
    case ExperimentKind::RateStudy: {
      const auto rows = rate_study(config, thread_budget());
      std::ostringstream table;
      table << timestamp_line();
      write_rate_table(table, rows);
      const fs::path dir(config.output_dir);
      fs::create_directories(dir);
      write_file(dir / "rate_study.csv", table.str());
      log << fmt::format("rate_study: {} cells\n", rows.size());
      return {{(dir / "rate_study.csv").string()}, static_cast<int>(rows.size())};
    }
    case ExperimentKind::VerifyIdentities: {
      VerifyOptions opts;
      if (config.seed) opts.seed = *config.seed;
      const auto rows = verify_identities(opts);
      std::ostringstream table;
      print_check_table(table, rows);
      const fs::path dir(config.output_dir);
      fs::create_directories(dir);
      write_file(dir / "verify.txt", table.str());
      log << table.str();
      const bool ok = std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.passed; });
      if (!ok) throw Error("identity checks failed");
      return {{(dir / "verify.txt").string()}, static_cast<int>(rows.size())};
    }
  }
  throw InvalidArgument("unknown experiment kind");
}

std::vector<CheckRow> verify_identities(const VerifyOptions& options) {
  SeededUniform rng(options.seed);
  std::vector<CheckRow> rows;
  auto add = [&](std::string name, double worst, double tol) {
    const double t = options.tol.value_or(tol);
    rows.push_back({std::move(name), worst, t, worst <= t});
  };

  double moreau = 0.0, absorption = 0.0;
  for (const auto& op : identity_operators()) {
    for (const auto& k : identity_kernels()) {
      for (int i = 0; i < options.points; ++i) {
        const Vec x = random_vec(rng, 2, -5, 5);
        moreau = std::max(moreau, moreau_residual(op, k, x, {}, options.mutation));
        for (const auto& [tau, rho] : {std::pair{1.0, 0.0}, std::pair{0.5, 0.5}, std::pair{0.25, 0.75}}) {
          absorption = std::max(absorption, relaxation_absorption_residual(op, k, x, tau, rho));
        }
      }
    }
  }
  add("moreau_decomposition", moreau, 1e-8);
  add("relaxation_absorption", absorption, 1e-8);

  double duality = 0.0, three = 0.0;
  auto kernels = identity_kernels();
  kernels.push_back(ProxKernel::exp_penalty(2, 0.01));
  for (const auto& k : kernels) {
    for (int i = 0; i < 1000; ++i) {
      const Vec x = random_vec(rng, 2, -2, 2), y = random_vec(rng, 2, -2, 2), w = random_vec(rng, 2, -2, 2);
      const double d = bregman_div(k, y, x);
      duality = std::max(duality, std::abs(bregman_div_star(k, k.grad_phi(x), k.grad_phi(y)) - d) / std::max(1.0, d));
      const double scale = std::max({1.0, k.phi_star(x), k.phi_star(y), k.phi_star(w)});
      three = std::max(three, std::abs(three_point_residual(k, x, y, w)) / scale);
    }
  }
  add("bregman_duality", duality, 1e-12);
  add("three_point", three, 1e-12);

  std::vector<std::pair<Vec, Vec>> pairs;
  for (int i = 0; i < 200; ++i) pairs.emplace_back(random_vec(rng, 2, -5, 5), random_vec(rng, 2, -5, 5));
  double dfirm = 0.0;
  const auto s_op = OperatorSpec::inverse(growth_instance_linear());
  for (double p : {2.0, 3.0}) {
    dfirm = std::max(dfirm, -dfirm_violation(s_op, ProxKernel::separable_power(2, p), pairs));
  }
  add("dfirm_nonexpansive", std::max(0.0, dfirm), 1e-9);

  // The certificate is an infimum: it may not exceed any sampled value, and graph pairs certify at 0.
  double enlargement = 0.0;
  for (const auto& op : {growth_instance_linear(), OperatorSpec::identity(2), OperatorSpec::skew2()}) {
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_vec(rng, 2, -2, 2), u = op.eval(x) + random_vec(rng, 2, -1, 1);
      const double cert = check_enlargement_member(op, {0.0, x, u}).certificate;
      for (int j = 0; j < 200; ++j) {
        const Vec y = random_vec(rng, 2, -6, 6);
        enlargement = std::max(enlargement, cert - (y - x).dot(op.eval(y) - u));
      }
      enlargement = std::max(enlargement, -check_enlargement_member(op, {0.0, x, op.eval(x)}).certificate);
    }
  }
  add("enlargement_certificate", enlargement, 1e-10);
  return rows;
}

void print_check_table(std::ostream& out, const std::vector<CheckRow>& rows) {
  out << fmt::format("{:<26} {:>12} {:>10}  {}\n", "check", "worst", "tol", "result");
  for (const auto& r : rows) {
    out << fmt::format("{:<26} {:>12.3e} {:>10.1e}  {}\n", r.name, r.worst, r.tol, r.passed ? "PASS" : "FAIL");
  }
}

int thread_budget() {
  if (const char* env = std::getenv("ANISO_PPA_THREADS")) {
    try {
      const long v = parse_long(env, "ANISO_PPA_THREADS");
      if (v >= 1) return static_cast<int>(std::min<long>(v, 1024));
    } catch (const ParseError&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RateRow> rate_study(const ExperimentConfig& config, int threads, bool write_traces) {
  const OperatorSpec op = parse_operator(config.problem, config.base_dir);
  if (!op.known_zero()) throw InvalidArgument("rate study needs an operator with a known zero");
  const long n = op.dimension();
  const Vec x0 = config.x0.value_or(Vec::Zero(n));
  require_dim(x0, n);

  struct Cell {
    std::string kernel;
    double lambda;
  };
  std::vector<Cell> cells;
  for (const auto& k : config.kernel_grid) {
    for (double l : config.lambda_grid) cells.push_back({k, l});
  }
  std::vector<RateRow> rows(cells.size());
  std::vector<std::string> traces(cells.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const ProxKernel kernel = parse_kernel(cells[i].kernel, n);
      RateRow& row = rows[i];
      row.kernel = cells[i].kernel;
      row.lambda = cells[i].lambda;
      row.order_p = row.rate_p = row.order_2 = row.rate_2 = row.q_factor_2 = kNaN;
      try {
        const auto trace = run_ppa(op, ppa_config(config, kernel, cells[i].lambda), x0);
        row.iterations = static_cast<int>(trace.size());
        const auto dp = dist_p_column(trace);
        const auto d2 = dist_2_column(trace);
        const auto ep = try_estimate(dp, config.tail);
        const auto e2 = try_estimate(d2, config.tail);
        row.order_p = ep.order, row.rate_p = ep.rate;
        row.order_2 = e2.order, row.rate_2 = e2.rate;
        row.q_factor_2 = try_q_factor(d2, config.tail);
        row.status = std::isfinite(row.order_p) && std::isfinite(row.order_2) ? "ok" : "insufficient_data";
        if (write_traces) {
          std::ostringstream csv;
          csv << timestamp_line();
          csv << fmt::format("# rate_study operator={} kernel={} lambda={}\n", op.name(), kernel.describe(),
                             cells[i].lambda);
          write_trace_csv(csv, trace);
          traces[i] = csv.str();
        }
      } catch (const ResolventFailure& e) {
        row.iterations = static_cast<int>(e.partial().size());
        row.status = "solver_failure";
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (write_traces && !cells.empty()) {
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!traces[i].empty()) write_file(dir / fmt::format("trace_{}.csv", i), traces[i]);
    }
  }
  return rows;
}

void write_rate_table(std::ostream& out, const std::vector<RateRow>& rows) {
  out << "kernel,lambda,iterations,order_dist_p,rate_dist_p,order_dist_2,rate_dist_2,q_factor_dist_2,status\n";
  for (const auto& r : rows) {
    out << fmt::format("\"{}\",{},{},{},{},{},{},{},{}\n", r.kernel, r.lambda, r.iterations, fmt_or_na(r.order_p),
                       fmt_or_na(r.rate_p), fmt_or_na(r.order_2), fmt_or_na(r.rate_2), fmt_or_na(r.q_factor_2),
                       r.status);
  }
}

int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (overrides.out_dir) config.output_dir = *overrides.out_dir;
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.paper_scale) config.paper_scale = true;
    if (overrides.tol) {
      if (config.kind == ExperimentKind::AlmRun) config.gap_tol = *overrides.tol;
      else config.dual_norm_tol = *overrides.tol;
    }
    if (config.kind == ExperimentKind::AlmRun) parse_problem(alm_problem_spec(config));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    run_experiment(config, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_verify(const VerifyOptions& options, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream& err) {
  std::vector<CheckRow> rows;
  try {
    rows = verify_identities(options);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  std::ostringstream table;
  print_check_table(table, rows);
  out << table.str();
  if (out_dir) {
    try {
      fs::create_directories(*out_dir);
      write_file(fs::path(*out_dir) / "verify.txt", table.str());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.passed) {
      err << "FAILED: " << r.name << "\n";
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}

int cmd_rate_study(const std::string& config_path, const std::optional<std::string>& out_dir,
                   const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (config.kind != ExperimentKind::RateStudy) throw ParseError("config kind is not rate_study");
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto outcome = run_experiment(config, out);
    std::ifstream table(outcome.files.front());
    std::string line;
    std::getline(table, line);  // timestamp
    while (std::getline(table, line)) out << line << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace aniso
