#include "cli.hpp"

#include "checks.hpp"

#include "fletcher/diagnostics.hpp"
#include "fletcher/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fletcher::tools {

const char* const kSweepHeader = "problem,criterion,eta,status,its,nfg,nHv,nAv,nATv";

namespace {

using nlohmann::json;

struct Common {
  std::string problem;
  std::vector<std::string> params;
  std::optional<int> grid;
  std::optional<int> seed;
  double sigma = 1.0;
  double eta = 1e-10;
  std::string criterion = "residual";
  std::string hessian = "B2";
  std::string explicit_linear = "off";
  std::string backend = "direct";
  std::string kernel = "symmetric";
  std::string preconditioner = "auto";
  std::string sigma_update = "off";
  std::optional<double> sigma_min;
  double epsilon = 1e-8;
  int max_iters = 500;
  bool scaling_cap = false;
  std::string out;
};

void add_problem_flags(CLI::App* app, Common& c) {
  app->add_option("--problem", c.problem, "Problem name")->required();
  app->add_option("--param", c.params, "Problem parameter key=value (repeatable)");
  app->add_option("--grid", c.grid, "Grid size N for the PDE problems")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "Seed for random problems")->check(CLI::NonNegativeNumber);
  app->add_option("--out", c.out, "Write the report to this file instead of stdout");
}

void add_solver_flags(CLI::App* app, Common& c) {
  app->add_option("--sigma", c.sigma, "Penalty parameter")->check(CLI::NonNegativeNumber);
  app->add_option("--eta", c.eta, "Inner solve tolerance");
  app->add_option("--criterion", c.criterion, "Inner termination")
      ->check(CLI::IsMember({"residual", "error"}));
  app->add_option("--hessian", c.hessian, "Hessian approximation")->check(CLI::IsMember({"B1", "B2"}));
  app->add_option("--explicit-linear", c.explicit_linear, "Keep linear constraints explicit")
      ->check(CLI::IsMember({"on", "off"}));
  app->add_option("--backend", c.backend, "Augmented system backend")
      ->check(CLI::IsMember({"direct", "iterative"}));
  app->add_option("--kernel", c.kernel, "Augmented system form")
      ->check(CLI::IsMember({"symmetric", "unsymmetric"}));
  app->add_option("--preconditioner", c.preconditioner, "Iterative preconditioner")
      ->check(CLI::IsMember({"auto", "exact", "none"}));
  app->add_option("--sigma-update", c.sigma_update, "Penalty parameter update")
      ->check(CLI::IsMember({"off", "heuristic"}));
  app->add_option("--sigma-min", c.sigma_min, "Lower bound on sigma_min for error-based termination")
      ->check(CLI::PositiveNumber);
  app->add_option("--epsilon", c.epsilon, "Optimality tolerance")->check(CLI::PositiveNumber);
  app->add_option("--max-iters", c.max_iters, "Outer iteration limit")->check(CLI::NonNegativeNumber);
  app->add_flag("--scaling-cap", c.scaling_cap, "Cap the bound scaling q at 1 (smoothly)");
}

ProblemParams problem_params(const Common& c) {
  ProblemParams p = parse_params(c.params);
  if (c.grid) p["grid"] = std::to_string(*c.grid);
  if (c.seed && c.problem == "randqp") p["seed"] = std::to_string(*c.seed);
  return p;
}

SolverConfig solver_config(const Common& c) {
  SolverConfig cfg;
  cfg.sigma = c.sigma;
  cfg.sigma_max = std::max(cfg.sigma_max, c.sigma);
  cfg.eta = c.eta;
  cfg.termination = c.criterion == "error" ? Criterion::error : Criterion::residual;
  cfg.hessian = c.hessian == "B1" ? HessianMode::B1 : HessianMode::B2;
  cfg.explicit_linear = c.explicit_linear == "on";
  cfg.backend = c.backend == "iterative" ? Backend::iterative : Backend::direct;
  cfg.form = c.kernel == "unsymmetric" ? KernelForm::unsymmetric : KernelForm::symmetric;
  cfg.preconditioner = c.preconditioner == "exact"  ? PreconditionerChoice::exact
                       : c.preconditioner == "none" ? PreconditionerChoice::none
                                                    : PreconditionerChoice::automatic;
  cfg.sigma_update = c.sigma_update == "heuristic" ? SigmaUpdate::heuristic : SigmaUpdate::off;
  cfg.sigma_min_bound = c.sigma_min;
  cfg.epsilon = c.epsilon;
  cfg.max_iterations = c.max_iters;
  cfg.scaling.capped = c.scaling_cap;
  cfg.validate();
  return cfg;
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json config_json(const Common& c, const SolverConfig& cfg) {
  json j = {{"sigma", cfg.sigma},       {"eta", cfg.eta},         {"criterion", c.criterion},
            {"hessian", c.hessian},     {"explicit_linear", cfg.explicit_linear},
            {"backend", c.backend},     {"kernel", c.kernel},     {"preconditioner", c.preconditioner},
            {"sigma_update", c.sigma_update}, {"epsilon", cfg.epsilon}, {"max_iters", cfg.max_iterations},
            {"scaling_cap", cfg.scaling.capped}};
  j["sigma_min"] = c.sigma_min ? json(*c.sigma_min) : json(nullptr);
  return j;
}

json report_json(const SolveReport& r) {
  return {{"status", to_string(r.status)},
          {"message", r.message},
          {"iterations", r.iterations},
          {"counters", {{"nfg", r.counters.n_fg}, {"nHv", r.counters.n_Hv}, {"nAv", r.counters.n_Av},
                        {"nATv", r.counters.n_ATv}}},
          {"phi", r.phi},
          {"objective", r.objective},
          {"sigma", r.sigma},
          {"sigma_updates", r.sigma_updates},
          {"primal_residual", r.primal_residual},
          {"dual_residual", r.dual_residual},
          {"combined_residual", r.combined_residual},
          {"eps_p", r.eps_p},
          {"eps_d", r.eps_d},
          {"linear_residual", r.linear_residual},
          {"x", vec_json(r.x)},
          {"y", vec_json(r.y)},
          {"z", vec_json(r.z)}};
}

// Writes to --out if given, else to `out`.
void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.out);
  if (!file) throw ConfigError("cannot open '" + c.out + "' for writing");
  file << text;
}

int cmd_solve(const Common& c, std::ostream& out) {
  const ProblemParams params = problem_params(c);
  const ProblemPtr problem = make_problem(c.problem, params);
  const SolverConfig cfg = solver_config(c);
  const SolveReport r = minimize(problem, cfg);
  json j = {{"schema", 1}, {"problem", c.problem}, {"params", params}, {"config", config_json(c, cfg)}};
  j["report"] = report_json(r);
  emit(c, j.dump(2) + "\n", out);
  return r.converged() ? kConverged : kNotConverged;
}

std::string format_eta(double eta) {
  std::ostringstream s;
  s << std::setprecision(3) << eta;
  return s.str();
}

int cmd_sweep(const Common& c, const std::vector<double>& etas, const std::vector<std::string>& criteria,
              int jobs, std::ostream& out) {
  const ProblemParams params = problem_params(c);
  const ProblemPtr problem = make_problem(c.problem, params);
  struct Row {
    std::string criterion;
    double eta;
  };
  std::vector<Row> rows;
  for (const auto& crit : criteria) {
    for (double eta : etas) rows.push_back({crit, eta});
  }
  auto run = [&](const Row& row) {
    Common rc = c;
    rc.criterion = row.criterion;
    rc.eta = row.eta;
    std::ostringstream line;
    line << c.problem << ',' << row.criterion << ',' << format_eta(row.eta) << ',';
    try {
      const SolveReport r = minimize(problem, solver_config(rc));
      line << to_string(r.status) << ',';
      if (r.converged()) {
        line << r.iterations << ',' << r.counters.n_fg << ',' << r.counters.n_Hv << ',' << r.counters.n_Av << ','
             << r.counters.n_ATv;
      } else {
        line << "*,*,*,*,*";
      }
    } catch (const Error& e) {
      line << "error,*,*,*,*,*";
    }
    return std::make_pair(line.str(), line.str().find(",converged,") != std::string::npos);
  };

  std::vector<std::pair<std::string, bool>> results(rows.size());
  for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<std::pair<std::string, bool>>> batch;
    const std::size_t stop = std::min(rows.size(), start + static_cast<std::size_t>(jobs));
    for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, run, rows[i]));
    for (std::size_t i = start; i < stop; ++i) results[i] = batch[i - start].get();
  }

  std::ostringstream csv;
  csv << kSweepHeader << '\n';
  bool all = true;
  for (const auto& [line, ok] : results) {
    csv << line << '\n';
    all = all && ok;
  }
  emit(c, csv.str(), out);
  return all ? kConverged : kNotConverged;
}

int cmd_threshold(const Common& c, std::ostream& out) {
  const ProblemParams params = problem_params(c);
  const ProblemPtr problem = make_problem(c.problem, params);
  Vector x, y;
  std::string source;
  json solve;
  if (auto ref = problem->reference_solution()) {
    x = ref->x;
    y = ref->y;
    source = "reference";
  } else {
    SolverConfig cfg = solver_config(c);
    cfg.explicit_linear = !problem->linear_constraints().empty();
    cfg.epsilon = std::min(cfg.epsilon, 1e-10);
    const SolveReport r = minimize(problem, cfg);
    if (!r.converged()) throw NotKktError("threshold: solve did not converge (" + to_string(r.status) + ")");
    x = r.x;
    y = r.y;
    source = "solve";
    solve = {{"sigma", r.sigma}, {"iterations", r.iterations}, {"objective", r.objective}};
  }
  const ThresholdReport impl = threshold_sigma(*problem, x, y, ThresholdMode::implicit);
  const ThresholdReport expl = threshold_sigma(*problem, x, y, ThresholdMode::explicit_linear);
  json j = {{"schema", 1},
            {"problem", c.problem},
            {"params", params},
            {"point", source},
            {"sigma_star_implicit", impl.sigma_star},
            {"sigma_star_explicit", expl.sigma_star},
            {"sigma_bar_implicit", impl.sigma_bar},
            {"sigma_bar_explicit", expl.sigma_bar}};
  if (!solve.is_null()) j["solve"] = solve;
  emit(c, j.dump(2) + "\n", out);
  return kConverged;
}

int cmd_check(const Common& c, const CheckOptions& opts, std::ostream& out) {
  const ProblemParams params = problem_params(c);
  const ProblemPtr problem = make_problem(c.problem, params);
  const CheckReport rep = run_checks(problem, opts);
  json suites = json::array();
  for (const auto& s : rep.suites) {
    suites.push_back({{"name", s.name}, {"max_error", s.max_error}, {"tolerance", s.tolerance},
                      {"passed", s.passed()}});
  }
  json j = {{"schema", 1}, {"problem", c.problem}, {"params", params}, {"points", opts.points},
            {"suites", suites}, {"passed", rep.passed()}};
  emit(c, j.dump(2) + "\n", out);
  return rep.passed() ? kConverged : kNotConverged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smooth exact penalty solver for bound-constrained nonlinear programs", "fletcher"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common solve_c, sweep_c, thr_c, check_c;
  auto* solve = app.add_subcommand("solve", "Minimize the penalty function and report as JSON");
  add_problem_flags(solve, solve_c);
  add_solver_flags(solve, solve_c);

  auto* sweep = app.add_subcommand("sweep", "Run an eta sweep with the iterative backend and emit CSV");
  sweep_c.backend = "iterative";
  add_problem_flags(sweep, sweep_c);
  add_solver_flags(sweep, sweep_c);
  std::vector<double> etas{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
  std::vector<std::string> criteria{"residual", "error"};
  int jobs = 1;
  sweep->add_option("--etas", etas, "Inner tolerances")->delimiter(',');
  sweep->add_option("--criteria", criteria, "Inner termination criteria")
      ->delimiter(',')
      ->check(CLI::IsMember({"residual", "error"}));
  sweep->add_option("--jobs", jobs, "Rows run concurrently")->check(CLI::PositiveNumber);

  auto* thr = app.add_subcommand("threshold", "Threshold penalty parameters, implicit and explicit");
  thr_c.sigma = 10.0;
  add_problem_flags(thr, thr_c);
  add_solver_flags(thr, thr_c);

  auto* check = app.add_subcommand("check", "Derivative, adjoint and oracle consistency suites");
  add_problem_flags(check, check_c);
  CheckOptions check_opts;
  check->add_option("--sigma", check_opts.sigma, "Penalty parameter")->check(CLI::NonNegativeNumber);
  check->add_option("--points", check_opts.points, "Random interior points")->check(CLI::PositiveNumber);
  bool no_solution = false;
  check->add_flag("--skip-solution", no_solution, "Skip the Hessian comparison at a solution");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kConverged;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (*solve) return cmd_solve(solve_c, out);
    if (*sweep) {
      for (double eta : etas) {
        if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("--etas values must lie in (0, 1)");
      }
      return cmd_sweep(sweep_c, etas, criteria, jobs, out);
    }
    if (*thr) return cmd_threshold(thr_c, out);
    if (*check) {
      check_opts.seed = static_cast<unsigned>(check_c.seed.value_or(1));
      check_opts.at_solution = !no_solution;
      return cmd_check(check_c, check_opts, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kNotConverged;
  }
  return kUsage;
}

}  // namespace fletcher::tools
