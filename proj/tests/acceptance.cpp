// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: fletcher_acceptance [criterion...]   (no arguments runs all eight)

#include "checks.hpp"
#include "cli.hpp"
#include "fletcher/diagnostics.hpp"
#include "fletcher/solver.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

namespace {

using namespace fletcher;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace tol {
constexpr double toy_threshold = 1e-10;
constexpr double toy_seconds = 1.0;
constexpr double hs113_impl = 6.61;
constexpr double hs113_expl = 3.39;
constexpr double hs113_rel = 0.10;
constexpr double hs113_order = 1e-10;
constexpr double hs113_seconds = 10.0;
constexpr double toy_solution = 1e-8;
constexpr double hs113_sigma_ok = 7.0;
constexpr double hs113_sigma_low = 3.0;
constexpr double derivative_seconds = 60.0;
constexpr double curvature_hi = -1e-8;
constexpr double curvature_lo = -1e-6;
constexpr double curvature_min_sigma = 0.01;
constexpr double pde_seconds = 300.0;
constexpr double backend_rel = 1e-8;
constexpr double fd_q = 1e-8;
}  // namespace tol

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

json cli_json(std::vector<std::string> args, int* code = nullptr) {
  std::ostringstream out, err;
  const int c = tools::run_cli(args, out, err);
  if (code) *code = c;
  return json::parse(out.str());
}

Outcome toy_threshold() {
  const auto t0 = Clock::now();
  const json j = cli_json({"threshold", "--problem", "toy1d"});
  const double s = j["sigma_star_implicit"].get<double>();
  const double dt = seconds_since(t0);
  const double err = std::abs(s - 0.5);
  return {err <= tol::toy_threshold && dt < tol::toy_seconds,
          fmt("sigma*=%.12g |err|=%.1e in %.3fs", s, err, dt)};
}

Outcome hs113_threshold() {
  const auto t0 = Clock::now();
  const json j = cli_json({"threshold", "--problem", "hs113"});
  const double impl = j["sigma_star_implicit"].get<double>();
  const double expl = j["sigma_star_explicit"].get<double>();
  const double dt = seconds_since(t0);
  const double ri = std::abs(impl - tol::hs113_impl) / tol::hs113_impl;
  const double re = std::abs(expl - tol::hs113_expl) / tol::hs113_expl;
  const bool ok = ri <= tol::hs113_rel && re <= tol::hs113_rel && expl <= impl + tol::hs113_order &&
                  dt < tol::hs113_seconds;
  return {ok, fmt("implicit %.4f (%.1f%%), explicit %.4f (%.1f%%) in %.2fs", impl, 100 * ri, expl, 100 * re, dt)};
}

Outcome dichotomy() {
  SolverConfig cfg;
  cfg.sigma = 1.0;
  const SolveReport above = minimize(make_problem("toy1d"), cfg);
  cfg.sigma = 0.25;
  const SolveReport below = minimize(make_problem("toy1d"), cfg);
  SolverConfig ex;
  ex.sigma = tol::hs113_sigma_ok;
  ex.explicit_linear = true;
  const SolveReport hs_ok = minimize(make_problem("hs113"), ex);
  SolverConfig im;
  im.sigma = tol::hs113_sigma_low;
  const SolveReport hs_low = minimize(make_problem("hs113"), im);
  const double err = above.converged() ? std::abs(above.x[0] - 1.0) : kInf;
  const bool ok = err <= tol::toy_solution && below.status == SolveStatus::unbounded && hs_ok.converged() &&
                  !hs_low.converged();
  return {ok, fmt("toy1d s=1 |x-1|=%.1e, s=0.25 %s; hs113 explicit s=7 %s, implicit s=3 %s", err,
                  to_string(below.status).c_str(), to_string(hs_ok.status).c_str(),
                  to_string(hs_low.status).c_str())};
}

// run_checks is shared by the derivative and backend criteria.
std::map<std::string, tools::CheckReport> check_cache;
double check_seconds = 0.0;

const std::map<std::string, tools::CheckReport>& all_checks() {
  if (check_cache.empty()) {
    const auto t0 = Clock::now();
    for (const std::string& name : problem_names()) {
      check_cache[name] = tools::run_checks(make_problem(name), tools::CheckOptions{});
    }
    check_seconds = seconds_since(t0);
  }
  return check_cache;
}

Outcome derivatives() {
  const auto& reports = all_checks();
  std::map<std::string, double> worst;
  std::map<std::string, double> limit;
  bool ok = check_seconds < tol::derivative_seconds;
  for (const auto& [name, rep] : reports) {
    for (const auto& s : rep.suites) {
      if (s.name == "backend-equivalence") continue;
      worst[s.name] = std::max(worst[s.name], s.max_error);
      limit[s.name] = s.tolerance;
      ok = ok && s.passed();
    }
  }
  std::string d;
  for (const auto& [k, v] : worst) d += fmt("%s %.1e/%.0e, ", k.c_str(), v, limit[k]);
  return {ok, d + fmt("%.1fs", check_seconds)};
}

// lambda_min of the penalty Hessian over directions that keep active bounds fixed.
double cone_curvature(const NlpProblem& p, const Vector& x, double sigma, const std::vector<Index>& free) {
  const DenseOracles o = dense_oracles(p, x, sigma);
  return restricted_min_eigenvalue(o.B1, free, Matrix(x.size(), 0));
}

Outcome curvature() {
  struct Point {
    std::string label;
    ProblemPtr problem;
    Vector x, y;
  };
  std::vector<Point> points;
  points.push_back({"toy1d", make_problem("toy1d"), Vector::Ones(1), Vector::Ones(1)});
  for (int seed = 1; seed <= 20; ++seed) {
    const ProblemPtr p = make_problem("randqp", {{"seed", std::to_string(seed)}});
    const KktPoint k = *p->reference_solution();
    points.push_back({"randqp/" + std::to_string(seed), p, k.x, k.y});
  }
  {
    const ProblemPtr p = make_problem("hs113");
    SolverConfig cfg;
    cfg.sigma = 10.0;
    cfg.epsilon = 1e-10;
    const SolveReport r = minimize(p, cfg);
    if (!r.converged()) return {false, "hs113 solve failed: " + r.message};
    points.push_back({"hs113", p, r.x, r.y});
  }
  bool ok = true;
  double worst_hi = kInf, worst_lo = -kInf;
  std::string failures;
  for (const Point& pt : points) {
    const double s = threshold_sigma(*pt.problem, pt.x, pt.y, ThresholdMode::implicit, 1e-6).sigma_star;
    const auto free = inactive_set(pt.x, pt.problem->bounds(), 1e-6);
    const double hi = cone_curvature(*pt.problem, pt.x, 1.1 * s + 0.01, free);
    worst_hi = std::min(worst_hi, hi);
    bool this_ok = hi >= tol::curvature_hi;
    if (s > tol::curvature_min_sigma) {
      const double lo = cone_curvature(*pt.problem, pt.x, 0.5 * s, free);
      worst_lo = std::max(worst_lo, lo);
      this_ok = this_ok && lo <= tol::curvature_lo;
    }
    if (!this_ok) failures += " " + pt.label;
    ok = ok && this_ok;
  }
  return {ok, fmt("%zu points, min lambda above threshold %.2e, max lambda at half threshold %.2e%s",
                  points.size(), worst_hi, worst_lo, failures.empty() ? "" : (" failed:" + failures).c_str())};
}

Outcome pde_runs() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string d;
  for (const auto& [name, sigma] : {std::pair<std::string, std::string>{"invpoisson-fd", "1e-2"},
                                    {"poisson-boltzmann-fd", "0.1"}}) {
    std::ostringstream out, err;
    const int code = tools::run_cli({"sweep", "--problem", name, "--grid", "16", "--sigma", sigma, "--etas",
                                     "1e-4,1e-6,1e-8,1e-10", "--criteria", "residual,error", "--sigma-min", "1",
                                     "--jobs", "4"},
                                    out, err);
    std::istringstream rows(out.str());
    std::string line;
    std::getline(rows, line);
    long nav_loose = -1, nav_tight = -1;
    int converged = 0;
    while (std::getline(rows, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
      if (f.size() != 9) continue;
      if (f[3] == "converged") ++converged;
      if (f[1] == "residual" && f[3] == "converged") {
        if (f[2] == "0.0001") nav_loose = std::stol(f[7]);
        if (f[2] == "1e-10") nav_tight = std::stol(f[7]);
      }
    }
    const bool this_ok = code == 0 && converged == 8 && nav_tight > nav_loose && nav_loose > 0;
    ok = ok && this_ok;
    d += fmt("%s %d/8 converged, nAv %ld -> %ld; ", name.c_str(), converged, nav_loose, nav_tight);
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < tol::pde_seconds;
  return {ok, d + fmt("%.1fs", dt)};
}

Outcome backends() {
  const auto& reports = all_checks();
  double worst = 0.0;
  for (const auto& [name, rep] : reports) {
    for (const auto& s : rep.suites) {
      if (s.name == "backend-equivalence") worst = std::max(worst, s.max_error);
    }
  }
  return {worst <= tol::backend_rel,
          fmt("direct/iterative(eta=1e-12)/unsymmetric max rel diff %.1e on %zu problems", worst, reports.size())};
}

Outcome scaling_suite() {
  struct Case {
    double l, u, w;
  };
  bool exact = true;
  double worst = 0.0;
  const double h_seam = 0x1p-28;
  auto fd = [](double x, double l, double u, double w, double h) {
    return (q_value(x + h, l, u, w) - q_value(x - h, l, u, w)) / (2.0 * h);
  };
  for (const Case c : {Case{0, 4, 1}, Case{-2, 6, 0.5}, Case{1, 2, 0.5}, Case{-8, -1, 1}}) {
    const double seam = 0.5 * (c.u - c.l) - 0.5 * c.w;
    for (double sgn : {-1.0, 1.0}) {
      const double x = 0.5 * (c.u + c.l + sgn * c.w);
      const double middle = 0.5 * (c.u - c.l) - c.w / 4 - (2 * x - c.u - c.l) * (2 * x - c.u - c.l) / (4 * c.w);
      exact = exact && middle == seam && std::min(x - c.l, c.u - x) == seam && q_value(x, c.l, c.u, c.w) == seam;
      const double slope = x - c.l < c.u - x ? 1.0 : -1.0;
      exact = exact && -(2 * x - c.u - c.l) / c.w == slope;
      worst = std::max(worst, std::abs(fd(x, c.l, c.u, c.w, h_seam) - q_derivative(x, c.l, c.u, c.w)));
    }
    for (double x = c.l + 1.0 / 64; x < c.u - 1.0 / 128; x += 1.0 / 64) {
      worst = std::max(worst, std::abs(fd(x, c.l, c.u, c.w, h_seam) - q_derivative(x, c.l, c.u, c.w)));
    }
  }
  for (double d = 0.01; d < 50.0; d *= 1.1) {
    worst = std::max(worst, std::abs(fd(-1 + d, -1, kInf, 1, 1e-6) - q_derivative(-1 + d, -1, kInf, 1)));
    worst = std::max(worst, std::abs(fd(2 - d, -kInf, 2, 1, 1e-6) - q_derivative(2 - d, -kInf, 2, 1)));
    worst = std::max(worst, std::abs(fd(d, -kInf, kInf, 1, 1e-6) - q_derivative(d, -kInf, kInf, 1)));
  }
  return {exact && worst <= tol::fd_q, fmt("seam identities %s, max |q' - FD| %.1e", exact ? "exact" : "BROKEN", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"toy1d threshold", toy_threshold}, {"hs113 thresholds", hs113_threshold},
      {"threshold dichotomy", dichotomy},  {"derivative suite", derivatives},
      {"threshold curvature", curvature},  {"PDE eta sweeps", pde_runs},
      {"backend equivalence", backends},   {"scaling function", scaling_suite}};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (int i = 1; i <= 8; ++i) selected.push_back(i);
  }
  bool all = true;
  for (int id : selected) {
    if (id < 1 || id > 8) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto& [label, fn] = criteria[static_cast<std::size_t>(id - 1)];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << label << ": " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
