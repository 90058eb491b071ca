#include "checks.hpp"

#include "fletcher/diagnostics.hpp"
#include "fletcher/explicit_penalty.hpp"
#include "fletcher/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fletcher::tools {

namespace {

double rel_err(const Vector& a, const Vector& b) {
  if (a.size() == 0) return 0.0;
  return inf_norm(a - b) / std::max(1.0, inf_norm(b));
}

double rel_err(const Matrix& a, const Matrix& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

Vector gaussian(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index j = 0; j < n; ++j) v[j] = normal(rng);
  return v;
}

// Largest h <= h0 keeping x +- h d strictly inside the bounds.
double safe_step(const Vector& x, const Vector& d, const Bounds& b, double h0) {
  double h = h0;
  for (Index j = 0; j < x.size(); ++j) {
    if (d[j] == 0.0) continue;
    const double room = std::min(x[j] - b.lower[j], b.upper[j] - x[j]);
    h = std::min(h, 0.5 * room / std::abs(d[j]));
  }
  return h;
}

struct Accumulator {
  SuiteResult result;
  Accumulator(std::string name, double tol) { result = {std::move(name), 0.0, tol}; }
  void add(double e) { result.max_error = std::max(result.max_error, std::isnan(e) ? kInf : e); }
};

double solution_sigma(const std::string& name) {
  if (name == "invpoisson-fd") return 1e-2;
  if (name == "poisson-boltzmann-fd") return 1e-1;
  if (name == "hs113") return 10.0;
  return 1.0;
}

// Compares the matrix-free evaluator against the dense oracle at ev.x().
void compare_with_oracle(const PenaltyEvaluator& ev, const DenseOracles& o, std::mt19937_64& rng,
                         Accumulator& oracle, Accumulator& adjoint) {
  const Index n = ev.n();
  const Index m = ev.m_nonlinear() + ev.m_linear();
  oracle.add(std::abs(ev.value() - o.phi) / std::max(1.0, std::abs(o.phi)));
  oracle.add(rel_err(ev.multipliers(), o.y));
  oracle.add(rel_err(ev.linear_multipliers(), o.w));
  oracle.add(rel_err(ev.lagrangian_gradient(), o.g_sigma));
  oracle.add(rel_err(ev.gradient(), o.gradient));

  const Vector v = gaussian(n, rng);
  const Vector u = gaussian(m, rng);
  const Vector YWu = ev.yw_product(u);
  const Vector YWtv = ev.ywt_product(v);
  oracle.add(rel_err(YWu, Vector(o.YW * u)));
  oracle.add(rel_err(YWtv, Vector(o.YW.transpose() * v)));
  const double scale = std::max(1.0, std::abs(v.dot(YWu)));
  adjoint.add(std::abs(v.dot(YWu) - u.dot(YWtv)) / scale);

  oracle.add(rel_err(ev.hess_product(v, HessianMode::B1), Vector(o.B1 * v)));
  oracle.add(rel_err(ev.hess_product(v, HessianMode::B2), Vector(o.B2 * v)));
}

}  // namespace

bool CheckReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed(); });
}

Vector random_interior_point(const NlpProblem& problem, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Bounds& b = problem.bounds();
  Vector x = problem.initial_point();
  for (Index j = 0; j < x.size(); ++j) {
    x[j] += 0.1 * normal(rng) * std::max(1.0, std::abs(x[j]));
    const double width = b.upper[j] - b.lower[j];
    const double margin = 0.05 * std::min(1.0, width);
    x[j] = std::clamp(x[j], b.lower[j] + margin, b.upper[j] - margin);
  }
  return x;
}

CheckReport run_checks(const ProblemPtr& problem, const CheckOptions& options) {
  CheckReport report;
  report.problem = problem->name();
  const Index n = problem->num_variables();
  const Bounds& bounds = problem->bounds();
  const bool has_linear = !problem->linear_constraints().empty();
  std::mt19937_64 rng(options.seed);

  Accumulator grad("gradient-fd", 1e-6);
  Accumulator adjoint("adjoint", 1e-9);
  Accumulator oracle("oracle", 1e-9);
  Accumulator backends("backend-equivalence", 1e-8);

  PenaltyOptions sym;
  sym.sigma = options.sigma;
  PenaltyOptions unsym = sym;
  unsym.form = KernelForm::unsymmetric;
  PenaltyOptions iter = sym;
  iter.backend = Backend::iterative;
  iter.solve.eta = 1e-12;
  iter.preconditioner = PreconditionerChoice::exact;
  iter.solve.max_inner_iterations = 10 * static_cast<int>(n + problem->num_constraints()) + 100;

  PenaltyEvaluator ev(problem, sym);
  PenaltyEvaluator ev_u(problem, unsym);
  PenaltyEvaluator ev_i(problem, iter);
  PenaltyEvaluator probe(problem, sym);
  std::unique_ptr<ExplicitPenaltyEvaluator> ex, ex_u;
  if (has_linear) {
    ex = std::make_unique<ExplicitPenaltyEvaluator>(problem, sym);
    ex_u = std::make_unique<ExplicitPenaltyEvaluator>(problem, unsym);
  }

  // Full FD gradient on small problems, random directional derivatives otherwise.
  const bool full_fd = n <= 60;
  for (int k = 0; k < options.points; ++k) {
    const Vector x = random_interior_point(*problem, options.seed * 1000003ULL + k);
    ev.refresh(x);
    const Vector& g = ev.gradient();
    auto fd_dir = [&](const Vector& d) {
      const double h = safe_step(x, d, bounds, 1e-5 * std::max(1.0, inf_norm(x)));
      probe.refresh(x + h * d);
      const double fp = probe.value();
      probe.refresh(x - h * d);
      return (fp - probe.value()) / (2.0 * h);
    };
    if (full_fd) {
      Vector fd(n);
      for (Index j = 0; j < n; ++j) fd[j] = fd_dir(Vector::Unit(n, j));
      grad.add(rel_err(fd, g));
    } else {
      for (int t = 0; t < 4; ++t) {
        const Vector d = gaussian(n, rng).normalized();
        grad.add(std::abs(fd_dir(d) - g.dot(d)) / std::max(1.0, g.norm()));
      }
    }

    const DenseOracles o = dense_oracles(*problem, x, options.sigma);
    compare_with_oracle(ev, o, rng, oracle, adjoint);
    ev_u.refresh(x);
    compare_with_oracle(ev_u, o, rng, oracle, adjoint);
    const Vector u = gaussian(ev.m_nonlinear(), rng);
    const Vector v = gaussian(n, rng);
    adjoint.add(std::abs(v.dot(ev.y_product(u)) - u.dot(ev.yt_product(v))) /
                std::max(1.0, std::abs(v.dot(ev.y_product(u)))));

    ev_i.refresh(x);
    for (const PenaltyEvaluator* other : {&ev_u, &ev_i}) {
      backends.add(std::abs(other->value() - ev.value()) / std::max(1.0, std::abs(ev.value())));
      backends.add(rel_err(other->gradient(), g));
    }

    if (ex) {
      ex->refresh(x);
      ex_u->refresh(x);
      const DenseOracles oe = dense_oracles(*ex->split().nonlinear, x, options.sigma, &ex->split().linear);
      compare_with_oracle(*ex, oe, rng, oracle, adjoint);
      compare_with_oracle(*ex_u, oe, rng, oracle, adjoint);
    }
  }
  report.suites = {grad.result, adjoint.result, oracle.result, backends.result};

  if (options.at_solution) {
    Accumulator b1("B1-vs-fd-hessian", 1e-4);
    Accumulator b2("B2-vs-fd-hessian", 1e-4);
    SolverConfig cfg;
    cfg.sigma = options.solution_sigma;
    if (auto ref = problem->reference_solution()) {
      // Start next to the known solution with sigma safely above its threshold.
      if (cfg.sigma <= 0.0) {
        cfg.sigma = 2.0 * threshold_sigma(*problem, ref->x, ref->y, ThresholdMode::implicit).sigma_star + 1.0;
      }
      cfg.x0 = ref->x;
      for (Index j = 0; j < n; ++j) {
        const double margin = 1e-3 * std::min(1.0, bounds.upper[j] - bounds.lower[j]);
        cfg.x0[j] = std::clamp(cfg.x0[j], bounds.lower[j] + margin, bounds.upper[j] - margin);
      }
    }
    if (cfg.sigma <= 0.0) cfg.sigma = solution_sigma(problem->name());
    cfg.epsilon = 1e-10;
    cfg.sigma_max = std::max(cfg.sigma_max, cfg.sigma);
    const SolveReport rep = minimize(problem, cfg);
    if (!rep.converged()) {
      b1.add(kInf);
      b2.add(kInf);
    } else {
      // Directions pinned against a bound are not resolvable by differences.
      const auto free = inactive_set(rep.x, bounds, 1e-6);
      auto block = [&](const Matrix& M) {
        Matrix out(free.size(), free.size());
        for (std::size_t a = 0; a < free.size(); ++a) {
          for (std::size_t b = 0; b < free.size(); ++b) out(a, b) = M(free[a], free[b]);
        }
        return out;
      };
      const Matrix fd = block(fd_penalty_hessian(problem, rep.x, rep.sigma));
      const DenseOracles o = dense_oracles(*problem, rep.x, rep.sigma);
      b1.add(rel_err(block(o.B1), fd));
      b2.add(rel_err(block(o.B2), fd));
    }
    report.suites.push_back(b1.result);
    report.suites.push_back(b2.result);
  }
  return report;
}

}  // namespace fletcher::tools
