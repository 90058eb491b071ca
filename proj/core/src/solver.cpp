#include "fletcher/solver.hpp"

#include "fletcher/explicit_penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fletcher {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration-limit";
    case SolveStatus::linear_solver_failure: return "linear-solver-failure";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(sigma >= 0.0, "sigma must be nonnegative");
  require(epsilon > 0.0, "epsilon must be positive");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  require(delta0 > 0.0, "delta0 must be positive");
  require(tau_boundary > 0.0 && tau_boundary < 1.0, "tau_boundary must lie in (0, 1)");
  require(max_iterations >= 0, "max_iterations must be nonnegative");
  require(max_cg_iterations >= 0, "max_cg_iterations must be nonnegative");
  require(max_inner_iterations > 0, "max_inner_iterations must be positive");
  require(unbounded_floor < 0.0, "unbounded_floor must be negative");
  require(sigma_max >= sigma, "sigma_max must be at least sigma");
}

PenaltyOptions penalty_options(const SolverConfig& config) {
  PenaltyOptions opt;
  opt.sigma = config.sigma;
  opt.hessian = config.hessian;
  opt.form = config.form;
  opt.backend = config.backend;
  opt.solve.eta = config.eta;
  opt.solve.criterion = config.termination;
  opt.solve.sigma_min_bound = config.sigma_min_bound;
  opt.solve.max_inner_iterations = config.max_inner_iterations;
  opt.scaling = config.scaling;
  opt.preconditioner = config.preconditioner;
  return opt;
}

Vector stopping_scale(const Vector& x, const Bounds& bounds) {
  return bounds.distance(x).cwiseMin(1.0);
}

namespace {

std::unique_ptr<PenaltyEvaluator> make_evaluator(const ProblemPtr& counted, const SolverConfig& config,
                                                 const LinearSplit* split) {
  if (split) return std::make_unique<ExplicitPenaltyEvaluator>(*split, penalty_options(config));
  return std::make_unique<PenaltyEvaluator>(counted, penalty_options(config));
}

// Affine scaling for bounds: D_j = sqrt(min(v_j, 1)) where v_j is the
// distance to the bound that -g_j points at (1 if that bound is infinite),
// plus the diagonal |g_j| curvature term for active scaling components.
struct AffineScaling {
  Vector D;
  Vector curvature;
};

AffineScaling affine_scaling(const Vector& x, const Vector& g, const Bounds& b) {
  const Index n = x.size();
  AffineScaling s{Vector(n), Vector::Zero(n)};
  for (Index j = 0; j < n; ++j) {
    double v = kInf;
    if (g[j] < 0.0) {
      v = b.upper[j] - x[j];
    } else if (g[j] > 0.0) {
      v = x[j] - b.lower[j];
    } else {
      v = std::min(x[j] - b.lower[j], b.upper[j] - x[j]);
    }
    if (!std::isfinite(v) || v >= 1.0) {
      s.D[j] = 1.0;
    } else {
      s.D[j] = std::sqrt(v);
      s.curvature[j] = std::abs(g[j]);
    }
  }
  return s;
}

struct CgResult {
  Vector s;
  Vector Ms;
  int iterations = 0;
  bool hit_boundary = false;
};

double boundary_step(const Vector& s, const Vector& d, double delta) {
  const double dd = d.squaredNorm();
  const double sd = s.dot(d);
  const double ss = s.squaredNorm();
  const double disc = std::max(sd * sd + dd * (delta * delta - ss), 0.0);
  return (-sd + std::sqrt(disc)) / dd;
}

// Steihaug-Toint CG for min g^T s + s^T M s / 2, ||s|| <= delta, with all
// iterates kept in the range of `project`.
template <class MatVec, class Project>
CgResult steihaug(const Vector& g, const MatVec& M, const Project& project, double delta, int max_it) {
  const Index n = g.size();
  CgResult out{Vector::Zero(n), Vector::Zero(n)};
  Vector r = -project(g);
  const double r0 = r.norm();
  if (r0 == 0.0) return out;
  const double tol = std::min(0.1, std::sqrt(r0)) * r0;
  Vector d = r;
  double rr = r.squaredNorm();
  for (int k = 0; k < max_it; ++k) {
    out.iterations = k + 1;
    const Vector Md = project(M(d));
    const double dMd = d.dot(Md);
    if (dMd <= 0.0) {
      const double tau = boundary_step(out.s, d, delta);
      out.s += tau * d;
      out.Ms += tau * Md;
      out.hit_boundary = true;
      return out;
    }
    const double alpha = rr / dMd;
    if ((out.s + alpha * d).norm() >= delta) {
      const double tau = boundary_step(out.s, d, delta);
      out.s += tau * d;
      out.Ms += tau * Md;
      out.hit_boundary = true;
      return out;
    }
    out.s += alpha * d;
    out.Ms += alpha * Md;
    r -= alpha * Md;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= tol) return out;
    d = r + (rr_new / rr) * d;
    rr = rr_new;
  }
  return out;
}

// Largest alpha with l + floor <= x + alpha s <= u - floor.
double max_step(const Vector& x, const Vector& s, const Bounds& b, const Vector& floor) {
  double alpha = kInf;
  for (Index j = 0; j < x.size(); ++j) {
    if (s[j] < 0.0 && b.has_lower(j)) alpha = std::min(alpha, (b.lower[j] + floor[j] - x[j]) / s[j]);
    if (s[j] > 0.0 && b.has_upper(j)) alpha = std::min(alpha, (b.upper[j] - floor[j] - x[j]) / s[j]);
  }
  return std::max(alpha, 0.0);
}

// A few ulps of the bound: iterates never get closer than this, which keeps
// distances to the bounds out of the subnormal range.
Vector distance_floor(const Bounds& b) {
  const Index n = b.lower.size();
  Vector floor(n);
  for (Index j = 0; j < n; ++j) {
    double scale = 1.0;
    if (b.has_lower(j)) scale = std::max(scale, std::abs(b.lower[j]));
    if (b.has_upper(j)) scale = std::max(scale, std::abs(b.upper[j]));
    floor[j] = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  }
  return floor;
}

struct Measures {
  double primal = 0.0;
  double dual = 0.0;
  double combined = 0.0;
  double y_norm = 0.0;
};

Measures measure(const PenaltyEvaluator& ev, const Bounds& bounds) {
  Measures m;
  const Vector N = stopping_scale(ev.x(), bounds);
  m.primal = inf_norm(ev.constraint_values());
  m.dual = inf_norm(N.cwiseProduct(ev.lagrangian_gradient()));
  m.combined = inf_norm(N.cwiseProduct(ev.dual_estimate()));
  m.y_norm = std::max(inf_norm(ev.multipliers()), inf_norm(ev.linear_multipliers()));
  return m;
}

}  // namespace

SolveReport minimize(const ProblemPtr& problem, const SolverConfig& config) {
  config.validate();
  const auto counted = wrap_with_counters(problem);
  const Bounds& bounds = problem->bounds();
  bounds.validate();
  const Index n = problem->num_variables();

  SolveReport report;
  report.sigma = config.sigma;

  std::optional<LinearSplit> split;
  if (config.explicit_linear && !problem->linear_constraints().empty()) {
    split = split_linear_constraints(counted);
  }

  Vector x = config.x0.size() ? config.x0 : problem->initial_point();
  if (x.size() != n) throw ConfigError("starting point has the wrong size");
  if (split) {
    // Start on B^T x = d when the correction keeps x interior.
    const Vector r = split->linear.B.transpose() * x - split->linear.d;
    if (inf_norm(r) > 1e-12 * (1.0 + inf_norm(split->linear.d))) {
      x -= NullSpaceProjector(split->linear.B).min_norm_correction(r);
    }
  }
  if (!bounds.strictly_interior(x)) {
    throw ConfigError("starting point is not strictly inside the bounds");
  }

  const Vector floor = distance_floor(bounds);
  const LinearSplit* split_ptr = split ? &*split : nullptr;
  auto current = make_evaluator(counted, config, split_ptr);
  auto trial = make_evaluator(counted, config, split_ptr);
  const int max_cg = config.max_cg_iterations > 0 ? config.max_cg_iterations : static_cast<int>(std::max<Index>(n, 1));

  auto finish = [&](SolveStatus status, std::string message) {
    report.status = status;
    report.message = std::move(message);
    report.counters = counted->counters();
    if (current->refreshed()) {
      const PenaltyEvaluator& ev = *current;
      report.x = ev.x();
      report.phi = ev.value();
      report.objective = ev.objective_value();
      report.sigma = ev.sigma();
      if (split_ptr) {
        const auto& ex = static_cast<const ExplicitPenaltyEvaluator&>(ev);
        report.y = ex.full_multipliers();
        report.linear_residual = inf_norm(ex.linear_residual());
      } else {
        report.y = ev.multipliers();
      }
      try {
        report.z = ev.dual_estimate();
        const Measures m = measure(ev, bounds);
        report.primal_residual = m.primal;
        report.dual_residual = m.dual;
        report.combined_residual = m.combined;
      } catch (const InnerSolveError&) {
        // Residuals stay at their last values.
      }
      report.counters = counted->counters();
    }
    return report;
  };

  try {
    current->refresh(x);
  } catch (const InnerSolveError& e) {
    return finish(SolveStatus::linear_solver_failure, e.what());
  }

  const double c0 = inf_norm(current->constraint_values());
  const double gs0 = inf_norm(current->lagrangian_gradient());
  double phi0 = current->value();
  double delta = config.delta0;
  std::vector<double> accepted_infeas;

  auto raise_sigma = [&](const char* why) -> bool {
    const double next = std::min(current->sigma() * 10.0, config.sigma_max);
    if (next <= current->sigma()) return false;
    current->set_sigma(next);
    trial->set_sigma(next);
    current->refresh(x);
    phi0 = current->value();
    accepted_infeas.clear();
    ++report.sigma_updates;
    report.message = why;
    return true;
  };

  for (int it = 0;; ++it) {
    report.iterations = it;
    Measures m;
    Vector grad;
    try {
      grad = current->dual_estimate();
      m = measure(*current, bounds);
    } catch (const InnerSolveError& e) {
      return finish(SolveStatus::linear_solver_failure, e.what());
    }
    report.eps_p = config.epsilon * (1.0 + inf_norm(x) + c0);
    report.eps_d = config.epsilon * (1.0 + m.y_norm + gs0);
    if ((m.primal <= report.eps_p && m.dual <= report.eps_d) || m.combined <= report.eps_d) {
      return finish(SolveStatus::converged, "");
    }
    if (it >= config.max_iterations) {
      return finish(SolveStatus::iteration_limit, "iteration limit reached");
    }

    // Stagnating infeasibility at an approximately stationary point.
    if (config.sigma_update == SigmaUpdate::heuristic && accepted_infeas.size() > 10 &&
        m.primal > report.eps_p && m.combined <= std::sqrt(report.eps_d) &&
        m.primal > 0.5 * accepted_infeas[accepted_infeas.size() - 11]) {
      try {
        if (!raise_sigma("sigma increased after stagnation")) {
          return finish(SolveStatus::iteration_limit, "sigma reached its cap without progress");
        }
      } catch (const InnerSolveError& e) {
        return finish(SolveStatus::linear_solver_failure, e.what());
      }
      continue;
    }

    // Trust-region subproblem in the affine-scaled variables s = D s^.
    const AffineScaling as = affine_scaling(x, grad, bounds);
    const Vector ghat = as.D.cwiseProduct(grad);
    // Components at the distance floor that would move toward their bound
    // are pinned (s^_j = 0) in the subproblem, together with B^T D s^ = 0.
    auto toward_floor = [&](Index j, double dir) {
      return (dir < 0.0 && x[j] - bounds.lower[j] <= 2.0 * floor[j]) ||
             (dir > 0.0 && bounds.upper[j] - x[j] <= 2.0 * floor[j]);
    };
    std::vector<Index> pinned;
    for (Index j = 0; j < n; ++j) {
      if (toward_floor(j, -grad[j])) pinned.push_back(j);
    }
    std::optional<NullSpaceProjector> proj;
    auto rebuild = [&] {
      proj.reset();
      if (!split_ptr) return;
      const Index m2 = split_ptr->linear.size();
      Matrix E = Matrix::Zero(n, m2 + static_cast<Index>(pinned.size()));
      E.leftCols(m2) = as.D.asDiagonal() * split_ptr->linear.B;
      for (std::size_t k = 0; k < pinned.size(); ++k) E(pinned[k], m2 + static_cast<Index>(k)) = 1.0;
      try {
        proj.emplace(E);
      } catch (const RankDeficiencyError&) {
        proj.emplace(E.leftCols(m2));
      }
    };
    auto project = [&](const Vector& v) -> Vector {
      Vector w = v;
      for (Index j : pinned) w[j] = 0.0;
      return proj ? proj->project(w) : w;
    };
    auto Mhat = [&](const Vector& d) -> Vector {
      return as.D.cwiseProduct(current->hess_product(as.D.cwiseProduct(d))) + as.curvature.cwiseProduct(d);
    };

    CgResult cg;
    try {
      for (int pass = 0; pass < 3; ++pass) {
        rebuild();
        cg = steihaug(ghat, Mhat, project, delta, max_cg);
        bool grew = false;
        for (Index j = 0; j < n; ++j) {
          if (cg.s[j] != 0.0 && toward_floor(j, cg.s[j]) &&
              std::find(pinned.begin(), pinned.end(), j) == pinned.end()) {
            pinned.push_back(j);
            grew = true;
          }
        }
        if (!grew) break;
      }
    } catch (const InnerSolveError& e) {
      return finish(SolveStatus::linear_solver_failure, e.what());
    }
    // Fraction to the boundary along s = D s^.
    auto truncate = [&](const Vector& shat, double& theta) -> Vector {
      Vector step = as.D.cwiseProduct(shat);
      // Components already at the distance floor stop moving toward that bound.
      for (Index j = 0; j < n; ++j) {
        if ((step[j] < 0.0 && x[j] - bounds.lower[j] <= 2.0 * floor[j]) ||
            (step[j] > 0.0 && bounds.upper[j] - x[j] <= 2.0 * floor[j])) {
          step[j] = 0.0;
        }
      }
      theta = 1.0;
      const double amax = max_step(x, step, bounds, floor);
      if (std::isfinite(amax)) theta = std::min(1.0, config.tau_boundary * amax);
      while (!bounds.strictly_interior(x + theta * step) && theta > 1e-16) theta *= 0.5;
      return step;
    };
    double theta = 1.0;
    Vector shat = cg.s;
    Vector Mshat = cg.Ms;
    Vector s = truncate(shat, theta);
    double model = theta * ghat.dot(shat) + 0.5 * theta * theta * shat.dot(Mshat);
    auto consider = [&](const Vector& cand, const Vector& Mc) {
      double theta_c = 1.0;
      const Vector sc = truncate(cand, theta_c);
      const double model_c = theta_c * ghat.dot(cand) + 0.5 * theta_c * theta_c * cand.dot(Mc);
      if (model_c < model) {
        shat = cand;
        Mshat = Mc;
        s = sc;
        theta = theta_c;
        model = model_c;
      }
    };
    if (theta < 1.0) {
      // Alternatives: clip only the blocking components, or take the scaled
      // Cauchy step; keep whichever model value is lowest.
      Vector clipped = cg.s;
      for (Index j = 0; j < n; ++j) {
        const double sj = as.D[j] * cg.s[j];
        const double room = std::max((sj < 0.0 ? x[j] - bounds.lower[j] : bounds.upper[j] - x[j]) - floor[j], 0.0);
        if (std::abs(sj) > config.tau_boundary * room) {
          clipped[j] = std::copysign(config.tau_boundary * room / as.D[j], cg.s[j]);
        }
      }
      clipped = project(clipped);
      try {
        consider(clipped, project(Mhat(clipped)));
        const Vector d = -project(ghat);
        if (d.norm() > 0.0) {
          const Vector Md = project(Mhat(d));
          const double dMd = d.dot(Md);
          double t = delta / d.norm();
          if (dMd > 0.0) t = std::min(t, d.squaredNorm() / dMd);
          consider(t * d, t * Md);
        }
      } catch (const InnerSolveError& e) {
        return finish(SolveStatus::linear_solver_failure, e.what());
      }
    }
    const Vector x_new = x + theta * s;
    const double step_norm = theta * shat.norm();

    IterationRecord rec;
    rec.iteration = it;
    rec.delta = delta;
    rec.sigma = current->sigma();
    rec.cg_iterations = cg.iterations;
    rec.infeasibility = m.primal;

    bool accepted = false;
    double phi_new = std::numeric_limits<double>::quiet_NaN();
    if (step_norm > 0.0 && bounds.strictly_interior(x_new)) {
      try {
        trial->refresh(x_new);
        phi_new = trial->value();
      } catch (const InnerSolveError& e) {
        return finish(SolveStatus::linear_solver_failure, e.what());
      } catch (const RankDeficiencyError&) {
        phi_new = std::numeric_limits<double>::quiet_NaN();
      }
    }
    const double phi = current->value();
    if (std::isfinite(phi_new)) {
      const double noise = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(phi));
      const double rho = (phi - phi_new + noise) / (-model + noise);
      accepted = rho > 1e-4 && phi_new <= phi;
      if (!accepted || rho < 0.25) {
        delta = 0.25 * step_norm;
      } else if (rho > 0.75 && cg.hit_boundary && theta == 1.0) {
        delta = std::max(delta, 2.5 * step_norm);
      }
    } else {
      delta = 0.25 * std::max(step_norm, 1e-3 * delta);
    }

    if (accepted) {
      std::swap(current, trial);
      x = current->x();
      accepted_infeas.push_back(inf_norm(current->constraint_values()));
    }
    rec.accepted = accepted;
    rec.phi = current->value();
    report.history.push_back(rec);

    if (current->value() < config.unbounded_floor * (1.0 + std::abs(phi0))) {
      if (config.sigma_update == SigmaUpdate::heuristic) {
        try {
          if (raise_sigma("sigma increased after the penalty fell below the unbounded floor")) {
            delta = config.delta0;
            continue;
          }
        } catch (const InnerSolveError& e) {
          return finish(SolveStatus::linear_solver_failure, e.what());
        }
      }
      report.iterations = it + 1;
      return finish(SolveStatus::unbounded, "penalty function appears unbounded below");
    }
    if (!accepted && delta < 1e-15 * (1.0 + x.norm())) {
      report.iterations = it + 1;
      return finish(SolveStatus::iteration_limit, "trust region collapsed");
    }
  }
}

}  // namespace fletcher
