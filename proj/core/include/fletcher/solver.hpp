#pragma once

#include "fletcher/counters.hpp"
#include "fletcher/penalty.hpp"

#include <string>
#include <vector>

namespace fletcher {

enum class SolveStatus { converged, unbounded, iteration_limit, linear_solver_failure };
enum class SigmaUpdate { off, heuristic };

std::string to_string(SolveStatus status);

struct SolverConfig {
  double sigma = 1.0;
  double epsilon = 1e-8;
  double eta = 1e-10;
  Criterion termination = Criterion::residual;
  HessianMode hessian = HessianMode::B2;
  Backend backend = Backend::direct;
  KernelForm form = KernelForm::symmetric;
  bool explicit_linear = false;
  double delta0 = 1.0;
  double tau_boundary = 0.995;
  int max_iterations = 500;
  /// 0 selects n.
  int max_cg_iterations = 0;
  int max_inner_iterations = 1000;
  double unbounded_floor = -1e12;
  SigmaUpdate sigma_update = SigmaUpdate::off;
  double sigma_max = 1e8;
  ScalingParams scaling;
  std::optional<double> sigma_min_bound;
  PreconditionerChoice preconditioner = PreconditionerChoice::automatic;
  /// Starting point; the problem's own if empty.
  Vector x0;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double phi = 0.0;
  double infeasibility = 0.0;  // ||c||_inf
  double delta = 0.0;
  double sigma = 0.0;
  int cg_iterations = 0;
  bool accepted = false;
};

struct SolveReport {
  SolveStatus status = SolveStatus::iteration_limit;
  std::string message;
  int iterations = 0;
  EvalCounters counters;

  Vector x;
  Vector y;  // multipliers in the problem's constraint order
  Vector z;  // bound multiplier estimate
  double phi = 0.0;
  double objective = 0.0;
  double sigma = 0.0;
  int sigma_updates = 0;

  double primal_residual = 0.0;    // ||c||_inf
  double dual_residual = 0.0;      // ||N g_sigma||_inf
  double combined_residual = 0.0;  // ||N z||_inf
  double eps_p = 0.0;
  double eps_d = 0.0;
  double linear_residual = 0.0;    // ||B^T x - d||_inf (explicit mode)

  std::vector<IterationRecord> history;

  bool converged() const { return status == SolveStatus::converged; }
};

/// Minimizes the penalty function subject to l <= x <= u (and B^T x = d in
/// explicit mode) by an interior affine-scaling trust-region Newton-CG method.
/// Counters in the report cover everything done inside the call.
SolveReport minimize(const ProblemPtr& problem, const SolverConfig& config);

/// Penalty options implied by a solver configuration.
PenaltyOptions penalty_options(const SolverConfig& config);

/// diag(min{x - l, u - x, 1}).
Vector stopping_scale(const Vector& x, const Bounds& bounds);

}  // namespace fletcher
