#pragma once

#include "fletcher/model.hpp"
#include "fletcher/scaling.hpp"

#include <memory>
#include <optional>

namespace fletcher {

enum class KernelForm { symmetric, unsymmetric };
enum class Backend { direct, iterative };
enum class Criterion { residual, error };

struct SolveSettings {
  double eta = 1e-10;
  Criterion criterion = Criterion::residual;
  /// Lower bound on sigma_min(Q^{1/2} C P^{-1/2}); overrides the preconditioner's own.
  std::optional<double> sigma_min_bound;
  int max_inner_iterations = 1000;
};

struct SolveStats {
  int iterations = 0;
  /// Direct: 2-norm of K s - rhs after refinement. Iterative: the preconditioned
  /// residual norm (residual mode) or the certified error bound (error mode).
  double residual = 0.0;
  /// Same norm as `residual` applied to the right-hand side (or to the iterate in error mode).
  double reference = 0.0;
  /// Direct only: residual before the refinement step.
  double residual_unrefined = 0.0;
};

struct AugSolution {
  Vector p;
  Vector q;
  SolveStats stats;
};

/// The constraint matrix C = [A(x) B] at a fixed point, as products or explicitly.
/// A products go through the problem (and are therefore counted when the
/// problem is a CountingProblem).
class ConstraintOperator {
 public:
  ConstraintOperator(ProblemPtr problem, Vector x, std::shared_ptr<const LinearBlock> linear = nullptr);

  Index n() const { return x_.size(); }
  Index m_nonlinear() const { return m1_; }
  Index m_linear() const { return linear_ ? linear_->size() : 0; }
  Index m() const { return m1_ + m_linear(); }

  Vector apply(const Vector& w) const;            // C w
  Vector apply_transpose(const Vector& v) const;  // C^T v
  /// Assembles C explicitly from the problem's Jacobian, if it has one.
  std::optional<SparseMatrix> assemble() const;

  const NlpProblem& problem() const { return *problem_; }
  const ProblemPtr& problem_ptr() const { return problem_; }
  const Vector& x() const { return x_; }
  const LinearBlock* linear() const { return linear_.get(); }

 private:
  ProblemPtr problem_;
  Vector x_;
  std::shared_ptr<const LinearBlock> linear_;
  Index m1_ = 0;
};

/// Solves the augmented systems
///
///   symmetric:     [ I          Q^{1/2} C ] [p]   [a]
///                  [ C^T Q^{1/2}    0     ] [q] = [b]
///
///   unsymmetric:   [ I      C ]              transposed: [ I   Q C ]
///                  [ C^T Q  0 ]                          [ C^T  0  ]
///
/// All three share the Schur complement N = C^T Q C, factorized once (direct)
/// or applied through products with a preconditioner (iterative).
class AugSystem {
 public:
  struct Options {
    KernelForm form = KernelForm::symmetric;
    Backend backend = Backend::direct;
    SolveSettings settings;
    /// Approximation of C^T Q C for the iterative backend; identity if absent.
    std::optional<Preconditioner> preconditioner;
  };

  /// Direct: one sparse QR of Q^{1/2} C (R kept, used through semi-normal
  /// equations). Throws RankDeficiencyError if Q^{1/2} C loses column rank and
  /// ConfigError if the problem cannot assemble its Jacobian.
  AugSystem(ConstraintOperator op, ScalingDiag scaling, Options options);
  ~AugSystem();
  AugSystem(AugSystem&&) noexcept;
  AugSystem& operator=(AugSystem&&) noexcept;

  /// Solves the assembled form. `transpose` selects the transposed unsymmetric
  /// system and is only meaningful for KernelForm::unsymmetric.
  AugSolution solve(const Vector& a, const Vector& b, bool transpose = false) const;

  const ConstraintOperator& op() const { return op_; }
  const ScalingDiag& scaling() const { return scaling_; }
  const Options& options() const { return options_; }
  KernelForm form() const { return options_.form; }
  /// Q^{1/2}.
  const Vector& sqrt_q() const { return sqrt_q_; }

  /// The full system matrix as a dense matrix (tests and diagnostics).
  Matrix dense_matrix(bool transpose = false) const;

 private:
  struct Factor;

  AugSolution solve_direct(const Vector& a, const Vector& b, const Vector& dl, const Vector& dr) const;
  AugSolution solve_iterative(const Vector& a, const Vector& b, const Vector& dl, const Vector& dr) const;

  ConstraintOperator op_;
  ScalingDiag scaling_;
  Options options_;
  Vector sqrt_q_;
  std::unique_ptr<Factor> factor_;
};

/// Exact preconditioner C^T Q C from an explicit C (sparse LDLT);
/// sigma_min_bound = 1.
std::optional<Preconditioner> exact_schur_preconditioner(const ConstraintOperator& op,
                                                         const ScalingDiag& scaling);

/// The preconditioner the iterative backend uses when none is given: the
/// problem's own when there is no linear block, else the exact Schur
/// complement if C can be assembled, else none (identity).
std::optional<Preconditioner> default_preconditioner(const ConstraintOperator& op,
                                                     const ScalingDiag& scaling);

}  // namespace fletcher
