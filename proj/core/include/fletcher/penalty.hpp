#pragma once

#include "fletcher/augsys.hpp"
#include "fletcher/model.hpp"
#include "fletcher/scaling.hpp"

#include <memory>
#include <optional>

namespace fletcher {

enum class HessianMode { B1, B2 };
enum class PreconditionerChoice { automatic, exact, none };

struct PenaltyOptions {
  double sigma = 1.0;
  HessianMode hessian = HessianMode::B2;
  KernelForm form = KernelForm::symmetric;
  Backend backend = Backend::direct;
  SolveSettings solve;
  ScalingParams scaling;
  PreconditionerChoice preconditioner = PreconditionerChoice::automatic;
};

/// Fletcher's penalty function for bound-constrained problems,
///
///   phi(x) = f(x) - c(x)^T y(x),
///   [y; w] = argmin 1/2 ||C y~ - g||_Q^2 + sigma [c; B^T x - d]^T y~,   C = [A B],
///
/// evaluated at one point at a time. Linear constraints B^T x = d, when given,
/// are kept explicit: they enter the multiplier problem but are not penalized.
/// Without them (m2 = 0) this is the plain implicit penalty.
///
/// Every quantity at a point shares one AugSystem. Products go through the
/// problem, so a CountingProblem sees every evaluation.
class PenaltyEvaluator {
 public:
  PenaltyEvaluator(ProblemPtr problem, PenaltyOptions options,
                   std::shared_ptr<const LinearBlock> linear = nullptr);
  virtual ~PenaltyEvaluator();
  PenaltyEvaluator(PenaltyEvaluator&&) noexcept;
  PenaltyEvaluator& operator=(PenaltyEvaluator&&) noexcept;

  /// Evaluates f, g, c, Q, the multipliers and phi at x (one augmented solve).
  void refresh(const Vector& x);
  bool refreshed() const { return state_ != nullptr; }

  double sigma() const { return options_.sigma; }
  /// Changes sigma. The cached point must be refreshed again before use.
  void set_sigma(double sigma);
  HessianMode hessian_mode() const { return options_.hessian; }
  void set_hessian_mode(HessianMode mode) { options_.hessian = mode; }
  const PenaltyOptions& options() const { return options_; }

  const NlpProblem& problem() const { return *problem_; }
  const ProblemPtr& problem_ptr() const { return problem_; }
  const LinearBlock* linear() const { return linear_.get(); }
  Index n() const { return problem_->num_variables(); }
  Index m_nonlinear() const { return problem_->num_constraints(); }
  Index m_linear() const { return linear_ ? linear_->size() : 0; }

  const Vector& x() const;
  double value() const;                           // phi
  double objective_value() const;                 // f
  const Vector& objective_gradient() const;       // g
  const Vector& constraint_values() const;        // c (nonlinear rows)
  const Vector& multipliers() const;              // y
  const Vector& linear_multipliers() const;       // w (empty without a linear block)
  const Vector& lagrangian_gradient() const;      // g - A y - B w
  const Vector& partial_gradient() const;         // g - A y
  const ScalingDiag& scaling() const;
  const AugSystem& system() const;
  /// Stats of the refresh solve.
  const SolveStats& refresh_stats() const;

  /// grad phi = (g - A y) - Y c. Cached after the first call at a point.
  const Vector& gradient() const;

  /// Y u for u of length m1 and Y^T v (length m1).
  Vector y_product(const Vector& u) const;
  Vector yt_product(const Vector& v) const;
  /// [Y W] u~ for u~ of length m1 + m2, and [Y W]^T v.
  Vector yw_product(const Vector& u) const;
  Vector ywt_product(const Vector& v) const;

  /// (C^T Q C)^{-1} C^T v  (length m1 + m2).
  Vector pinv_product(const Vector& v) const;
  /// C (C^T Q C)^{-1} u~  (length n).
  Vector range_product(const Vector& u) const;

  /// Product with the configured Hessian approximation (or an explicit mode).
  Vector hess_product(const Vector& d) const { return hess_product(d, options_.hessian); }
  Vector hess_product(const Vector& d, HessianMode mode) const;

  /// H_sigma v = H_L(x, y) v.
  Vector lagrangian_hessian_product(const Vector& v) const;

  /// z = grad phi - B w. Equals grad phi without a linear block.
  Vector dual_estimate() const;

 private:
  struct State;
  const State& state() const;
  Vector c_product(const Vector& w) const;
  Vector ct_product(const Vector& v) const;
  Vector s_product(const Vector& v) const;          // S~ v, length m
  Vector st_product(const Vector& w) const;         // S~^T w
  // (Q H - sigma I + R) v given H v.
  Vector left_op(const Vector& v, const Vector& Hv) const;

  ProblemPtr problem_;
  PenaltyOptions options_;
  std::shared_ptr<const LinearBlock> linear_;
  std::unique_ptr<State> state_;
};

}  // namespace fletcher
