#pragma once

#include "fletcher/penalty.hpp"

namespace fletcher {

/// Orthogonal projector onto null(B^T), from a dense QR of B.
class NullSpaceProjector {
 public:
  NullSpaceProjector() = default;
  /// Throws RankDeficiencyError if B does not have full column rank.
  explicit NullSpaceProjector(const Matrix& B);

  Index size() const { return U_.rows(); }
  bool trivial() const { return U_.cols() == 0; }
  Vector project(const Vector& v) const;
  /// Minimum-norm dx with B^T dx = r.
  Vector min_norm_correction(const Vector& r) const;

 private:
  Matrix U_;  // orthonormal basis of range(B)
  Matrix R_;
};

/// Penalty evaluator for a problem whose linear constraints (as reported by
/// `linear_constraints()`) are kept explicit as B^T x = d and not penalized.
class ExplicitPenaltyEvaluator : public PenaltyEvaluator {
 public:
  ExplicitPenaltyEvaluator(ProblemPtr problem, PenaltyOptions options);
  ExplicitPenaltyEvaluator(LinearSplit split, PenaltyOptions options);

  const LinearSplit& split() const { return split_; }
  const ProblemPtr& full_problem() const { return full_; }

  /// y and w scattered back to the full problem's constraint order.
  Vector full_multipliers() const;
  /// B^T x - d at the cached point.
  Vector linear_residual() const;

 private:
  ExplicitPenaltyEvaluator(ProblemPtr full, LinearSplit split, PenaltyOptions options);

  ProblemPtr full_;
  LinearSplit split_;
};

}  // namespace fletcher
