#pragma once

#include "fletcher/model.hpp"

#include <atomic>
#include <memory>

namespace fletcher {

/// Snapshot of operator counts.
struct EvalCounters {
  long n_fg = 0;   // objective or gradient evaluations
  long n_Hv = 0;   // Lagrangian-Hessian products (exact second-Jacobian products count here too)
  long n_Av = 0;   // A(x)w products
  long n_ATv = 0;  // A(x)^T v products

  EvalCounters operator-(const EvalCounters& o) const {
    return {n_fg - o.n_fg, n_Hv - o.n_Hv, n_Av - o.n_Av, n_ATv - o.n_ATv};
  }
  bool operator==(const EvalCounters&) const = default;
};

/// Decorator that counts evaluations. Results are those of the wrapped problem.
///
/// Counters are atomics, so concurrent evaluations through one instance are
/// safe; snapshots taken while evaluations are in flight are not consistent
/// across fields.
class CountingProblem final : public ForwardingProblem {
 public:
  explicit CountingProblem(ProblemPtr inner);

  double objective(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector jacobian_product(const Vector& x, const Vector& w) const override;
  Vector jacobian_transpose_product(const Vector& x, const Vector& v) const override;
  Vector hessian_lagrangian_product(const Vector& x, const Vector& y,
                                    const Vector& v) const override;
  Vector second_jacobian_product(const Vector& x, const Vector& u, const Vector& v) const override;

  EvalCounters counters() const;
  void reset() const;

 private:
  mutable std::atomic<long> n_fg_{0};
  mutable std::atomic<long> n_Hv_{0};
  mutable std::atomic<long> n_Av_{0};
  mutable std::atomic<long> n_ATv_{0};
};

std::shared_ptr<const CountingProblem> wrap_with_counters(ProblemPtr problem);

}  // namespace fletcher
