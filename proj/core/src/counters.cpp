#include "fletcher/counters.hpp"

namespace fletcher {

CountingProblem::CountingProblem(ProblemPtr inner) : ForwardingProblem(std::move(inner)) {}

double CountingProblem::objective(const Vector& x) const {
  ++n_fg_;
  return inner_->objective(x);
}

Vector CountingProblem::gradient(const Vector& x) const {
  ++n_fg_;
  return inner_->gradient(x);
}

Vector CountingProblem::jacobian_product(const Vector& x, const Vector& w) const {
  ++n_Av_;
  return inner_->jacobian_product(x, w);
}

Vector CountingProblem::jacobian_transpose_product(const Vector& x, const Vector& v) const {
  ++n_ATv_;
  return inner_->jacobian_transpose_product(x, v);
}

Vector CountingProblem::hessian_lagrangian_product(const Vector& x, const Vector& y,
                                                   const Vector& v) const {
  ++n_Hv_;
  return inner_->hessian_lagrangian_product(x, y, v);
}

Vector CountingProblem::second_jacobian_product(const Vector& x, const Vector& u,
                                                const Vector& v) const {
  if (inner_->has_exact_second_jacobian()) {
    ++n_Hv_;
    return inner_->second_jacobian_product(x, u, v);
  }
  // The finite-difference fallback goes through our own (counted) A^T products.
  return fd_second_jacobian_product(*this, x, u, v);
}

EvalCounters CountingProblem::counters() const {
  return {n_fg_.load(), n_Hv_.load(), n_Av_.load(), n_ATv_.load()};
}

void CountingProblem::reset() const {
  n_fg_ = 0;
  n_Hv_ = 0;
  n_Av_ = 0;
  n_ATv_ = 0;
}

std::shared_ptr<const CountingProblem> wrap_with_counters(ProblemPtr problem) {
  return std::make_shared<const CountingProblem>(std::move(problem));
}

}  // namespace fletcher
