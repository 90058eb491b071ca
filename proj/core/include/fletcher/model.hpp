#pragma once

#include "fletcher/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fletcher {

/// Simple bounds l <= x <= u. Entries may be infinite; fixed variables are rejected.
struct Bounds {
  Vector lower;
  Vector upper;

  static Bounds unbounded(Index n);
  static Bounds lower_only(const Vector& lower);

  Index size() const { return lower.size(); }
  bool has_lower(Index j) const { return lower[j] > -kInf; }
  bool has_upper(Index j) const { return upper[j] < kInf; }

  /// Throws ConfigError unless sizes agree and lower_j < upper_j for all j.
  void validate() const;
  bool strictly_interior(const Vector& x) const;
  /// min{x - l, u - x} componentwise (may be +inf).
  Vector distance(const Vector& x) const;
};

/// A (primal, dual) point of the constrained problem.
struct KktPoint {
  Vector x;
  Vector y;
  Vector z;

  /// {j : min(x_j - l_j, u_j - x_j) <= tol}
  std::vector<Index> active_set(const Bounds& bounds, double tol = 0.0) const;
};

/// Approximation P of A^T Q A used by the iterative augmented solver.
/// `sigma_min_bound`, when present, is a certified lower bound on
/// sigma_min(Q^{1/2} A P^{-1/2}).
struct Preconditioner {
  std::string name;
  std::function<Vector(const Vector&)> solve;  // P^{-1} r
  std::function<Vector(const Vector&)> apply;  // P q
  std::optional<double> sigma_min_bound;
};

/// Evaluation contract for
///
///   minimize f(x)  subject to  c(x) = 0,  l <= x <= u.
///
/// The Jacobian A(x) is n-by-m with the constraint gradients as columns, so
/// `jacobian_product` returns A(x)w (length n) and `jacobian_transpose_product`
/// returns A(x)^T v (length m). The Lagrangian is L(x,y) = f(x) - y^T c(x).
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual std::string name() const = 0;
  virtual Index num_variables() const = 0;
  virtual Index num_constraints() const = 0;
  virtual const Bounds& bounds() const = 0;
  /// A strictly interior starting point.
  virtual Vector initial_point() const = 0;

  virtual double objective(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Vector constraints(const Vector& x) const = 0;
  virtual Vector jacobian_product(const Vector& x, const Vector& w) const = 0;
  virtual Vector jacobian_transpose_product(const Vector& x, const Vector& v) const = 0;
  /// H_L(x,y) v with H_L = grad^2 f - sum_i y_i grad^2 c_i.
  virtual Vector hessian_lagrangian_product(const Vector& x, const Vector& y,
                                            const Vector& v) const = 0;

  /// Explicit sparse n-by-m Jacobian, if the problem can assemble one.
  virtual std::optional<SparseMatrix> jacobian(const Vector& x) const;

  /// S(x,u)v: the m-vector with entries u^T grad^2 c_i(x) v. The default uses
  /// central differences of t -> A(x + t v)^T u.
  virtual Vector second_jacobian_product(const Vector& x, const Vector& u, const Vector& v) const;
  virtual bool has_exact_second_jacobian() const { return false; }

  /// Indices of constraints that are linear in x (may be kept explicit).
  virtual std::vector<Index> linear_constraints() const { return {}; }

  /// Problem-specific preconditioner for A^T Q A at x, if any.
  virtual std::optional<Preconditioner> preconditioner(const Vector& x) const;

  /// Known KKT point, when the problem is constructed around one.
  virtual std::optional<KktPoint> reference_solution() const { return std::nullopt; }
};

using ProblemPtr = std::shared_ptr<const NlpProblem>;

/// Central-difference S(x,u)v through `problem.jacobian_transpose_product`.
Vector fd_second_jacobian_product(const NlpProblem& problem, const Vector& x, const Vector& u,
                                  const Vector& v);

/// Assembles A(x) column by column through products (dense fallback).
Matrix dense_jacobian(const NlpProblem& problem, const Vector& x);
/// Assembles H_L(x,y) through n Hessian products.
Matrix dense_hessian_lagrangian(const NlpProblem& problem, const Vector& x, const Vector& y);

/// Forwards every call to a wrapped problem. Base for decorators.
class ForwardingProblem : public NlpProblem {
 public:
  explicit ForwardingProblem(ProblemPtr inner);

  std::string name() const override { return inner_->name(); }
  Index num_variables() const override { return inner_->num_variables(); }
  Index num_constraints() const override { return inner_->num_constraints(); }
  const Bounds& bounds() const override { return inner_->bounds(); }
  Vector initial_point() const override { return inner_->initial_point(); }
  double objective(const Vector& x) const override { return inner_->objective(x); }
  Vector gradient(const Vector& x) const override { return inner_->gradient(x); }
  Vector constraints(const Vector& x) const override { return inner_->constraints(x); }
  Vector jacobian_product(const Vector& x, const Vector& w) const override {
    return inner_->jacobian_product(x, w);
  }
  Vector jacobian_transpose_product(const Vector& x, const Vector& v) const override {
    return inner_->jacobian_transpose_product(x, v);
  }
  Vector hessian_lagrangian_product(const Vector& x, const Vector& y,
                                    const Vector& v) const override {
    return inner_->hessian_lagrangian_product(x, y, v);
  }
  std::optional<SparseMatrix> jacobian(const Vector& x) const override { return inner_->jacobian(x); }
  Vector second_jacobian_product(const Vector& x, const Vector& u, const Vector& v) const override {
    return inner_->second_jacobian_product(x, u, v);
  }
  bool has_exact_second_jacobian() const override { return inner_->has_exact_second_jacobian(); }
  std::vector<Index> linear_constraints() const override { return inner_->linear_constraints(); }
  std::optional<Preconditioner> preconditioner(const Vector& x) const override {
    return inner_->preconditioner(x);
  }
  std::optional<KktPoint> reference_solution() const override { return inner_->reference_solution(); }

  const ProblemPtr& inner() const { return inner_; }

 protected:
  ProblemPtr inner_;
};

/// The explicit linear block B^T x = d (B is n-by-m2).
struct LinearBlock {
  Matrix B;
  Vector d;
  Index size() const { return B.cols(); }
};

/// A problem split into its nonlinear constraints (as an NlpProblem) and
/// the linear ones gathered into B^T x = d.
struct LinearSplit {
  ProblemPtr nonlinear;
  LinearBlock linear;
  std::vector<Index> nonlinear_rows;
  std::vector<Index> linear_rows;
};

/// Splits off the constraints reported by `linear_constraints()`.
LinearSplit split_linear_constraints(const ProblemPtr& problem);

/// key=value parameters for the problem library.
using ProblemParams = std::map<std::string, std::string>;

/// Parses "key=value" strings; throws ConfigError on malformed input.
ProblemParams parse_params(const std::vector<std::string>& items);

/// Names accepted by make_problem.
std::vector<std::string> problem_names();

/// Builds a library problem: toy1d, toy1d-bounded, randqp, hs113,
/// invpoisson-fd, poisson-boltzmann-fd. Throws ConfigError on unknown names
/// or invalid parameters.
ProblemPtr make_problem(const std::string& name, const ProblemParams& params = {});

}  // namespace fletcher
