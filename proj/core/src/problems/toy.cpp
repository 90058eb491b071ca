#include "problems.hpp"

namespace fletcher::problems {
namespace {

// minimize x^2/2 subject to x - 1 = 0 (optionally x >= 0).
class Toy1d final : public NlpProblem {
 public:
  Toy1d(bool bounded, double x0)
      : bounded_(bounded),
        bounds_(bounded ? Bounds::lower_only(Vector::Zero(1)) : Bounds::unbounded(1)),
        x0_(x0) {}

  std::string name() const override { return bounded_ ? "toy1d-bounded" : "toy1d"; }
  Index num_variables() const override { return 1; }
  Index num_constraints() const override { return 1; }
  const Bounds& bounds() const override { return bounds_; }
  Vector initial_point() const override { return Vector::Constant(1, x0_); }

  double objective(const Vector& x) const override { return 0.5 * x[0] * x[0]; }
  Vector gradient(const Vector& x) const override { return x; }
  Vector constraints(const Vector& x) const override { return Vector::Constant(1, x[0] - 1.0); }
  Vector jacobian_product(const Vector&, const Vector& w) const override { return w; }
  Vector jacobian_transpose_product(const Vector&, const Vector& v) const override { return v; }
  Vector hessian_lagrangian_product(const Vector&, const Vector&, const Vector& v) const override {
    return v;
  }
  std::optional<SparseMatrix> jacobian(const Vector&) const override {
    SparseMatrix J(1, 1);
    J.insert(0, 0) = 1.0;
    J.makeCompressed();
    return J;
  }
  Vector second_jacobian_product(const Vector&, const Vector&, const Vector&) const override {
    return Vector::Zero(1);
  }
  bool has_exact_second_jacobian() const override { return true; }
  std::optional<KktPoint> reference_solution() const override {
    return KktPoint{Vector::Ones(1), Vector::Ones(1), Vector::Zero(1)};
  }

 private:
  bool bounded_;
  Bounds bounds_;
  double x0_;
};

}  // namespace

ProblemPtr make_toy1d(const ProblemParams& params, bool bounded) {
  ParamReader reader(bounded ? "toy1d-bounded" : "toy1d", params);
  const double x0 = reader.get_double("x0", 5.0);
  reader.finish();
  if (bounded && !(x0 > 0.0)) throw ConfigError("toy1d-bounded: x0 must be > 0");
  return std::make_shared<const Toy1d>(bounded, x0);
}

}  // namespace fletcher::problems
