#pragma once

#include "fletcher/model.hpp"

#include <gtest/gtest.h>

#include <random>

namespace fletcher::testing {

// f = x'Gx/2 + h'x, c = J'x - b, all constraints linear.
class LinearQp final : public NlpProblem {
 public:
  LinearQp(Matrix G, Vector h, Matrix J, Vector b, Bounds bounds, Vector x0)
      : G_(std::move(G)), h_(std::move(h)), J_(std::move(J)), b_(std::move(b)),
        bounds_(std::move(bounds)), x0_(std::move(x0)) {}

  std::string name() const override { return "linear-qp"; }
  Index num_variables() const override { return G_.rows(); }
  Index num_constraints() const override { return J_.cols(); }
  const Bounds& bounds() const override { return bounds_; }
  Vector initial_point() const override { return x0_; }
  double objective(const Vector& x) const override { return 0.5 * x.dot(G_ * x) + h_.dot(x); }
  Vector gradient(const Vector& x) const override { return G_ * x + h_; }
  Vector constraints(const Vector& x) const override { return J_.transpose() * x - b_; }
  Vector jacobian_product(const Vector&, const Vector& w) const override { return J_ * w; }
  Vector jacobian_transpose_product(const Vector&, const Vector& v) const override {
    return J_.transpose() * v;
  }
  Vector hessian_lagrangian_product(const Vector&, const Vector&, const Vector& v) const override {
    return G_ * v;
  }
  std::optional<SparseMatrix> jacobian(const Vector&) const override { return J_.sparseView(); }
  Vector second_jacobian_product(const Vector&, const Vector&, const Vector&) const override {
    return Vector::Zero(J_.cols());
  }
  bool has_exact_second_jacobian() const override { return true; }
  std::vector<Index> linear_constraints() const override {
    std::vector<Index> rows;
    for (Index i = 0; i < J_.cols(); ++i) rows.push_back(i);
    return rows;
  }

 private:
  Matrix G_;
  Vector h_;
  Matrix J_;
  Vector b_;
  Bounds bounds_;
  Vector x0_;
};

inline Vector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index j = 0; j < n; ++j) v[j] = normal(rng);
  return v;
}

inline double rel_diff(const Vector& a, const Vector& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace fletcher::testing
