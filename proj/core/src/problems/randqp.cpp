#include "problems.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fletcher::problems {
namespace {

// Seeded random QP built around a known KKT point (x*, y*, z*):
//
//   f(x) = x^T G x / 2 + h^T x,            G symmetric positive definite
//   c_i(x) = j_i^T x - b_i                 i < m_lin
//   c_i(x) = x^T P_i x / 2 + j_i^T x - b_i i >= m_lin   (optional, small P_i)
//
// b and h are chosen so that c(x*) = 0 and g(x*) - A(x*) y* - z* = 0, with
// z*_j > 0 exactly on the active lower bounds (strict complementarity).
class RandQp final : public NlpProblem {
 public:
  struct Data {
    Matrix G;
    Vector h;
    Matrix J;                 // n x m, linear parts of the constraint gradients
    Vector b;
    std::vector<Matrix> P;    // one per nonlinear constraint
    Index m_lin = 0;
    Bounds bounds;
    Vector x0;
    KktPoint solution;
  };

  explicit RandQp(Data data) : d_(std::move(data)) {}

  std::string name() const override { return "randqp"; }
  Index num_variables() const override { return d_.G.rows(); }
  Index num_constraints() const override { return d_.J.cols(); }
  const Bounds& bounds() const override { return d_.bounds; }
  Vector initial_point() const override { return d_.x0; }

  double objective(const Vector& x) const override { return 0.5 * x.dot(d_.G * x) + d_.h.dot(x); }
  Vector gradient(const Vector& x) const override { return d_.G * x + d_.h; }
  Vector constraints(const Vector& x) const override {
    Vector c = d_.J.transpose() * x - d_.b;
    for (std::size_t k = 0; k < d_.P.size(); ++k) {
      c[d_.m_lin + static_cast<Index>(k)] += 0.5 * x.dot(d_.P[k] * x);
    }
    return c;
  }
  Vector jacobian_product(const Vector& x, const Vector& w) const override {
    return jac(x) * w;
  }
  Vector jacobian_transpose_product(const Vector& x, const Vector& v) const override {
    return jac(x).transpose() * v;
  }
  Vector hessian_lagrangian_product(const Vector&, const Vector& y, const Vector& v) const override {
    Vector out = d_.G * v;
    for (std::size_t k = 0; k < d_.P.size(); ++k) {
      out -= y[d_.m_lin + static_cast<Index>(k)] * (d_.P[k] * v);
    }
    return out;
  }
  std::optional<SparseMatrix> jacobian(const Vector& x) const override {
    return jac(x).sparseView();
  }
  Vector second_jacobian_product(const Vector&, const Vector& u, const Vector& v) const override {
    Vector out = Vector::Zero(num_constraints());
    for (std::size_t k = 0; k < d_.P.size(); ++k) {
      out[d_.m_lin + static_cast<Index>(k)] = u.dot(d_.P[k] * v);
    }
    return out;
  }
  bool has_exact_second_jacobian() const override { return true; }
  std::vector<Index> linear_constraints() const override {
    std::vector<Index> rows(static_cast<std::size_t>(d_.m_lin));
    std::iota(rows.begin(), rows.end(), Index{0});
    return rows;
  }
  std::optional<KktPoint> reference_solution() const override { return d_.solution; }

 private:
  Matrix jac(const Vector& x) const {
    Matrix A = d_.J;
    for (std::size_t k = 0; k < d_.P.size(); ++k) {
      A.col(d_.m_lin + static_cast<Index>(k)) += d_.P[k] * x;
    }
    return A;
  }

  Data d_;
};

}  // namespace

ProblemPtr make_randqp(const ProblemParams& params) {
  ParamReader reader("randqp", params);
  const Index n = reader.get_int("n", 10, 1);
  const Index m_lin = reader.get_int("m", 4, 0);
  const Index m_nl = reader.get_int("mnl", 0, 0);
  const auto seed = static_cast<std::uint64_t>(reader.get_int("seed", 1, 0));
  const bool bounded = reader.get_bool("bounded", true);
  const Index n_active = bounded ? reader.get_int("nactive", 2, 0) : 0;
  reader.finish();

  const Index m = m_lin + m_nl;
  if (m > n) throw ConfigError("randqp: m + mnl must not exceed n");
  if (n - n_active < m) throw ConfigError("randqp: n - nactive must be at least m + mnl");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.5, 2.0);
  auto gaussian = [&](Index rows, Index cols) {
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) M(i, j) = normal(rng);
    return M;
  };

  RandQp::Data d;
  d.m_lin = m_lin;
  const Matrix L = gaussian(n, n);
  d.G = L * L.transpose() / static_cast<double>(n) + 0.5 * Matrix::Identity(n, n);
  d.J = gaussian(n, m);
  for (Index k = 0; k < m_nl; ++k) {
    const Matrix R = gaussian(n, n);
    d.P.push_back(0.05 * (R + R.transpose()));
  }

  Vector x_star(n), z_star = Vector::Zero(n);
  if (bounded) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    d.bounds = Bounds::lower_only(Vector::Zero(n));
    for (Index k = 0; k < n; ++k) {
      const Index j = order[static_cast<std::size_t>(k)];
      if (k < n_active) {
        x_star[j] = 0.0;
        z_star[j] = uniform(rng);
      } else {
        x_star[j] = uniform(rng);
        // Every other inactive variable also gets a finite upper bound so the
        // smoothing band of q is exercised.
        if (k % 2 == 1) d.bounds.upper[j] = 3.0;
      }
    }
    d.x0 = Vector::Ones(n);
  } else {
    d.bounds = Bounds::unbounded(n);
    for (Index j = 0; j < n; ++j) x_star[j] = normal(rng);
    d.x0 = Vector::Zero(n);
  }
  Vector y_star(m);
  for (Index i = 0; i < m; ++i) y_star[i] = normal(rng);

  d.b = d.J.transpose() * x_star;
  Matrix A_star = d.J;
  for (Index k = 0; k < m_nl; ++k) {
    d.b[m_lin + k] += 0.5 * x_star.dot(d.P[k] * x_star);
    A_star.col(m_lin + k) += d.P[k] * x_star;
  }
  d.h = A_star * y_star + z_star - d.G * x_star;
  d.solution = KktPoint{x_star, y_star, z_star};
  d.bounds.validate();
  return std::make_shared<const RandQp>(std::move(d));
}

}  // namespace fletcher::problems
