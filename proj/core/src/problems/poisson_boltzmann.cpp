#include "pde_grid.hpp"
#include "problems.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace fletcher::problems {
namespace {

// Poisson-Boltzmann control on an N x N interior grid:
//
//   minimize   h^2/2 ||u - u_d||^2 + alpha h^2/2 ||z||^2
//   subject to K0 u + h^2 sinh(u) - h^2 (f + z) = 0,   z >= 0,
//
// with K0 the unit-coefficient 5-point stiffness and u_d = 10 on
// [0.25, 0.75]^2, 5 elsewhere. Both u and z live on the interior nodes.
class PoissonBoltzmann final : public NlpProblem {
 public:
  PoissonBoltzmann(Index N, double alpha) : grid_(N), alpha_(alpha), f_(forcing(grid_)) {
    const auto edges = stencil_edges(grid_);
    K0_ = stiffness(grid_, edges, Vector::Ones(static_cast<Index>(edges.size())));
    const Index nu = grid_.nodes();
    bounds_ = Bounds::unbounded(2 * nu);
    bounds_.lower.tail(nu).setZero();
    u_target_.resize(nu);
    for (Index j = 0; j < N; ++j) {
      for (Index i = 0; i < N; ++i) {
        const double x1 = grid_.coord(i);
        const double x2 = grid_.coord(j);
        const bool inside = x1 >= 0.25 && x1 <= 0.75 && x2 >= 0.25 && x2 <= 0.75;
        u_target_[grid_.index(i, j)] = inside ? 10.0 : 5.0;
      }
    }
  }

  std::string name() const override { return "poisson-boltzmann-fd"; }
  Index num_variables() const override { return 2 * grid_.nodes(); }
  Index num_constraints() const override { return grid_.nodes(); }
  const Bounds& bounds() const override { return bounds_; }
  Vector initial_point() const override { return Vector::Ones(num_variables()); }

  double objective(const Vector& x) const override {
    return 0.5 * h2() * (u(x) - u_target_).squaredNorm() + 0.5 * alpha_ * h2() * z(x).squaredNorm();
  }
  Vector gradient(const Vector& x) const override {
    Vector g(num_variables());
    g.head(nu()) = h2() * (u(x) - u_target_);
    g.tail(nu()) = alpha_ * h2() * z(x);
    return g;
  }
  Vector constraints(const Vector& x) const override {
    return K0_ * u(x) + h2() * (u(x).array().sinh().matrix() - f_ - z(x));
  }

  Vector jacobian_product(const Vector& x, const Vector& w) const override {
    Vector out(num_variables());
    out.head(nu()) = K0_ * w + h2() * u(x).array().cosh().matrix().cwiseProduct(w);
    out.tail(nu()) = -h2() * w;
    return out;
  }
  Vector jacobian_transpose_product(const Vector& x, const Vector& v) const override {
    const auto vu = v.head(nu());
    return K0_ * vu + h2() * u(x).array().cosh().matrix().cwiseProduct(vu) - h2() * v.tail(nu());
  }
  Vector hessian_lagrangian_product(const Vector& x, const Vector& y, const Vector& v) const override {
    Vector out(num_variables());
    const Vector curv = Vector::Ones(nu()) - y.cwiseProduct(u(x).array().sinh().matrix());
    out.head(nu()) = h2() * curv.cwiseProduct(v.head(nu()));
    out.tail(nu()) = alpha_ * h2() * v.tail(nu());
    return out;
  }

  std::optional<SparseMatrix> jacobian(const Vector& x) const override {
    const SparseMatrix Ju = state_jacobian(x);
    std::vector<Triplet> trips;
    for (int k = 0; k < Ju.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(Ju, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    }
    for (Index i = 0; i < nu(); ++i) {
      trips.emplace_back(static_cast<int>(nu() + i), static_cast<int>(i), -h2());
    }
    SparseMatrix J(num_variables(), num_constraints());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
  }

  Vector second_jacobian_product(const Vector& x, const Vector& a, const Vector& v) const override {
    return h2() * u(x).array().sinh().matrix().cwiseProduct(a.head(nu())).cwiseProduct(v.head(nu()));
  }
  bool has_exact_second_jacobian() const override { return true; }

  std::optional<Preconditioner> preconditioner(const Vector& x) const override {
    // A^T Q A = Ju^2 + h^4 Z >= Ju^2, so sigma_min(Q^{1/2} A P^{-1/2}) >= 1.
    auto Ju = std::make_shared<SparseMatrix>(state_jacobian(x));
    auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(*Ju);
    if (ldlt->info() != Eigen::Success) return std::nullopt;
    Preconditioner pre;
    pre.name = "state-jacobian";
    pre.solve = [ldlt](const Vector& r) -> Vector { return ldlt->solve(Vector(ldlt->solve(r))); };
    pre.apply = [Ju](const Vector& q) -> Vector { return (*Ju) * ((*Ju) * q); };
    pre.sigma_min_bound = 1.0;
    return pre;
  }

 private:
  Index nu() const { return grid_.nodes(); }
  double h2() const { return grid_.h * grid_.h; }
  Eigen::VectorBlock<const Vector> u(const Vector& x) const { return x.head(nu()); }
  Eigen::VectorBlock<const Vector> z(const Vector& x) const { return x.tail(nu()); }

  SparseMatrix state_jacobian(const Vector& x) const {
    SparseMatrix D(nu(), nu());
    D.setIdentity();
    D.diagonal() = h2() * u(x).array().cosh().matrix();
    return K0_ + D;
  }

  Grid grid_;
  double alpha_;
  Vector f_;
  SparseMatrix K0_;
  Vector u_target_;
  Bounds bounds_;
};

}  // namespace

ProblemPtr make_poisson_boltzmann(const ProblemParams& params) {
  ParamReader reader("poisson-boltzmann-fd", params);
  const Index N = reader.get_int("grid", 16, 3);
  const double alpha = reader.get_double("alpha", 1e-4);
  reader.finish();
  if (!(alpha > 0.0)) throw ConfigError("poisson-boltzmann-fd: alpha must be positive");
  return std::make_shared<const PoissonBoltzmann>(N, alpha);
}

}  // namespace fletcher::problems
