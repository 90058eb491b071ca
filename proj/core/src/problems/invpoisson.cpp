#include "pde_grid.hpp"
#include "problems.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace fletcher::problems {
namespace {

// Inverse Poisson control on an N x N interior grid:
//
//   minimize   h^2/2 ||u - u_d||^2 + alpha h^2/2 ||z||^2
//   subject to K(z) u - h^2 f = 0,   z >= 0,
//
// where K(z) is the 5-point stiffness of -div(z grad u) with edge coefficients
// (z_a + z_b)/2, or z_a on edges to the boundary. Variables are x = (u, z),
// both at the interior nodes, so n = 2 N^2 and m = N^2.
class InvPoisson final : public NlpProblem {
 public:
  InvPoisson(Index N, double alpha)
      : grid_(N), edges_(stencil_edges(grid_)), alpha_(alpha), f_(forcing(grid_)) {
    const Index nu = grid_.nodes();
    bounds_ = Bounds::unbounded(2 * nu);
    bounds_.lower.tail(nu).setZero();

    // Target state from the coefficient 1 + 0.5 I_{S1} + 0.5 I_{S2}.
    Vector z_true(nu);
    for (Index j = 0; j < N; ++j) {
      for (Index i = 0; i < N; ++i) {
        const double dx = grid_.coord(i) - 0.2;
        const double dy = grid_.coord(j) - 0.2;
        const bool in_s1 = std::hypot(dx, dy) <= 0.3;
        const bool in_s2 = std::abs(dx) + std::abs(dy) <= 0.6;
        z_true[grid_.index(i, j)] = 1.0 + 0.5 * in_s1 + 0.5 * in_s2;
      }
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(stiffness(grid_, edges_, kappa(z_true)));
    u_target_ = ldlt.solve(grid_.h * grid_.h * f_);
  }

  std::string name() const override { return "invpoisson-fd"; }
  Index num_variables() const override { return 2 * grid_.nodes(); }
  Index num_constraints() const override { return grid_.nodes(); }
  const Bounds& bounds() const override { return bounds_; }
  Vector initial_point() const override { return Vector::Ones(num_variables()); }

  double objective(const Vector& x) const override {
    const double h2 = grid_.h * grid_.h;
    return 0.5 * h2 * (u(x) - u_target_).squaredNorm() + 0.5 * alpha_ * h2 * z(x).squaredNorm();
  }
  Vector gradient(const Vector& x) const override {
    const double h2 = grid_.h * grid_.h;
    Vector g(num_variables());
    g.head(nu()) = h2 * (u(x) - u_target_);
    g.tail(nu()) = alpha_ * h2 * z(x);
    return g;
  }
  Vector constraints(const Vector& x) const override {
    return stiffness(grid_, edges_, kappa(z(x))) * u(x) - grid_.h * grid_.h * f_;
  }

  Vector jacobian_product(const Vector& x, const Vector& w) const override {
    Vector out = Vector::Zero(num_variables());
    out.head(nu()) = stiffness(grid_, edges_, kappa(z(x))) * w;
    auto out_z = out.tail(nu());
    const Vector ux = u(x);
    for (const auto& e : edges_) scatter_kappa(e, d_dot(e, w) * d_dot(e, ux), out_z);
    return out;
  }

  Vector jacobian_transpose_product(const Vector& x, const Vector& v) const override {
    Vector out = stiffness(grid_, edges_, kappa(z(x))) * v.head(nu());
    const Vector ux = u(x);
    const auto vz = v.tail(nu());
    for (const auto& e : edges_) scatter_d(e, kappa_dot(e, vz) * d_dot(e, ux), out);
    return out;
  }

  Vector hessian_lagrangian_product(const Vector&, const Vector& y, const Vector& v) const override {
    const double h2 = grid_.h * grid_.h;
    Vector out(num_variables());
    out.head(nu()) = h2 * v.head(nu());
    out.tail(nu()) = alpha_ * h2 * v.tail(nu());
    // y^T c is bilinear in (u, z): only the mixed blocks are nonzero.
    auto out_u = out.head(nu());
    auto out_z = out.tail(nu());
    const auto vu = v.head(nu());
    const auto vz = v.tail(nu());
    for (const auto& e : edges_) {
      const double dy = d_dot(e, y);
      scatter_d(e, -kappa_dot(e, vz) * dy, out_u);
      scatter_kappa(e, -dy * d_dot(e, vu), out_z);
    }
    return out;
  }

  std::optional<SparseMatrix> jacobian(const Vector& x) const override {
    const SparseMatrix K = stiffness(grid_, edges_, kappa(z(x)));
    std::vector<Triplet> trips;
    for (int k = 0; k < K.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(K, k); it; ++it) {
        trips.emplace_back(it.row(), it.col(), it.value());
      }
    }
    const Vector ux = u(x);
    const auto n_u = static_cast<int>(nu());
    for (const auto& e : edges_) {
      const double du = d_dot(e, ux);
      auto add = [&](Index zq, double weight) {
        trips.emplace_back(n_u + static_cast<int>(zq), static_cast<int>(e.a), weight * du);
        if (e.b >= 0) trips.emplace_back(n_u + static_cast<int>(zq), static_cast<int>(e.b), -weight * du);
      };
      if (e.b >= 0) {
        add(e.a, 0.5);
        add(e.b, 0.5);
      } else {
        add(e.a, 1.0);
      }
    }
    SparseMatrix J(num_variables(), num_constraints());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
  }

  Vector second_jacobian_product(const Vector&, const Vector& a, const Vector& v) const override {
    Vector out = Vector::Zero(num_constraints());
    const auto au = a.head(nu());
    const auto az = a.tail(nu());
    const auto vu = v.head(nu());
    const auto vz = v.tail(nu());
    for (const auto& e : edges_) {
      scatter_d(e, kappa_dot(e, vz) * d_dot(e, au) + kappa_dot(e, az) * d_dot(e, vu), out);
    }
    return out;
  }
  bool has_exact_second_jacobian() const override { return true; }

  std::optional<Preconditioner> preconditioner(const Vector& x) const override {
    // P = A_u^T A_u with A_u = K(z); since Q = blkdiag(I, Z) the preconditioned
    // Schur complement is I + P^{-1} A_z^T Z A_z, hence sigma_min >= 1.
    auto K = std::make_shared<SparseMatrix>(stiffness(grid_, edges_, kappa(z(x))));
    auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(*K);
    if (ldlt->info() != Eigen::Success) return std::nullopt;
    Preconditioner pre;
    pre.name = "state-jacobian";
    pre.solve = [ldlt](const Vector& r) -> Vector { return ldlt->solve(Vector(ldlt->solve(r))); };
    pre.apply = [K](const Vector& q) -> Vector { return (*K) * ((*K) * q); };
    pre.sigma_min_bound = 1.0;
    return pre;
  }

  const Vector& target() const { return u_target_; }

 private:
  Index nu() const { return grid_.nodes(); }
  Eigen::VectorBlock<const Vector> u(const Vector& x) const { return x.head(nu()); }
  Eigen::VectorBlock<const Vector> z(const Vector& x) const { return x.tail(nu()); }

  Vector kappa(const Eigen::Ref<const Vector>& zv) const {
    Vector k(static_cast<Index>(edges_.size()));
    for (std::size_t e = 0; e < edges_.size(); ++e) k[static_cast<Index>(e)] = kappa_dot(edges_[e], zv);
    return k;
  }
  static double kappa_dot(const Edge& e, const Eigen::Ref<const Vector>& zv) {
    return e.b >= 0 ? 0.5 * (zv[e.a] + zv[e.b]) : zv[e.a];
  }
  template <class Out>
  static void scatter_kappa(const Edge& e, double value, Out&& out) {
    if (e.b >= 0) {
      out[e.a] += 0.5 * value;
      out[e.b] += 0.5 * value;
    } else {
      out[e.a] += value;
    }
  }
  static double d_dot(const Edge& e, const Eigen::Ref<const Vector>& v) {
    return e.b >= 0 ? v[e.a] - v[e.b] : v[e.a];
  }
  template <class Out>
  static void scatter_d(const Edge& e, double value, Out&& out) {
    out[e.a] += value;
    if (e.b >= 0) out[e.b] -= value;
  }

  Grid grid_;
  std::vector<Edge> edges_;
  double alpha_;
  Vector f_;
  Vector u_target_;
  Bounds bounds_;
};

}  // namespace

ProblemPtr make_invpoisson(const ProblemParams& params) {
  ParamReader reader("invpoisson-fd", params);
  const Index N = reader.get_int("grid", 16, 3);
  const double alpha = reader.get_double("alpha", 1e-4);
  reader.finish();
  if (!(alpha > 0.0)) throw ConfigError("invpoisson-fd: alpha must be positive");
  return std::make_shared<const InvPoisson>(N, alpha);
}

}  // namespace fletcher::problems
