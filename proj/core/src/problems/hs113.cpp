#include "problems.hpp"

#include <array>

namespace fletcher::problems {
namespace {

constexpr Index kNx = 10;  // original variables
constexpr Index kNs = 8;   // one slack per inequality

// Hock-Schittkowski problem 113. The eight inequalities g_i(x) >= 0 become
// g_i(x) - s_i = 0 with s_i >= 0; the original variables stay free. The first
// three inequalities are linear.
class Hs113 final : public NlpProblem {
 public:
  Hs113() : bounds_(Bounds::unbounded(kNx + kNs)) {
    bounds_.lower.tail(kNs).setZero();

    Hf_.setZero();
    Hf_(0, 0) = 2.0;
    Hf_(1, 1) = 2.0;
    Hf_(0, 1) = Hf_(1, 0) = 1.0;
    const double diag[] = {2.0, 8.0, 2.0, 4.0, 10.0, 14.0, 4.0, 2.0};
    for (Index j = 2; j < kNx; ++j) Hf_(j, j) = diag[j - 2];

    for (auto& H : Hc_) H.setZero();
    Hc_[3](0, 0) = -6.0;
    Hc_[3](1, 1) = -8.0;
    Hc_[3](2, 2) = -4.0;
    Hc_[4](0, 0) = -10.0;
    Hc_[4](2, 2) = -2.0;
    Hc_[5](0, 0) = -1.0;
    Hc_[5](1, 1) = -4.0;
    Hc_[5](4, 4) = -6.0;
    Hc_[6](0, 0) = -2.0;
    Hc_[6](1, 1) = -4.0;
    Hc_[6](0, 1) = Hc_[6](1, 0) = 2.0;
    Hc_[7](8, 8) = -24.0;
  }

  std::string name() const override { return "hs113"; }
  Index num_variables() const override { return kNx + kNs; }
  Index num_constraints() const override { return kNs; }
  const Bounds& bounds() const override { return bounds_; }

  Vector initial_point() const override {
    Vector x(kNx + kNs);
    x.head(kNx) << 2, 3, 5, 5, 1, 2, 7, 3, 6, 10;
    const Vector g = inequalities(x.head(kNx));
    x.tail(kNs) = g.cwiseMax(1.0);
    return x;
  }

  double objective(const Vector& v) const override {
    const auto x = v.head(kNx);
    auto sq = [](double t) { return t * t; };
    return sq(x[0]) + sq(x[1]) + x[0] * x[1] - 14 * x[0] - 16 * x[1] + sq(x[2] - 10) +
           4 * sq(x[3] - 5) + sq(x[4] - 3) + 2 * sq(x[5] - 1) + 5 * sq(x[6]) +
           7 * sq(x[7] - 11) + 2 * sq(x[8] - 10) + sq(x[9] - 7) + 45;
  }

  Vector gradient(const Vector& v) const override {
    const auto x = v.head(kNx);
    Vector g = Vector::Zero(kNx + kNs);
    g[0] = 2 * x[0] + x[1] - 14;
    g[1] = 2 * x[1] + x[0] - 16;
    g[2] = 2 * (x[2] - 10);
    g[3] = 8 * (x[3] - 5);
    g[4] = 2 * (x[4] - 3);
    g[5] = 4 * (x[5] - 1);
    g[6] = 10 * x[6];
    g[7] = 14 * (x[7] - 11);
    g[8] = 4 * (x[8] - 10);
    g[9] = 2 * (x[9] - 7);
    return g;
  }

  Vector constraints(const Vector& v) const override {
    return inequalities(v.head(kNx)) - v.tail(kNs);
  }

  Vector jacobian_product(const Vector& v, const Vector& w) const override {
    return jac(v) * w;
  }
  Vector jacobian_transpose_product(const Vector& v, const Vector& p) const override {
    return jac(v).transpose() * p;
  }

  Vector hessian_lagrangian_product(const Vector&, const Vector& y, const Vector& p) const override {
    Matrix H = Hf_;
    for (Index i = 0; i < kNs; ++i) H -= y[i] * Hc_[i];
    Vector out = Vector::Zero(kNx + kNs);
    out.head(kNx) = H * p.head(kNx);
    return out;
  }

  std::optional<SparseMatrix> jacobian(const Vector& v) const override {
    return Matrix(jac(v)).sparseView();
  }

  Vector second_jacobian_product(const Vector&, const Vector& u, const Vector& p) const override {
    Vector out(kNs);
    for (Index i = 0; i < kNs; ++i) out[i] = u.head(kNx).dot(Hc_[i] * p.head(kNx));
    return out;
  }
  bool has_exact_second_jacobian() const override { return true; }

  std::vector<Index> linear_constraints() const override { return {0, 1, 2}; }

 private:
  static Vector inequalities(const Eigen::Ref<const Vector>& x) {
    auto sq = [](double t) { return t * t; };
    Vector g(kNs);
    g[0] = 105 - 4 * x[0] - 5 * x[1] + 3 * x[6] - 9 * x[7];
    g[1] = -10 * x[0] + 8 * x[1] + 17 * x[6] - 2 * x[7];
    g[2] = 8 * x[0] - 2 * x[1] - 5 * x[8] + 2 * x[9] + 12;
    g[3] = -3 * sq(x[0] - 2) - 4 * sq(x[1] - 3) - 2 * sq(x[2]) + 7 * x[3] + 120;
    g[4] = -5 * sq(x[0]) - 8 * x[1] - sq(x[2] - 6) + 2 * x[3] + 40;
    g[5] = -0.5 * sq(x[0] - 8) - 2 * sq(x[1] - 4) - 3 * sq(x[4]) + x[5] + 30;
    g[6] = -sq(x[0]) - 2 * sq(x[1] - 2) + 2 * x[0] * x[1] - 14 * x[4] + 6 * x[5];
    g[7] = 3 * x[0] - 6 * x[1] - 12 * sq(x[8] - 8) + 7 * x[9];
    return g;
  }

  // n x m Jacobian; column i is grad g_i with -e_{slack i} appended.
  Matrix jac(const Vector& v) const {
    const auto x = v.head(kNx);
    Matrix A = Matrix::Zero(kNx + kNs, kNs);
    A(0, 0) = -4; A(1, 0) = -5; A(6, 0) = 3; A(7, 0) = -9;
    A(0, 1) = -10; A(1, 1) = 8; A(6, 1) = 17; A(7, 1) = -2;
    A(0, 2) = 8; A(1, 2) = -2; A(8, 2) = -5; A(9, 2) = 2;
    A(0, 3) = -6 * (x[0] - 2); A(1, 3) = -8 * (x[1] - 3); A(2, 3) = -4 * x[2]; A(3, 3) = 7;
    A(0, 4) = -10 * x[0]; A(1, 4) = -8; A(2, 4) = -2 * (x[2] - 6); A(3, 4) = 2;
    A(0, 5) = -(x[0] - 8); A(1, 5) = -4 * (x[1] - 4); A(4, 5) = -6 * x[4]; A(5, 5) = 1;
    A(0, 6) = -2 * x[0] + 2 * x[1]; A(1, 6) = -4 * (x[1] - 2) + 2 * x[0]; A(4, 6) = -14; A(5, 6) = 6;
    A(0, 7) = 3; A(1, 7) = -6; A(8, 7) = -24 * (x[8] - 8); A(9, 7) = 7;
    for (Index i = 0; i < kNs; ++i) A(kNx + i, i) = -1.0;
    return A;
  }

  Bounds bounds_;
  Eigen::Matrix<double, kNx, kNx> Hf_;
  std::array<Eigen::Matrix<double, kNx, kNx>, kNs> Hc_;
};

}  // namespace

ProblemPtr make_hs113(const ProblemParams& params) {
  ParamReader reader("hs113", params);
  reader.finish();
  return std::make_shared<const Hs113>();
}

}  // namespace fletcher::problems
