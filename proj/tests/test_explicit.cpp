#include "fletcher/diagnostics.hpp"
#include "fletcher/explicit_penalty.hpp"

#include "helpers.hpp"

namespace fletcher {
namespace {

using testing::random_vector;
using testing::rel_diff;

PenaltyOptions with_sigma(double sigma) {
  PenaltyOptions o;
  o.sigma = sigma;
  return o;
}

TEST(NullSpaceProjector, ProjectsAndCorrects) {
  std::mt19937_64 rng(1);
  const Matrix B = Matrix::Random(7, 3);
  const NullSpaceProjector P(B);
  const Vector v = random_vector(7, rng);
  const Vector pv = P.project(v);
  EXPECT_LE((B.transpose() * pv).norm(), 1e-13);
  EXPECT_LE((P.project(pv) - pv).norm(), 1e-13);
  const Vector r = random_vector(3, rng);
  const Vector dx = P.min_norm_correction(r);
  EXPECT_LE((B.transpose() * dx - r).norm(), 1e-12);
  EXPECT_LE(P.project(dx).norm(), 1e-12);  // minimum norm means no null-space part
}

TEST(NullSpaceProjector, RejectsDependentColumns) {
  Matrix B(3, 2);
  B << 1, 2, 1, 2, 0, 0;
  EXPECT_THROW(NullSpaceProjector{B}, RankDeficiencyError);
}

TEST(Explicit, NoLinearBlockReducesToImplicit) {
  const ProblemPtr p = make_problem("toy1d");
  ExplicitPenaltyEvaluator ex(p, with_sigma(0.8));
  PenaltyEvaluator im(p, with_sigma(0.8));
  const Vector x = Vector::Constant(1, 2.5);
  ex.refresh(x);
  im.refresh(x);
  EXPECT_EQ(ex.m_linear(), 0);
  EXPECT_NEAR(ex.value(), im.value(), 1e-12);
  EXPECT_LE(rel_diff(ex.gradient(), im.gradient()), 1e-12);
  EXPECT_LE(rel_diff(ex.y_product(Vector::Ones(1)), im.y_product(Vector::Ones(1))), 1e-12);
  EXPECT_LE(rel_diff(ex.hess_product(Vector::Ones(1)), im.hess_product(Vector::Ones(1))), 1e-12);
}

TEST(Explicit, AllLinearProblemIsTheObjective) {
  const ProblemPtr p = make_problem("randqp");
  ASSERT_EQ(p->linear_constraints().size(), static_cast<std::size_t>(p->num_constraints()));
  for (double sigma : {0.0, 1.0, 100.0}) {
    ExplicitPenaltyEvaluator ex(p, with_sigma(sigma));
    const Vector x = p->initial_point();
    ex.refresh(x);
    EXPECT_EQ(ex.m_nonlinear(), 0);
    EXPECT_NEAR(ex.value(), p->objective(x), 1e-12 * std::max(1.0, std::abs(p->objective(x))));
    EXPECT_LE(rel_diff(ex.gradient(), p->gradient(x)), 1e-12);
  }
}

TEST(Explicit, GradientMatchesFiniteDifferencesOnHs113) {
  const ProblemPtr p = make_problem("hs113");
  std::mt19937_64 rng(9);
  ExplicitPenaltyEvaluator ex(p, with_sigma(5.0)), probe(p, with_sigma(5.0));
  const Vector x = p->initial_point();
  ex.refresh(x);
  const Vector dist = p->bounds().distance(x);
  Vector fd(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    const double h = std::min(1e-6 * std::max(1.0, std::abs(x[j])), 0.5 * dist[j]);
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    probe.refresh(xp);
    const double fp = probe.value();
    probe.refresh(xm);
    fd[j] = (fp - probe.value()) / (2.0 * h);
  }
  EXPECT_LE(rel_diff(ex.gradient(), fd), 1e-6);
}

TEST(Explicit, ProductsAgreeWithDenseOracle) {
  const ProblemPtr p = make_problem("randqp", {{"mnl", "2"}, {"m", "2"}});
  std::mt19937_64 rng(12);
  ExplicitPenaltyEvaluator ex(p, with_sigma(1.3));
  const Vector x = p->initial_point();
  ex.refresh(x);
  const DenseOracles o = dense_oracles(*ex.split().nonlinear, x, 1.3, &ex.split().linear);
  EXPECT_LE(rel_diff(ex.multipliers(), o.y), 1e-10);
  EXPECT_LE(rel_diff(ex.linear_multipliers(), o.w), 1e-10);
  EXPECT_LE(rel_diff(ex.gradient(), o.gradient), 1e-10);
  const Index n = ex.n(), m = ex.m_nonlinear() + ex.m_linear();
  const Vector u = random_vector(m, rng), v = random_vector(n, rng);
  EXPECT_LE(rel_diff(ex.yw_product(u), Vector(o.YW * u)), 1e-10);
  const double a = v.dot(ex.yw_product(u)), b = u.dot(ex.ywt_product(v));
  EXPECT_LE(std::abs(a - b) / std::max(1.0, std::abs(a)), 1e-9);
  EXPECT_LE(rel_diff(ex.hess_product(v, HessianMode::B1), Vector(o.B1 * v)), 1e-10);
  EXPECT_LE(rel_diff(ex.hess_product(v, HessianMode::B2), Vector(o.B2 * v)), 1e-10);
}

TEST(Explicit, PseudoinverseRoundTrip) {
  const ProblemPtr p = make_problem("randqp", {{"mnl", "2"}, {"m", "2"}});
  std::mt19937_64 rng(21);
  ExplicitPenaltyEvaluator ex(p, with_sigma(1.0));
  const Vector x = p->initial_point();
  ex.refresh(x);
  const DenseOracles o = dense_oracles(*ex.split().nonlinear, x, 1.0, &ex.split().linear);
  const Matrix& C = o.C;
  const Vector q = o.scaling.q;
  const Vector z = random_vector(C.cols(), rng);
  const Vector u = C.transpose() * q.asDiagonal() * C * z;
  EXPECT_LE(rel_diff(ex.range_product(u), Vector(C * z)), 1e-10);
  // (C'QC)^{-1} C' applied to QCz gives z back
  EXPECT_LE(rel_diff(ex.pinv_product(q.asDiagonal() * (C * z)), z), 1e-10);
}

TEST(Explicit, FeasibleMultipliersIndependentOfSigma) {
  const ProblemPtr p = make_problem("randqp", {{"bounded", "false"}, {"mnl", "1"}});
  const Vector x = p->reference_solution()->x;
  ExplicitPenaltyEvaluator a(p, with_sigma(0.1)), b(p, with_sigma(20.0));
  a.refresh(x);
  b.refresh(x);
  EXPECT_LE(rel_diff(a.full_multipliers(), b.full_multipliers()), 1e-10);
  EXPECT_LE(rel_diff(a.full_multipliers(), p->reference_solution()->y), 1e-8);
  EXPECT_LE(a.linear_residual().lpNorm<Eigen::Infinity>(), 1e-12);
}

}  // namespace
}  // namespace fletcher
