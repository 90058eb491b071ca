#include "fletcher/counters.hpp"
#include "fletcher/model.hpp"
#include "fletcher/scaling.hpp"

#include "helpers.hpp"

#include <thread>

namespace fletcher {
namespace {

using testing::random_vector;
using testing::rel_diff;

TEST(Bounds, ValidateAndDistance) {
  Bounds b;
  b.lower = Vector::Zero(2);
  b.upper = Vector::Constant(2, kInf);
  EXPECT_NO_THROW(b.validate());
  Vector x(2);
  x << 0.5, 3.0;
  EXPECT_TRUE(b.strictly_interior(x));
  EXPECT_EQ(b.distance(x)[0], 0.5);
  b.upper[1] = 0.0;
  EXPECT_THROW(b.validate(), ConfigError);  // fixed variable
  b.upper.resize(3);
  EXPECT_THROW(b.validate(), ConfigError);
}

TEST(Params, ParseAndReject) {
  const ProblemParams p = parse_params({"n=12", "seed=3"});
  EXPECT_EQ(p.at("n"), "12");
  EXPECT_THROW(parse_params({"novalue"}), ConfigError);
  EXPECT_THROW(make_problem("randqp", {{"bogus", "1"}}), ConfigError);
  EXPECT_THROW(make_problem("randqp", {{"n", "abc"}}), ConfigError);
  EXPECT_THROW(make_problem("nope"), ConfigError);
}

TEST(Library, ShapesMatchTheCatalogue) {
  EXPECT_EQ(problem_names().size(), 6u);
  const ProblemPtr hs = make_problem("hs113");
  EXPECT_EQ(hs->num_variables(), 18);
  EXPECT_EQ(hs->num_constraints(), 8);
  EXPECT_EQ(hs->linear_constraints().size(), 3u);
  const ProblemPtr ip = make_problem("invpoisson-fd", {{"grid", "8"}});
  EXPECT_EQ(ip->num_variables(), 128);
  EXPECT_EQ(ip->num_constraints(), 64);
  const ProblemPtr toy = make_problem("toy1d-bounded");
  EXPECT_EQ(toy->bounds().lower[0], 0.0);
  EXPECT_EQ(toy->bounds().upper[0], kInf);
}

TEST(Library, RandqpIsDeterministicPerSeed) {
  const ProblemPtr a = make_problem("randqp", {{"seed", "7"}});
  const ProblemPtr b = make_problem("randqp", {{"seed", "7"}});
  const ProblemPtr c = make_problem("randqp", {{"seed", "8"}});
  const Vector x = a->initial_point();
  EXPECT_EQ(a->gradient(x), b->gradient(x));
  EXPECT_NE(a->gradient(x), c->gradient(x));
}

class LibraryProblems : public ::testing::TestWithParam<std::string> {};

TEST_P(LibraryProblems, DerivativesAreConsistent) {
  const ProblemPtr p = make_problem(GetParam());
  std::mt19937_64 rng(31);
  const Index n = p->num_variables(), m = p->num_constraints();
  const Vector x = p->initial_point();
  ASSERT_TRUE(p->bounds().strictly_interior(x));
  const Vector d = random_vector(n, rng);
  const double h = 1e-6;
  // gradient and Jacobian against central differences along d
  const double fd_f = (p->objective(x + h * d) - p->objective(x - h * d)) / (2 * h);
  EXPECT_NEAR(fd_f, p->gradient(x).dot(d), 1e-6 * std::max(1.0, std::abs(fd_f)));
  const Vector fd_c = (p->constraints(x + h * d) - p->constraints(x - h * d)) / (2 * h);
  EXPECT_LE(rel_diff(p->jacobian_transpose_product(x, d), fd_c), 1e-6);
  // adjointness of the Jacobian products
  const Vector w = random_vector(m, rng);
  EXPECT_NEAR(d.dot(p->jacobian_product(x, w)), w.dot(p->jacobian_transpose_product(x, d)),
              1e-10 * std::max(1.0, std::abs(d.dot(p->jacobian_product(x, w)))));
  // explicit Jacobian agrees with products
  if (auto J = p->jacobian(x)) EXPECT_LE((Matrix(*J) - dense_jacobian(*p, x)).norm(), 1e-12);
  // S(x,u)v against the FD fallback; u pairs with A^T so it has length n
  const Vector u = random_vector(n, rng);
  EXPECT_LE(rel_diff(p->second_jacobian_product(x, u, d), fd_second_jacobian_product(*p, x, u, d)), 1e-6);
  // Lagrangian Hessian against differences of g - A y
  const Vector y = random_vector(m, rng);
  auto lag = [&](const Vector& z) { Vector g = p->gradient(z); g -= p->jacobian_product(z, y); return g; };
  const Vector fd_h = (lag(x + h * d) - lag(x - h * d)) / (2 * h);
  EXPECT_LE(rel_diff(p->hessian_lagrangian_product(x, y, d), fd_h), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(All, LibraryProblems,
                         ::testing::Values("toy1d", "toy1d-bounded", "randqp", "hs113", "invpoisson-fd",
                                           "poisson-boltzmann-fd"),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (char& ch : s) if (ch == '-') ch = '_';
                           return s;
                         });

TEST(Library, InvPoissonScalingIsIdentityOnStateBlock) {
  const ProblemPtr p = make_problem("invpoisson-fd", {{"grid", "4"}});
  const Vector x = p->initial_point();
  const ScalingDiag s = build_scaling(x, p->bounds());
  const Index nu = p->num_constraints();
  EXPECT_EQ(s.q.head(nu), Vector::Ones(nu));
  EXPECT_EQ(s.q.tail(x.size() - nu), x.tail(x.size() - nu));
}

TEST(Split, LinearRowsBecomeBlock) {
  const ProblemPtr p = make_problem("hs113");
  const LinearSplit s = split_linear_constraints(p);
  EXPECT_EQ(s.linear.size(), 3);
  EXPECT_EQ(s.nonlinear->num_constraints(), 5);
  const Vector x = p->initial_point();
  const Vector c = p->constraints(x);
  const Vector lin = s.linear.B.transpose() * x - s.linear.d;
  for (std::size_t k = 0; k < s.linear_rows.size(); ++k) {
    EXPECT_NEAR(lin[static_cast<Index>(k)], c[s.linear_rows[k]], 1e-12);
  }
  const Vector cn = s.nonlinear->constraints(x);
  for (std::size_t k = 0; k < s.nonlinear_rows.size(); ++k) {
    EXPECT_EQ(cn[static_cast<Index>(k)], c[s.nonlinear_rows[k]]);
  }
}

TEST(Counters, CountEveryCallAcrossThreads) {
  const auto p = wrap_with_counters(make_problem("randqp"));
  const Vector x = p->initial_point();
  const Vector w = Vector::Ones(p->num_constraints());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&] {
      for (int k = 0; k < 50; ++k) {
        p->objective(x);
        p->jacobian_product(x, w);
        p->jacobian_transpose_product(x, x);
      }
    });
  }
  for (auto& th : pool) th.join();
  const EvalCounters c = p->counters();
  EXPECT_EQ(c.n_fg, 200);
  EXPECT_EQ(c.n_Av, 200);
  EXPECT_EQ(c.n_ATv, 200);
  EXPECT_EQ(c.n_Hv, 0);
  p->reset();
  EXPECT_EQ(p->counters(), EvalCounters{});
}

}  // namespace
}  // namespace fletcher
