#include "fletcher/solver.hpp"

#include "helpers.hpp"

namespace fletcher {
namespace {

SolveReport run(const std::string& name, double sigma, SolverConfig cfg = {}, const ProblemParams& params = {}) {
  cfg.sigma = sigma;
  return minimize(make_problem(name, params), cfg);
}

void expect_stopping_test(const SolveReport& r) {
  ASSERT_TRUE(r.converged()) << r.message;
  EXPECT_LE(r.primal_residual, r.eps_p);
  EXPECT_TRUE(r.dual_residual <= r.eps_d || r.combined_residual <= r.eps_d);
}

TEST(Solver, Toy1dConvergesAboveThreshold) {
  const SolveReport r = run("toy1d", 1.0);
  expect_stopping_test(r);
  EXPECT_LE(std::abs(r.x[0] - 1.0), 1e-8);
  EXPECT_NEAR(r.y[0], 1.0, 1e-8);
  EXPECT_GT(r.counters.n_fg, 0);
}

TEST(Solver, Toy1dUnboundedBelowThreshold) {
  const SolveReport r = run("toy1d", 0.25);
  EXPECT_EQ(r.status, SolveStatus::unbounded);
  EXPECT_EQ(to_string(r.status), "unbounded");
}

TEST(Solver, SigmaHeuristicRecoversFromSmallSigma) {
  SolverConfig cfg;
  cfg.sigma_update = SigmaUpdate::heuristic;
  const SolveReport r = run("toy1d", 0.25, cfg);
  ASSERT_TRUE(r.converged()) << r.message;
  EXPECT_GT(r.sigma, 0.5);
  EXPECT_GE(r.sigma_updates, 1);
  EXPECT_LE(std::abs(r.x[0] - 1.0), 1e-8);
}

TEST(Solver, ConstantSigmaNeverChanges) {
  const SolveReport r = run("hs113", 10.0);
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.sigma, 10.0);
  EXPECT_EQ(r.sigma_updates, 0);
  for (const IterationRecord& rec : r.history) EXPECT_EQ(rec.sigma, 10.0);
}

// With q = x the penalty is -x^2/2 + x + sigma (x - 1)^2 / x, unbounded as x grows,
// so the uncapped run starts inside the basin of x* = 1.
TEST(Solver, BoundedToyHasInactiveBound) {
  const SolveReport r = run("toy1d-bounded", 1.0, {}, {{"x0", "1.3"}});
  expect_stopping_test(r);
  EXPECT_NEAR(r.x[0], 1.0, 1e-8);
  EXPECT_LE(std::abs(r.z[0]), 1e-7);

  SolverConfig capped;
  capped.scaling.capped = true;
  const SolveReport c = run("toy1d-bounded", 1.0, capped);
  expect_stopping_test(c);
  EXPECT_NEAR(c.x[0], 1.0, 1e-8);
}

TEST(Solver, BoundedToyUncappedRunsAwayFromFarStart) {
  EXPECT_EQ(run("toy1d-bounded", 1.0, {}, {{"x0", "5"}}).status, SolveStatus::unbounded);
}

TEST(Solver, AcceptedStepsDecreasePhiAndStayInterior) {
  for (const std::string name : {"hs113", "randqp"}) {
    const double sigma = name == "hs113" ? 10.0 : 5.0;
    const SolveReport r = run(name, sigma);
    ASSERT_TRUE(r.converged()) << name << ": " << r.message;
    double last = kInf;
    for (const IterationRecord& rec : r.history) {
      if (rec.iteration > 0 && rec.accepted) EXPECT_LE(rec.phi, last + 1e-12 * std::abs(last)) << name;
      if (rec.accepted || rec.iteration == 0) last = rec.phi;
    }
    EXPECT_TRUE(make_problem(name)->bounds().strictly_interior(r.x)) << name;
  }
}

TEST(Solver, ExplicitModeKeepsLinearConstraints) {
  SolverConfig cfg;
  cfg.explicit_linear = true;
  for (double sigma : {7.0, 20.0}) {
    const SolveReport r = run("hs113", sigma, cfg);
    expect_stopping_test(r);
    EXPECT_LE(r.linear_residual, 1e-10);
  }
}

TEST(Solver, Hs113ImplicitFailsWellBelowThreshold) {
  const SolveReport r = run("hs113", 3.0);
  EXPECT_FALSE(r.converged());
}

TEST(Solver, Hs113KktAtSolution) {
  const SolveReport r = run("hs113", 10.0);
  expect_stopping_test(r);
  EXPECT_NEAR(r.objective, 24.3062091, 1e-5);
  // slacks are the last 8 variables; bound multipliers on active slacks are nonnegative
  for (Index j = 10; j < 18; ++j) EXPECT_GE(r.z[j], -1e-6);
}

TEST(Solver, BothHessiansConverge) {
  for (HessianMode h : {HessianMode::B1, HessianMode::B2}) {
    SolverConfig cfg;
    cfg.hessian = h;
    expect_stopping_test(run("hs113", 10.0, cfg));
  }
}

TEST(Solver, InvPoissonConverges) {
  SolverConfig cfg;
  cfg.backend = Backend::iterative;
  const SolveReport r = run("invpoisson-fd", 1e-2, cfg);
  expect_stopping_test(r);
  EXPECT_GT(r.counters.n_Av, 0);
  EXPECT_GT(r.counters.n_ATv, 0);
}

TEST(Solver, ConfigValidation) {
  SolverConfig cfg;
  cfg.tau_boundary = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epsilon = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.x0 = Vector::Constant(1, -1.0);
  EXPECT_THROW(minimize(make_problem("toy1d-bounded"), cfg), Error);
}

TEST(Solver, StoppingScale) {
  Bounds b;
  b.lower = Vector::Zero(3);
  b.upper = Vector(3);
  b.upper << 4.0, kInf, 0.5;
  Vector x(3);
  x << 0.25, 9.0, 0.4;
  const Vector n = stopping_scale(x, b);
  EXPECT_DOUBLE_EQ(n[0], 0.25);
  EXPECT_DOUBLE_EQ(n[1], 1.0);
  EXPECT_NEAR(n[2], 0.1, 1e-15);
}

}  // namespace
}  // namespace fletcher
