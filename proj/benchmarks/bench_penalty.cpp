#include "fletcher/penalty.hpp"
#include "fletcher/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace fletcher;

// Problem ids: 0 hs113, 1 invpoisson-fd, 2 poisson-boltzmann-fd. Grid from range(1).
ProblemPtr problem_for(const benchmark::State& state) {
  static const char* names[] = {"hs113", "invpoisson-fd", "poisson-boltzmann-fd"};
  const auto id = state.range(0);
  if (id == 0) return make_problem(names[0]);
  return make_problem(names[id], {{"grid", std::to_string(state.range(1))}});
}

PenaltyOptions options_for(const benchmark::State& state, const ProblemPtr& p) {
  PenaltyOptions o;
  o.sigma = p->name() == "hs113" ? 10.0 : 1e-2;
  o.backend = state.range(2) == 0 ? Backend::direct : Backend::iterative;
  o.solve.eta = 1e-8;
  return o;
}

void label(benchmark::State& state, const ProblemPtr& p) {
  state.SetLabel(p->name() + (state.range(2) == 0 ? "/direct" : "/iterative"));
}

void BM_Refresh(benchmark::State& state) {
  const ProblemPtr p = problem_for(state);
  PenaltyEvaluator ev(p, options_for(state, p));
  const Vector x = p->initial_point();
  for (auto _ : state) {
    ev.refresh(x);
    benchmark::DoNotOptimize(ev.value());
  }
  label(state, p);
}

void BM_Gradient(benchmark::State& state) {
  const ProblemPtr p = problem_for(state);
  PenaltyEvaluator ev(p, options_for(state, p));
  const Vector x = p->initial_point();
  for (auto _ : state) {
    ev.refresh(x);
    benchmark::DoNotOptimize(ev.gradient().data());
  }
  label(state, p);
}

template <HessianMode Mode>
void BM_HessProduct(benchmark::State& state) {
  const ProblemPtr p = problem_for(state);
  PenaltyEvaluator ev(p, options_for(state, p));
  ev.refresh(p->initial_point());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Vector d(p->num_variables());
  for (Index j = 0; j < d.size(); ++j) d[j] = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ev.hess_product(d, Mode).data());
  label(state, p);
}

void BM_Solve(benchmark::State& state) {
  const ProblemPtr p = problem_for(state);
  SolverConfig cfg;
  cfg.sigma = p->name() == "hs113" ? 10.0 : (p->name() == "invpoisson-fd" ? 1e-2 : 0.1);
  cfg.backend = state.range(2) == 0 ? Backend::direct : Backend::iterative;
  for (auto _ : state) {
    const SolveReport r = minimize(p, cfg);
    if (!r.converged()) state.SkipWithError(r.message.c_str());
    state.counters["its"] = r.iterations;
    state.counters["nAv"] = static_cast<double>(r.counters.n_Av);
  }
  label(state, p);
}

void cases(benchmark::internal::Benchmark* b) {
  for (int backend : {0, 1}) {
    b->Args({0, 0, backend});
    for (int grid : {16, 32}) {
      b->Args({1, grid, backend});
      b->Args({2, grid, backend});
    }
  }
  b->Unit(benchmark::kMicrosecond);
}

BENCHMARK(BM_Refresh)->Apply(cases);
BENCHMARK(BM_Gradient)->Apply(cases);
BENCHMARK(BM_HessProduct<HessianMode::B1>)->Apply(cases);
BENCHMARK(BM_HessProduct<HessianMode::B2>)->Apply(cases);
BENCHMARK(BM_Solve)->Args({0, 0, 0})->Args({1, 16, 0})->Args({1, 16, 1})->Args({2, 16, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
