#pragma once

#include "fletcher/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fletcher::tools {

struct SuiteResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_error <= tolerance; }
};

struct CheckOptions {
  int points = 20;
  unsigned seed = 1;
  double sigma = 1.0;
  /// Also compare B1, B2 against a finite-difference Hessian at a solution.
  bool at_solution = true;
  double solution_sigma = 0.0;  // 0 picks a problem-specific value
};

struct CheckReport {
  std::string problem;
  std::vector<SuiteResult> suites;
  bool passed() const;
};

/// Derivative, adjoint and oracle-equivalence suites at random interior points.
CheckReport run_checks(const ProblemPtr& problem, const CheckOptions& options);

/// Strictly interior random point near the problem's start.
Vector random_interior_point(const NlpProblem& problem, std::uint64_t seed);

}  // namespace fletcher::tools
