#pragma once

#include "fletcher/model.hpp"

#include <set>
#include <string>

namespace fletcher::problems {

// Typed access to key=value parameters. Unknown keys are reported by finish().
class ParamReader {
 public:
  ParamReader(std::string family, const ProblemParams& params)
      : family_(std::move(family)), params_(params) {}

  long get_int(const std::string& key, long fallback, long min_value);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  void finish() const;

 private:
  const std::string* lookup(const std::string& key);

  std::string family_;
  const ProblemParams& params_;
  std::set<std::string> used_;
};

ProblemPtr make_toy1d(const ProblemParams& params, bool bounded);
ProblemPtr make_randqp(const ProblemParams& params);
ProblemPtr make_hs113(const ProblemParams& params);
ProblemPtr make_invpoisson(const ProblemParams& params);
ProblemPtr make_poisson_boltzmann(const ProblemParams& params);

}  // namespace fletcher::problems
