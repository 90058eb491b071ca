#include "problems.hpp"

#include <charconv>
#include <cstdlib>

namespace fletcher {
namespace problems {

const std::string* ParamReader::lookup(const std::string& key) {
  used_.insert(key);
  auto it = params_.find(key);
  return it == params_.end() ? nullptr : &it->second;
}

long ParamReader::get_int(const std::string& key, long fallback, long min_value) {
  const std::string* raw = lookup(key);
  if (!raw) return fallback;
  long value = 0;
  auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), value);
  if (ec != std::errc() || ptr != raw->data() + raw->size()) {
    throw ConfigError(family_ + ": parameter '" + key + "' must be an integer, got '" + *raw + "'");
  }
  if (value < min_value) {
    throw ConfigError(family_ + ": parameter '" + key + "' must be >= " + std::to_string(min_value));
  }
  return value;
}

double ParamReader::get_double(const std::string& key, double fallback) {
  const std::string* raw = lookup(key);
  if (!raw) return fallback;
  char* end = nullptr;
  const double value = std::strtod(raw->c_str(), &end);
  if (raw->empty() || end != raw->c_str() + raw->size()) {
    throw ConfigError(family_ + ": parameter '" + key + "' must be a number, got '" + *raw + "'");
  }
  return value;
}

bool ParamReader::get_bool(const std::string& key, bool fallback) {
  const std::string* raw = lookup(key);
  if (!raw) return fallback;
  if (*raw == "1" || *raw == "true" || *raw == "on") return true;
  if (*raw == "0" || *raw == "false" || *raw == "off") return false;
  throw ConfigError(family_ + ": parameter '" + key + "' must be a boolean, got '" + *raw + "'");
}

void ParamReader::finish() const {
  for (const auto& [key, value] : params_) {
    if (!used_.count(key)) {
      throw ConfigError(family_ + ": unknown parameter '" + key + "'");
    }
  }
}

}  // namespace problems

std::vector<std::string> problem_names() {
  return {"toy1d", "toy1d-bounded", "randqp", "hs113", "invpoisson-fd", "poisson-boltzmann-fd"};
}

ProblemPtr make_problem(const std::string& name, const ProblemParams& params) {
  if (name == "toy1d") return problems::make_toy1d(params, false);
  if (name == "toy1d-bounded") return problems::make_toy1d(params, true);
  if (name == "randqp") return problems::make_randqp(params);
  if (name == "hs113") return problems::make_hs113(params);
  if (name == "invpoisson-fd") return problems::make_invpoisson(params);
  if (name == "poisson-boltzmann-fd") return problems::make_poisson_boltzmann(params);
  throw ConfigError("unknown problem '" + name + "'");
}

}  // namespace fletcher
