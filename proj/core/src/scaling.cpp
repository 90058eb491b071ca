#include "fletcher/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fletcher {

namespace {
constexpr double kCapWidth = 1.0;

bool in_band(double x, double lower, double upper, double omega) {
  return std::isfinite(lower) && std::isfinite(upper) && std::abs(upper + lower - 2.0 * x) <= omega;
}
}  // namespace

double default_omega(double lower, double upper) {
  return std::min(1.0, 0.5 * (upper - lower));
}

double q_value(double x, double lower, double upper, double omega) {
  if (!std::isfinite(lower) && !std::isfinite(upper)) return 1.0;
  if (in_band(x, lower, upper, omega)) {
    const double s = 2.0 * x - upper - lower;
    return 0.5 * (upper - lower) - 0.25 * omega - s * s / (4.0 * omega);
  }
  return std::min(x - lower, upper - x);
}

double q_derivative(double x, double lower, double upper, double omega) {
  if (!std::isfinite(lower) && !std::isfinite(upper)) return 0.0;
  if (in_band(x, lower, upper, omega)) return -(2.0 * x - upper - lower) / omega;
  return (x - lower < upper - x) ? 1.0 : -1.0;
}

double cap_value(double t) {
  const double lo = 1.0 - 0.5 * kCapWidth;
  if (t <= lo) return t;
  if (t >= 1.0 + 0.5 * kCapWidth) return 1.0;
  const double s = t - lo;
  return t - s * s / (2.0 * kCapWidth);
}

double cap_derivative(double t) {
  const double lo = 1.0 - 0.5 * kCapWidth;
  if (t <= lo) return 1.0;
  if (t >= 1.0 + 0.5 * kCapWidth) return 0.0;
  return 1.0 - (t - lo) / kCapWidth;
}

ScalingDiag build_scaling(const Vector& x, const Bounds& bounds, const ScalingParams& params) {
  const Index n = x.size();
  if (bounds.size() != n) throw ConfigError("build_scaling: bounds have the wrong size");
  if (params.omega.size() != 0 && params.omega.size() != n) {
    throw ConfigError("build_scaling: omega has the wrong size");
  }
  ScalingDiag s{Vector(n), Vector(n)};
  for (Index j = 0; j < n; ++j) {
    const double l = bounds.lower[j];
    const double u = bounds.upper[j];
    if (!(x[j] > l && x[j] < u)) {
      std::ostringstream msg;
      msg << "x[" << j << "] = " << x[j] << " is not strictly inside [" << l << ", " << u << "]";
      throw InteriorityError(msg.str(), j);
    }
    const double w = params.omega.size() ? params.omega[j] : default_omega(l, u);
    double q = q_value(x[j], l, u, w);
    double dq = q_derivative(x[j], l, u, w);
    if (params.capped && (std::isfinite(l) || std::isfinite(u))) {
      dq *= cap_derivative(q);
      q = cap_value(q);
    }
    s.q[j] = q;
    s.qprime[j] = dq;
  }
  return s;
}

Vector r_product(const ScalingDiag& scaling, const Vector& v) {
  return scaling.qprime.cwiseProduct(v);
}

}  // namespace fletcher
