#pragma once

#include "fletcher/model.hpp"

namespace fletcher {

/// Smoothing widths for q. An empty `omega` selects min{1, (u - l)/2}
/// per component. `capped` switches to a C^1 approximation of min{q, 1}.
struct ScalingParams {
  Vector omega;
  bool capped = false;
};

/// Q(x) = diag(q) and its derivative q'.
struct ScalingDiag {
  Vector q;
  Vector qprime;

  Index size() const { return q.size(); }
  Vector sqrt_q() const { return q.cwiseSqrt(); }
};

double default_omega(double lower, double upper);

/// Smooth approximation of min{x - l, u - x}. Equal to 1 when both bounds are infinite.
double q_value(double x, double lower, double upper, double omega);
/// Derivative of q_value with respect to x.
double q_derivative(double x, double lower, double upper, double omega);

/// C^1 cap of t at 1: t below 1 - w/2, 1 above 1 + w/2, quadratic in between (w = 1).
double cap_value(double t);
double cap_derivative(double t);

/// Evaluates q and q' at x. Throws InteriorityError if x is not strictly inside the bounds.
ScalingDiag build_scaling(const Vector& x, const Bounds& bounds, const ScalingParams& params = {});

/// R(x, v) v-product: q'_j v_j.
Vector r_product(const ScalingDiag& scaling, const Vector& v);

}  // namespace fletcher
