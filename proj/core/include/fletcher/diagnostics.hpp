#pragma once

#include "fletcher/model.hpp"
#include "fletcher/scaling.hpp"

#include <optional>
#include <vector>

namespace fletcher {

enum class ThresholdMode { implicit, explicit_linear };

struct ThresholdReport {
  double sigma_star = 0.0;  // max(sigma_bar, 0)
  double sigma_bar = 0.0;   // lambda_max / 2, signed
  ThresholdMode mode = ThresholdMode::implicit;
  double eigen_residual = 0.0;  // ||K v - lambda v|| for the returned eigenpair
  int iterations = 0;           // power iterations (matrix-free variant)
};

/// Q and q' at a point that may lie on the bounds (q = 0 there). No interiority check.
ScalingDiag scaling_on_closure(const Vector& x, const Bounds& bounds, const ScalingParams& params = {});

/// Threshold penalty parameter at an approximate KKT point (x, y), y in the
/// problem's constraint order:
///
///   implicit:  sigma_bar = 1/2 lambda_max(P Q^{1/2} H_L Q^{1/2} P),  P onto range(Q^{1/2} A)
///   explicit:  the same sandwiched by the projector onto null(B^T Q^{1/2}),
///              with C = [A B] in place of A.
///
/// Throws NotKktError if ||c||_inf or ||N (g - A y)||_inf exceeds kkt_tol, and
/// RankDeficiencyError if Q^{1/2} C is rank deficient.
ThresholdReport threshold_sigma(const NlpProblem& problem, const Vector& x, const Vector& y,
                                ThresholdMode mode, double kkt_tol = 1e-5,
                                const ScalingParams& params = {});

/// Implicit-mode threshold by power iteration on the projected operator; the
/// projection uses one direct augmented solve per product.
ThresholdReport threshold_sigma_matrix_free(const ProblemPtr& problem, const Vector& x, const Vector& y,
                                            double tol = 1e-6, int max_iterations = 5000,
                                            const ScalingParams& params = {});

struct KktReport {
  double primal_feas = 0.0;      // ||c||_inf
  double dual_feas = 0.0;        // ||g - A y - z||_inf
  double complementarity = 0.0;  // max |z_j| off the active set
  double sign_conditions = 0.0;  // worst violation of z_j >= 0 (lower) / z_j <= 0 (upper)
  double bound_violation = 0.0;
  bool is_first_order = false;
  std::optional<double> cone_min_curvature;
  std::vector<Index> active_set;
};

/// Checks the first-order conditions; with `curvature`, also the smallest
/// eigenvalue of H_L on {p : p_j = 0 (j active), A^T p = 0}.
KktReport verify_kkt(const NlpProblem& problem, const Vector& x, const Vector& y, const Vector& z,
                     double tol, bool curvature = false, double active_tol = -1.0);

/// Dense ground truth for the penalty at (x, sigma). With a linear block, C = [A B].
struct DenseOracles {
  Matrix A;       // n x m1
  Matrix C;       // n x (m1 + m2)
  Matrix H;       // H_L(x, y_sigma)
  ScalingDiag scaling;
  Vector y;
  Vector w;
  Vector g_sigma;    // g - C [y; w]
  Vector g_partial;  // g - A y
  double phi = 0.0;
  Matrix Y;       // n x m1
  Matrix YW;      // n x (m1 + m2)
  Vector gradient;
  Matrix B1;
  Matrix B2;
};

DenseOracles dense_oracles(const NlpProblem& problem, const Vector& x, double sigma,
                           const LinearBlock* linear = nullptr, const ScalingParams& params = {});

/// Central-difference Hessian of phi from penalty gradients (direct backend).
/// Steps are shortened near the bounds.
Matrix fd_penalty_hessian(const ProblemPtr& problem, const Vector& x, double sigma,
                          std::shared_ptr<const LinearBlock> linear = nullptr, double step = 1e-5);

/// Smallest eigenvalue of Z^T M Z with Z an orthonormal basis of
/// {p : p_j = 0 for j not in `free`, E^T p = 0} (E may have zero columns).
/// Returns +inf when that subspace is {0}.
double restricted_min_eigenvalue(const Matrix& M, const std::vector<Index>& free, const Matrix& E);

/// {j : min(x_j - l_j, u_j - x_j) > tol}
std::vector<Index> inactive_set(const Vector& x, const Bounds& bounds, double tol);

}  // namespace fletcher
