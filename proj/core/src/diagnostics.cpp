#include "fletcher/diagnostics.hpp"

#include "fletcher/augsys.hpp"
#include "fletcher/penalty.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace fletcher {

namespace {

// Orthonormal basis of range(M); throws if M lacks full column rank.
Matrix range_basis(const Matrix& M, const char* what) {
  const Index k = M.cols();
  if (k == 0) return Matrix(M.rows(), 0);
  Eigen::ColPivHouseholderQR<Matrix> qr(M);
  if (qr.rank() < k) {
    std::ostringstream msg;
    msg << what << " has rank " << qr.rank() << " < " << k;
    throw RankDeficiencyError(msg.str(), qr.rank(), k);
  }
  return qr.householderQ() * Matrix::Identity(M.rows(), k);
}

Matrix sym(const Matrix& M) { return 0.5 * (M + M.transpose()); }

ThresholdReport largest_eigenpair(const Matrix& K, ThresholdMode mode) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym(K));
  if (eig.info() != Eigen::Success) throw Error("threshold: eigendecomposition failed");
  const Index top = K.rows() - 1;
  ThresholdReport rep;
  rep.mode = mode;
  if (K.rows() == 0) return rep;
  const double lambda = eig.eigenvalues()[top];
  const Vector v = eig.eigenvectors().col(top);
  rep.sigma_bar = 0.5 * lambda;
  rep.sigma_star = std::max(rep.sigma_bar, 0.0);
  rep.eigen_residual = (K * v - lambda * v).norm();
  return rep;
}

}  // namespace

ScalingDiag scaling_on_closure(const Vector& x, const Bounds& bounds, const ScalingParams& params) {
  const Index n = x.size();
  ScalingDiag s{Vector(n), Vector(n)};
  for (Index j = 0; j < n; ++j) {
    const double l = bounds.lower[j];
    const double u = bounds.upper[j];
    const double w = params.omega.size() ? params.omega[j] : default_omega(l, u);
    const double xj = std::clamp(x[j], l, u);
    double q = std::max(q_value(xj, l, u, w), 0.0);
    double dq = q_derivative(xj, l, u, w);
    if (params.capped && (std::isfinite(l) || std::isfinite(u))) {
      dq *= cap_derivative(q);
      q = cap_value(q);
    }
    s.q[j] = q;
    s.qprime[j] = dq;
  }
  return s;
}

ThresholdReport threshold_sigma(const NlpProblem& problem, const Vector& x, const Vector& y,
                                ThresholdMode mode, double kkt_tol, const ScalingParams& params) {
  const Bounds& bounds = problem.bounds();
  const Matrix A = dense_jacobian(problem, x);
  const Vector c = problem.constraints(x);
  const Vector g = problem.gradient(x);
  const Vector N = bounds.distance(x).cwiseMax(0.0).cwiseMin(1.0);
  const double primal = inf_norm(c);
  const double dual = inf_norm(N.cwiseProduct(g - A * y));
  if (primal > kkt_tol || dual > kkt_tol * std::max(1.0, inf_norm(g))) {
    std::ostringstream msg;
    msg << "threshold: point is not approximately KKT (||c|| = " << primal << ", ||N g_L|| = " << dual << ")";
    throw NotKktError(msg.str());
  }

  const ScalingDiag sc = scaling_on_closure(x, bounds, params);
  const Vector sq = sc.q.cwiseSqrt();
  const Matrix H = dense_hessian_lagrangian(problem, x, y);
  const Matrix QHQ = sq.asDiagonal() * H * sq.asDiagonal();
  const Matrix U = range_basis(sq.asDiagonal() * A, "Q^{1/2}C");
  const Matrix P = U * U.transpose();
  Matrix K = P * QHQ * P;

  if (mode == ThresholdMode::explicit_linear) {
    const auto rows = problem.linear_constraints();
    Matrix B(A.rows(), static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) B.col(static_cast<Index>(k)) = A.col(rows[k]);
    const Matrix UB = range_basis(sq.asDiagonal() * B, "Q^{1/2}B");
    const Matrix Pbar = Matrix::Identity(A.rows(), A.rows()) - UB * UB.transpose();
    K = Pbar * K * Pbar;
  }
  return largest_eigenpair(K, mode);
}

ThresholdReport threshold_sigma_matrix_free(const ProblemPtr& problem, const Vector& x, const Vector& y,
                                            double tol, int max_iterations, const ScalingParams& params) {
  const Index n = problem->num_variables();
  const ScalingDiag sc = scaling_on_closure(x, problem->bounds(), params);
  const Vector sq = sc.q.cwiseSqrt();
  AugSystem K(ConstraintOperator(problem, x), sc, AugSystem::Options{});
  const Vector zero_m = Vector::Zero(problem->num_constraints());
  // P v = v - p, where (p, q) solves the symmetric system with rhs (v; 0).
  auto project = [&](const Vector& v) -> Vector { return v - K.solve(v, zero_m).p; };
  auto op = [&](const Vector& v) -> Vector {
    const Vector pv = project(v);
    return project(sq.cwiseProduct(problem->hessian_lagrangian_product(x, y, sq.cwiseProduct(pv))));
  };

  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  auto power = [&](double shift, int& iters, double& residual) {
    Vector v(n);
    for (Index j = 0; j < n; ++j) v[j] = normal(rng);
    v = project(v);
    if (v.norm() == 0.0) return 0.0;
    v.normalize();
    double lambda = 0.0;
    for (int k = 0; k < max_iterations; ++k) {
      ++iters;
      const Vector Kv = op(v) - shift * v;
      const double next = v.dot(Kv);
      const double nrm = Kv.norm();
      residual = (Kv - next * v).norm();
      if (nrm == 0.0) return 0.0;
      const bool done = k > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next));
      lambda = next;
      v = Kv / nrm;
      if (done) break;
    }
    return lambda;
  };

  ThresholdReport rep;
  rep.mode = ThresholdMode::implicit;
  double residual = 0.0;
  double lambda = power(0.0, rep.iterations, residual);
  if (lambda < 0.0) lambda += power(lambda, rep.iterations, residual);
  // The projected operator vanishes on null(A^T Q^{1/2}), so lambda_max >= 0 whenever m < n.
  if (problem->num_constraints() < n) lambda = std::max(lambda, 0.0);
  rep.sigma_bar = 0.5 * lambda;
  rep.sigma_star = std::max(rep.sigma_bar, 0.0);
  rep.eigen_residual = residual;
  return rep;
}

std::vector<Index> inactive_set(const Vector& x, const Bounds& bounds, double tol) {
  std::vector<Index> free;
  const Vector dist = bounds.distance(x);
  for (Index j = 0; j < x.size(); ++j) {
    if (dist[j] > tol) free.push_back(j);
  }
  return free;
}

double restricted_min_eigenvalue(const Matrix& M, const std::vector<Index>& free, const Matrix& E) {
  const Index n = M.rows();
  const Index f = static_cast<Index>(free.size());
  Matrix Z0 = Matrix::Zero(n, f);
  for (Index k = 0; k < f; ++k) Z0(free[k], k) = 1.0;
  Matrix Z = Z0;
  if (E.cols() > 0 && f > 0) {
    const Matrix Ef = Z0.transpose() * E;  // f x k
    Eigen::ColPivHouseholderQR<Matrix> qr(Ef);
    qr.setThreshold(1e-10);
    const Index r = qr.rank();
    const Matrix Qf = qr.householderQ() * Matrix::Identity(f, f);
    Z = Z0 * Qf.rightCols(f - r);
  }
  if (Z.cols() == 0) return kInf;
  const Matrix R = sym(Z.transpose() * M * Z);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(R, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[0];
}

KktReport verify_kkt(const NlpProblem& problem, const Vector& x, const Vector& y, const Vector& z,
                     double tol, bool curvature, double active_tol) {
  const Bounds& bounds = problem.bounds();
  if (active_tol < 0.0) active_tol = tol;
  KktReport rep;
  const Vector c = problem.constraints(x);
  const Vector g = problem.gradient(x);
  rep.primal_feas = inf_norm(c);
  rep.dual_feas = inf_norm(g - problem.jacobian_product(x, y) - z);
  const Vector dist = bounds.distance(x);
  for (Index j = 0; j < x.size(); ++j) {
    rep.bound_violation = std::max({rep.bound_violation, bounds.lower[j] - x[j], x[j] - bounds.upper[j]});
    if (dist[j] <= active_tol) {
      rep.active_set.push_back(j);
      const bool at_lower = x[j] - bounds.lower[j] <= bounds.upper[j] - x[j];
      rep.sign_conditions = std::max(rep.sign_conditions, at_lower ? -z[j] : z[j]);
    } else {
      rep.complementarity = std::max(rep.complementarity, std::abs(z[j]));
    }
  }
  rep.is_first_order = rep.primal_feas <= tol && rep.dual_feas <= tol && rep.complementarity <= tol &&
                       rep.sign_conditions <= tol && rep.bound_violation <= tol;
  if (curvature) {
    const Matrix H = dense_hessian_lagrangian(problem, x, y);
    const Matrix A = dense_jacobian(problem, x);
    rep.cone_min_curvature = restricted_min_eigenvalue(H, inactive_set(x, bounds, active_tol), A);
  }
  return rep;
}

DenseOracles dense_oracles(const NlpProblem& problem, const Vector& x, double sigma,
                           const LinearBlock* linear, const ScalingParams& params) {
  DenseOracles o;
  const Index n = problem.num_variables();
  const Index m1 = problem.num_constraints();
  const Index m2 = linear ? linear->size() : 0;
  const Index m = m1 + m2;
  o.scaling = scaling_on_closure(x, problem.bounds(), params);
  const Vector& q = o.scaling.q;

  o.A = dense_jacobian(problem, x);
  o.C.resize(n, m);
  o.C.leftCols(m1) = o.A;
  if (m2 > 0) o.C.rightCols(m2) = linear->B;

  const Vector g = problem.gradient(x);
  Vector c_all(m);
  c_all.head(m1) = problem.constraints(x);
  if (m2 > 0) c_all.tail(m2) = linear->B.transpose() * x - linear->d;

  // Weighted least squares through the normal equations.
  const Matrix N = o.C.transpose() * q.asDiagonal() * o.C;
  Eigen::LDLT<Matrix> ldlt(N);
  if (ldlt.info() != Eigen::Success) throw RankDeficiencyError("dense oracle: C^T Q C is singular", 0, m);
  const Vector yw = ldlt.solve(o.C.transpose() * q.cwiseProduct(g) - sigma * c_all);
  o.y = yw.head(m1);
  o.w = yw.tail(m2);
  o.g_sigma = g - o.C * yw;
  o.g_partial = g - o.A * o.y;
  o.phi = problem.objective(x) - c_all.head(m1).dot(o.y);

  o.H = dense_hessian_lagrangian(problem, x, o.y);
  const Vector qg = q.cwiseProduct(o.g_sigma);
  Matrix S = Matrix::Zero(m, n);
  if (m1 > 0) {
    for (Index j = 0; j < n; ++j) S.col(j).head(m1) = problem.second_jacobian_product(x, qg, Vector::Unit(n, j));
  }
  const Vector r = o.scaling.qprime.cwiseProduct(o.g_sigma);
  // L = Q H - sigma I + R
  Matrix L = q.asDiagonal() * o.H;
  L.diagonal() += r - Vector::Constant(n, sigma);
  const Matrix YWt = ldlt.solve(o.C.transpose() * L + S);
  o.YW = YWt.transpose();
  o.Y = o.YW.leftCols(m1);
  o.gradient = o.g_partial - o.Y * c_all.head(m1);

  o.B1 = o.H - o.A * o.Y.transpose() - o.Y * o.A.transpose();
  Matrix A0 = Matrix::Zero(n, m);
  A0.leftCols(m1) = o.A;
  const Matrix T = A0 * ldlt.solve(o.C.transpose() * L);
  o.B2 = o.H - T - T.transpose();
  return o;
}

Matrix fd_penalty_hessian(const ProblemPtr& problem, const Vector& x, double sigma,
                          std::shared_ptr<const LinearBlock> linear, double step) {
  const Index n = x.size();
  PenaltyOptions opt;
  opt.sigma = sigma;
  PenaltyEvaluator ev(problem, opt, std::move(linear));
  const Vector dist = problem->bounds().distance(x);
  Matrix H(n, n);
  for (Index j = 0; j < n; ++j) {
    const double h = std::min(step * (1.0 + std::abs(x[j])), 0.5 * dist[j]);
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    ev.refresh(xp);
    const Vector gp = ev.gradient();
    ev.refresh(xm);
    const Vector gm = ev.gradient();
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  return sym(H);
}

}  // namespace fletcher
