#include "fletcher/augsys.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>

#include <cmath>
#include <sstream>

namespace fletcher {

ConstraintOperator::ConstraintOperator(ProblemPtr problem, Vector x,
                                       std::shared_ptr<const LinearBlock> linear)
    : problem_(std::move(problem)), x_(std::move(x)), linear_(std::move(linear)) {
  m1_ = problem_->num_constraints();
  if (linear_ && linear_->B.rows() != x_.size()) {
    throw ConfigError("ConstraintOperator: linear block has the wrong number of rows");
  }
}

Vector ConstraintOperator::apply(const Vector& w) const {
  Vector out = m1_ > 0 ? problem_->jacobian_product(x_, w.head(m1_)) : Vector::Zero(n());
  if (m_linear() > 0) out.noalias() += linear_->B * w.tail(m_linear());
  return out;
}

Vector ConstraintOperator::apply_transpose(const Vector& v) const {
  Vector out(m());
  if (m1_ > 0) out.head(m1_) = problem_->jacobian_transpose_product(x_, v);
  if (m_linear() > 0) out.tail(m_linear()).noalias() = linear_->B.transpose() * v;
  return out;
}

std::optional<SparseMatrix> ConstraintOperator::assemble() const {
  SparseMatrix A(n(), m1_);
  if (m1_ > 0) {
    auto J = problem_->jacobian(x_);
    if (!J) return std::nullopt;
    A = std::move(*J);
  }
  if (m_linear() == 0) return A;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(A.nonZeros() + linear_->B.size()));
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  }
  for (Index j = 0; j < m_linear(); ++j) {
    for (Index i = 0; i < n(); ++i) {
      const double v = linear_->B(i, j);
      if (v != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(m1_ + j), v);
    }
  }
  SparseMatrix C(n(), m());
  C.setFromTriplets(trips.begin(), trips.end());
  return C;
}

// Direct backend data: C, and R with column permutation from Q^{1/2} C P = Q_0 R.
struct AugSystem::Factor {
  SparseMatrix C;
  SparseMatrix R;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;

  // (C^T Q C)^{-1} t = P R^{-1} R^{-T} P^T t
  Vector schur_solve(const Vector& t) const {
    Vector y = perm.transpose() * t;
    R.triangularView<Eigen::Upper>().transpose().solveInPlace(y);
    R.triangularView<Eigen::Upper>().solveInPlace(y);
    return perm * y;
  }
};

AugSystem::AugSystem(ConstraintOperator op, ScalingDiag scaling, Options options)
    : op_(std::move(op)), scaling_(std::move(scaling)), options_(std::move(options)) {
  if (scaling_.size() != op_.n()) throw ConfigError("AugSystem: scaling has the wrong size");
  if (!(options_.settings.eta > 0.0)) throw ConfigError("AugSystem: eta must be positive");
  sqrt_q_ = scaling_.q.cwiseSqrt();

  if (options_.backend == Backend::iterative) {
    if (options_.form == KernelForm::unsymmetric) {
      throw ConfigError("the iterative backend supports the symmetric form only");
    }
    if (options_.settings.criterion == Criterion::error && !options_.settings.sigma_min_bound &&
        !(options_.preconditioner && options_.preconditioner->sigma_min_bound)) {
      throw ConfigError("error-based termination needs a lower bound on sigma_min");
    }
    return;
  }

  auto C = op_.assemble();
  if (!C) throw ConfigError("the direct backend needs an explicit Jacobian; use the iterative backend");
  factor_ = std::make_unique<Factor>();
  factor_->C = std::move(*C);
  factor_->C.makeCompressed();
  const Index m = op_.m();
  if (m == 0) return;
  if (m > op_.n()) throw RankDeficiencyError("more constraints than variables", op_.n(), m);

  SparseMatrix M = sqrt_q_.asDiagonal() * factor_->C;
  M.makeCompressed();
  Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
  qr.compute(M);
  if (qr.info() != Eigen::Success) throw RankDeficiencyError("sparse QR of Q^{1/2}C failed", 0, m);
  if (qr.rank() < m) {
    std::ostringstream msg;
    msg << "Q^{1/2}C has rank " << qr.rank() << " < " << m << " columns";
    throw RankDeficiencyError(msg.str(), qr.rank(), m);
  }
  factor_->R = qr.matrixR().topLeftCorner(m, m);
  factor_->perm = qr.colsPermutation();
}

AugSystem::~AugSystem() = default;
AugSystem::AugSystem(AugSystem&&) noexcept = default;
AugSystem& AugSystem::operator=(AugSystem&&) noexcept = default;

AugSolution AugSystem::solve(const Vector& a, const Vector& b, bool transpose) const {
  if (a.size() != op_.n() || b.size() != op_.m()) throw ConfigError("AugSystem::solve: rhs has the wrong size");
  // K = [I, Dl C; C^T Dr, 0] with Dl Dr = Q.
  Vector dl, dr;
  if (options_.form == KernelForm::symmetric) {
    dl = sqrt_q_;
    dr = sqrt_q_;
  } else if (!transpose) {
    dl = Vector::Ones(op_.n());
    dr = scaling_.q;
  } else {
    dl = scaling_.q;
    dr = Vector::Ones(op_.n());
  }
  if (a.isZero(0.0) && b.isZero(0.0)) {
    return {Vector::Zero(op_.n()), Vector::Zero(op_.m()), {}};
  }
  return options_.backend == Backend::direct ? solve_direct(a, b, dl, dr) : solve_iterative(a, b, dl, dr);
}

AugSolution AugSystem::solve_direct(const Vector& a, const Vector& b, const Vector& dl,
                                    const Vector& dr) const {
  const SparseMatrix& C = factor_->C;
  AugSolution s;
  if (op_.m() == 0) {
    s.p = a;
    s.q = Vector::Zero(0);
    return s;
  }
  auto residual = [&](const Vector& p, const Vector& q, Vector& r1, Vector& r2) {
    r1 = a - p - dl.cwiseProduct(C * q);
    r2 = b - C.transpose() * dr.cwiseProduct(p);
    return std::sqrt(r1.squaredNorm() + r2.squaredNorm());
  };

  s.q = factor_->schur_solve(C.transpose() * dr.cwiseProduct(a) - b);
  s.p = a - dl.cwiseProduct(C * s.q);
  Vector r1, r2;
  const double res0 = residual(s.p, s.q, r1, r2);

  // One step of iterative refinement on the full system.
  const Vector dq = factor_->schur_solve(C.transpose() * dr.cwiseProduct(r1) - r2);
  const Vector dp = r1 - dl.cwiseProduct(C * dq);
  const Vector p1 = s.p + dp;
  const Vector q1 = s.q + dq;
  const double res1 = residual(p1, q1, r1, r2);
  if (res1 <= res0) {
    s.p = p1;
    s.q = q1;
  }
  s.stats.iterations = 1;
  s.stats.residual_unrefined = res0;
  s.stats.residual = std::min(res0, res1);
  s.stats.reference = std::sqrt(a.squaredNorm() + b.squaredNorm());
  return s;
}

AugSolution AugSystem::solve_iterative(const Vector& a, const Vector& b, const Vector& dl,
                                       const Vector& dr) const {
  const Index n = op_.n();
  const Index m = op_.m();
  const auto& settings = options_.settings;
  const Preconditioner* pre = options_.preconditioner ? &*options_.preconditioner : nullptr;
  auto psolve = [&](const Vector& r) -> Vector { return pre ? pre->solve(r) : r; };

  AugSolution s;
  if (m == 0) {
    s.p = a;
    s.q = Vector::Zero(0);
    return s;
  }

  // Conjugate gradients on N q = t, N = C^T Q C, t = C^T Dr a - b. The top
  // block is then satisfied exactly by p = a - Dl C q, so the preconditioned
  // residual of the whole system is the CG residual in the P^{-1} norm.
  Vector t = -b;
  if (!a.isZero(0.0)) t += op_.apply_transpose(dr.cwiseProduct(a));
  const Vector q_diag = scaling_.q;

  Vector q = Vector::Zero(m);
  Vector Cq = Vector::Zero(n);
  Vector Pq = Vector::Zero(m);
  Vector r = t;
  Vector z = psolve(r);
  Vector d = z;
  Vector Pd = r;
  double rz = r.dot(z);

  const bool error_mode = settings.criterion == Criterion::error;
  double s_min = 0.0;
  if (error_mode) s_min = settings.sigma_min_bound ? *settings.sigma_min_bound : *pre->sigma_min_bound;
  const double error_factor = error_mode ? std::sqrt(1.0 + 1.0 / (s_min * s_min)) / s_min : 0.0;
  const double rhs_norm = error_mode ? 0.0 : std::sqrt(a.squaredNorm() + b.dot(psolve(b)));

  for (int k = 0;; ++k) {
    const double res = std::sqrt(std::max(rz, 0.0));
    double measure, reference;
    if (error_mode) {
      measure = error_factor * res;
      reference = std::sqrt((a - dl.cwiseProduct(Cq)).squaredNorm() + std::max(q.dot(Pq), 0.0));
    } else {
      measure = res;
      reference = rhs_norm;
    }
    if (measure <= settings.eta * reference) {
      s.stats.iterations = k;
      s.stats.residual = measure;
      s.stats.reference = reference;
      break;
    }
    if (k >= settings.max_inner_iterations) {
      std::ostringstream msg;
      msg << "inner solve did not converge in " << k << " iterations (residual " << measure
          << ", target " << settings.eta * reference << ")";
      throw InnerSolveError(msg.str(), a - dl.cwiseProduct(Cq), q, measure);
    }
    const Vector Cd = op_.apply(d);
    const Vector Nd = op_.apply_transpose(q_diag.cwiseProduct(Cd));
    const double dNd = d.dot(Nd);
    if (!(dNd > 0.0)) {
      throw InnerSolveError("inner solve broke down: C^T Q C is not positive definite",
                            a - dl.cwiseProduct(Cq), q, res);
    }
    const double alpha = rz / dNd;
    q += alpha * d;
    Cq += alpha * Cd;
    Pq += alpha * Pd;
    r -= alpha * Nd;
    z = psolve(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    rz = rz_new;
    d = z + beta * d;
    Pd = r + beta * Pd;
  }
  s.p = a - dl.cwiseProduct(Cq);
  s.q = std::move(q);
  return s;
}

Matrix AugSystem::dense_matrix(bool transpose) const {
  const Index n = op_.n();
  const Index m = op_.m();
  Matrix C;
  if (factor_) {
    C = Matrix(factor_->C);
  } else {
    C.resize(n, m);
    for (Index j = 0; j < m; ++j) C.col(j) = op_.apply(Vector::Unit(m, j));
  }
  Vector dl = sqrt_q_, dr = sqrt_q_;
  if (options_.form == KernelForm::unsymmetric) {
    dl = transpose ? scaling_.q : Vector::Ones(n);
    dr = transpose ? Vector::Ones(n) : scaling_.q;
  }
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n).setIdentity();
  K.topRightCorner(n, m) = dl.asDiagonal() * C;
  K.bottomLeftCorner(m, n) = C.transpose() * dr.asDiagonal();
  return K;
}

std::optional<Preconditioner> exact_schur_preconditioner(const ConstraintOperator& op,
                                                         const ScalingDiag& scaling) {
  auto C = op.assemble();
  if (!C) return std::nullopt;
  auto N = std::make_shared<SparseMatrix>(C->transpose() * scaling.q.asDiagonal() * (*C));
  auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(*N);
  if (ldlt->info() != Eigen::Success) return std::nullopt;
  Preconditioner pre;
  pre.name = "exact-schur";
  pre.solve = [ldlt](const Vector& r) -> Vector { return ldlt->solve(r); };
  pre.apply = [N](const Vector& q) -> Vector { return (*N) * q; };
  pre.sigma_min_bound = 1.0;
  return pre;
}

std::optional<Preconditioner> default_preconditioner(const ConstraintOperator& op,
                                                     const ScalingDiag& scaling) {
  if (op.m_linear() == 0) {
    if (auto pre = op.problem().preconditioner(op.x())) return pre;
  }
  return exact_schur_preconditioner(op, scaling);
}

}  // namespace fletcher
