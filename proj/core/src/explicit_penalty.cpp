#include "fletcher/explicit_penalty.hpp"

#include <Eigen/QR>

namespace fletcher {

NullSpaceProjector::NullSpaceProjector(const Matrix& B) {
  const Index n = B.rows();
  const Index k = B.cols();
  if (k == 0) {
    U_.resize(n, 0);
    R_.resize(0, 0);
    return;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(B);
  if (qr.rank() < k) throw RankDeficiencyError("linear block B is rank deficient", qr.rank(), k);
  // Unpivoted QR for the correction; rank is already known to be full.
  Eigen::HouseholderQR<Matrix> hqr(B);
  U_ = hqr.householderQ() * Matrix::Identity(n, k);
  R_ = hqr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
}

Vector NullSpaceProjector::project(const Vector& v) const {
  if (trivial()) return v;
  return v - U_ * (U_.transpose() * v);
}

Vector NullSpaceProjector::min_norm_correction(const Vector& r) const {
  if (trivial()) return Vector::Zero(size());
  // B = U R, so B (B^T B)^{-1} r = U R^{-T} r.
  const Vector t = R_.triangularView<Eigen::Upper>().transpose().solve(r);
  return U_ * t;
}

ExplicitPenaltyEvaluator::ExplicitPenaltyEvaluator(ProblemPtr problem, PenaltyOptions options)
    : ExplicitPenaltyEvaluator(problem, split_linear_constraints(problem), std::move(options)) {}

ExplicitPenaltyEvaluator::ExplicitPenaltyEvaluator(LinearSplit split, PenaltyOptions options)
    : ExplicitPenaltyEvaluator(nullptr, std::move(split), std::move(options)) {}

ExplicitPenaltyEvaluator::ExplicitPenaltyEvaluator(ProblemPtr full, LinearSplit split,
                                                   PenaltyOptions options)
    : PenaltyEvaluator(split.nonlinear, std::move(options),
                       std::make_shared<const LinearBlock>(split.linear)),
      full_(std::move(full)),
      split_(std::move(split)) {}

Vector ExplicitPenaltyEvaluator::full_multipliers() const {
  const Index m = static_cast<Index>(split_.nonlinear_rows.size() + split_.linear_rows.size());
  Vector out(m);
  const Vector& y = multipliers();
  const Vector& w = linear_multipliers();
  for (std::size_t k = 0; k < split_.nonlinear_rows.size(); ++k) out[split_.nonlinear_rows[k]] = y[static_cast<Index>(k)];
  for (std::size_t k = 0; k < split_.linear_rows.size(); ++k) out[split_.linear_rows[k]] = w[static_cast<Index>(k)];
  return out;
}

Vector ExplicitPenaltyEvaluator::linear_residual() const {
  return split_.linear.B.transpose() * x() - split_.linear.d;
}

}  // namespace fletcher
