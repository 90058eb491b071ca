#include "fletcher/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fletcher {

Bounds Bounds::unbounded(Index n) {
  return {Vector::Constant(n, -kInf), Vector::Constant(n, kInf)};
}

Bounds Bounds::lower_only(const Vector& lower) {
  return {lower, Vector::Constant(lower.size(), kInf)};
}

void Bounds::validate() const {
  if (lower.size() != upper.size()) {
    throw ConfigError("bounds: lower and upper have different lengths");
  }
  for (Index j = 0; j < lower.size(); ++j) {
    if (!(lower[j] < upper[j])) {
      std::ostringstream os;
      os << "bounds: lower[" << j << "] = " << lower[j] << " is not below upper[" << j
         << "] = " << upper[j] << " (fixed variables must be eliminated)";
      throw ConfigError(os.str());
    }
  }
}

bool Bounds::strictly_interior(const Vector& x) const {
  return ((x.array() > lower.array()) && (x.array() < upper.array())).all();
}

Vector Bounds::distance(const Vector& x) const {
  return (x - lower).cwiseMin(upper - x);
}

std::vector<Index> KktPoint::active_set(const Bounds& bounds, double tol) const {
  std::vector<Index> active;
  const Vector dist = bounds.distance(x);
  for (Index j = 0; j < dist.size(); ++j) {
    if (dist[j] <= tol) active.push_back(j);
  }
  return active;
}

std::optional<SparseMatrix> NlpProblem::jacobian(const Vector&) const { return std::nullopt; }

Vector NlpProblem::second_jacobian_product(const Vector& x, const Vector& u, const Vector& v) const {
  return fd_second_jacobian_product(*this, x, u, v);
}

std::optional<Preconditioner> NlpProblem::preconditioner(const Vector&) const {
  return std::nullopt;
}

Vector fd_second_jacobian_product(const NlpProblem& problem, const Vector& x, const Vector& u,
                                  const Vector& v) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) return Vector::Zero(problem.num_constraints());
  // Step of cbrt(eps) * (1 + ||x||) along the unit direction v / ||v||.
  const double t = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + x.norm()) / vnorm;
  const Vector plus = problem.jacobian_transpose_product(x + t * v, u);
  const Vector minus = problem.jacobian_transpose_product(x - t * v, u);
  return (plus - minus) / (2.0 * t);
}

Matrix dense_jacobian(const NlpProblem& problem, const Vector& x) {
  const Index n = problem.num_variables();
  const Index m = problem.num_constraints();
  if (auto J = problem.jacobian(x)) return Matrix(*J);
  Matrix A(n, m);
  for (Index i = 0; i < m; ++i) {
    A.col(i) = problem.jacobian_product(x, Vector::Unit(m, i));
  }
  return A;
}

Matrix dense_hessian_lagrangian(const NlpProblem& problem, const Vector& x, const Vector& y) {
  const Index n = problem.num_variables();
  Matrix H(n, n);
  for (Index j = 0; j < n; ++j) {
    H.col(j) = problem.hessian_lagrangian_product(x, y, Vector::Unit(n, j));
  }
  return 0.5 * (H + H.transpose());
}

ForwardingProblem::ForwardingProblem(ProblemPtr inner) : inner_(std::move(inner)) {
  if (!inner_) throw ConfigError("ForwardingProblem: null problem");
}

namespace {

// Restricts a problem to a subset of its constraint rows. Used for the
// nonlinear part once the linear rows are moved into B^T x = d.
class RowSubsetProblem final : public ForwardingProblem {
 public:
  RowSubsetProblem(ProblemPtr inner, std::vector<Index> rows)
      : ForwardingProblem(std::move(inner)), rows_(std::move(rows)) {}

  Index num_constraints() const override { return static_cast<Index>(rows_.size()); }

  Vector constraints(const Vector& x) const override { return select(inner_->constraints(x)); }
  Vector jacobian_product(const Vector& x, const Vector& w) const override {
    return inner_->jacobian_product(x, pad(w));
  }
  Vector jacobian_transpose_product(const Vector& x, const Vector& v) const override {
    return select(inner_->jacobian_transpose_product(x, v));
  }
  Vector hessian_lagrangian_product(const Vector& x, const Vector& y,
                                    const Vector& v) const override {
    return inner_->hessian_lagrangian_product(x, pad(y), v);
  }
  std::optional<SparseMatrix> jacobian(const Vector& x) const override {
    auto J = inner_->jacobian(x);
    if (!J) return std::nullopt;
    SparseMatrix out(J->rows(), num_constraints());
    std::vector<Triplet> trips;
    for (Index k = 0; k < num_constraints(); ++k) {
      for (SparseMatrix::InnerIterator it(*J, rows_[k]); it; ++it) {
        trips.emplace_back(it.row(), static_cast<int>(k), it.value());
      }
    }
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  }
  Vector second_jacobian_product(const Vector& x, const Vector& u, const Vector& v) const override {
    if (inner_->has_exact_second_jacobian()) return select(inner_->second_jacobian_product(x, u, v));
    return fd_second_jacobian_product(*this, x, u, v);
  }
  std::vector<Index> linear_constraints() const override { return {}; }
  std::optional<Preconditioner> preconditioner(const Vector&) const override { return std::nullopt; }
  std::optional<KktPoint> reference_solution() const override {
    auto ref = inner_->reference_solution();
    if (!ref) return std::nullopt;
    ref->y = select(ref->y);
    return ref;
  }

 private:
  Vector select(const Vector& full) const {
    Vector out(num_constraints());
    for (Index k = 0; k < num_constraints(); ++k) out[k] = full[rows_[k]];
    return out;
  }
  Vector pad(const Vector& part) const {
    Vector out = Vector::Zero(inner_->num_constraints());
    for (Index k = 0; k < num_constraints(); ++k) out[rows_[k]] = part[k];
    return out;
  }

  std::vector<Index> rows_;
};

}  // namespace

LinearSplit split_linear_constraints(const ProblemPtr& problem) {
  LinearSplit split;
  split.linear_rows = problem->linear_constraints();
  std::sort(split.linear_rows.begin(), split.linear_rows.end());
  const Index m = problem->num_constraints();
  for (Index i = 0; i < m; ++i) {
    if (!std::binary_search(split.linear_rows.begin(), split.linear_rows.end(), i)) {
      split.nonlinear_rows.push_back(i);
    }
  }
  split.nonlinear = std::make_shared<const RowSubsetProblem>(problem, split.nonlinear_rows);

  // Linear rows: c_i(x) = b_i^T x - d_i, so B is constant and d = B^T x - c(x) at any x.
  const Index n = problem->num_variables();
  const Index m2 = static_cast<Index>(split.linear_rows.size());
  const Vector x0 = problem->initial_point();
  const Vector c0 = problem->constraints(x0);
  split.linear.B.resize(n, m2);
  split.linear.d.resize(m2);
  for (Index k = 0; k < m2; ++k) {
    const Index i = split.linear_rows[k];
    split.linear.B.col(k) = problem->jacobian_product(x0, Vector::Unit(m, i));
    split.linear.d[k] = split.linear.B.col(k).dot(x0) - c0[i];
  }
  return split;
}

ProblemParams parse_params(const std::vector<std::string>& items) {
  ProblemParams params;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("malformed parameter '" + item + "' (expected key=value)");
    }
    params[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return params;
}

}  // namespace fletcher
