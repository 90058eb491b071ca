#include "fletcher/penalty.hpp"

#include <mutex>

namespace fletcher {

struct PenaltyEvaluator::State {
  Vector x;
  double f = 0.0;
  Vector g;
  Vector c;        // nonlinear constraint values
  Vector c_all;    // [c; B^T x - d]
  Vector y;
  Vector w;
  Vector g_sigma;  // g - A y - B w
  Vector g_partial;
  Vector qg;       // Q g_sigma
  Vector r_diag;   // q' .* g_sigma
  double phi = 0.0;
  std::unique_ptr<AugSystem> system;
  SolveStats stats;

  mutable std::mutex mutex;
  mutable std::optional<Vector> gradient;
  mutable std::optional<Vector> h0_qg;  // H_L(x, 0) Q g_sigma
};

PenaltyEvaluator::PenaltyEvaluator(ProblemPtr problem, PenaltyOptions options,
                                   std::shared_ptr<const LinearBlock> linear)
    : problem_(std::move(problem)), options_(std::move(options)), linear_(std::move(linear)) {
  if (!problem_) throw ConfigError("PenaltyEvaluator: null problem");
  if (!(options_.sigma >= 0.0)) throw ConfigError("PenaltyEvaluator: sigma must be nonnegative");
  if (linear_ && (linear_->B.rows() != problem_->num_variables() || linear_->d.size() != linear_->size())) {
    throw ConfigError("PenaltyEvaluator: linear block has inconsistent sizes");
  }
}

PenaltyEvaluator::~PenaltyEvaluator() = default;
PenaltyEvaluator::PenaltyEvaluator(PenaltyEvaluator&&) noexcept = default;
PenaltyEvaluator& PenaltyEvaluator::operator=(PenaltyEvaluator&&) noexcept = default;

void PenaltyEvaluator::set_sigma(double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("PenaltyEvaluator: sigma must be nonnegative");
  options_.sigma = sigma;
  state_.reset();
}

void PenaltyEvaluator::refresh(const Vector& x) {
  state_.reset();
  auto s = std::make_unique<State>();
  s->x = x;
  ScalingDiag scaling = build_scaling(x, problem_->bounds(), options_.scaling);

  ConstraintOperator op(problem_, x, linear_);
  AugSystem::Options aug;
  aug.form = options_.form;
  aug.backend = options_.backend;
  aug.settings = options_.solve;
  if (options_.backend == Backend::iterative) {
    if (options_.preconditioner == PreconditionerChoice::automatic) {
      aug.preconditioner = default_preconditioner(op, scaling);
    } else if (options_.preconditioner == PreconditionerChoice::exact) {
      aug.preconditioner = exact_schur_preconditioner(op, scaling);
    }
  }
  s->system = std::make_unique<AugSystem>(std::move(op), std::move(scaling), std::move(aug));
  const AugSystem& K = *s->system;
  const ScalingDiag& sc = K.scaling();

  s->f = problem_->objective(x);
  s->g = problem_->gradient(x);
  s->c = problem_->constraints(x);
  const Index m1 = m_nonlinear();
  s->c_all.resize(m1 + m_linear());
  s->c_all.head(m1) = s->c;
  if (linear_) s->c_all.tail(m_linear()) = linear_->B.transpose() * x - linear_->d;

  const Vector bottom = options_.sigma * s->c_all;
  AugSolution sol;
  if (options_.form == KernelForm::symmetric) {
    sol = K.solve(K.sqrt_q().cwiseProduct(s->g), bottom);
    s->y = sol.q.head(m1);
    s->w = sol.q.tail(m_linear());
    // Recover g_sigma from g rather than dividing the top block by Q^{1/2}.
    s->g_sigma = s->g - K.op().apply(sol.q);
  } else {
    sol = K.solve(s->g, bottom);
    s->y = sol.q.head(m1);
    s->w = sol.q.tail(m_linear());
    s->g_sigma = sol.p;
  }
  s->stats = sol.stats;
  s->g_partial = s->g_sigma;
  if (linear_) s->g_partial.noalias() += linear_->B * s->w;
  s->qg = sc.q.cwiseProduct(s->g_sigma);
  s->r_diag = sc.qprime.cwiseProduct(s->g_sigma);
  s->phi = s->f - s->c.dot(s->y);
  state_ = std::move(s);
}

const PenaltyEvaluator::State& PenaltyEvaluator::state() const {
  if (!state_) throw ConfigError("PenaltyEvaluator used before refresh");
  return *state_;
}

const Vector& PenaltyEvaluator::x() const { return state().x; }
double PenaltyEvaluator::value() const { return state().phi; }
double PenaltyEvaluator::objective_value() const { return state().f; }
const Vector& PenaltyEvaluator::objective_gradient() const { return state().g; }
const Vector& PenaltyEvaluator::constraint_values() const { return state().c; }
const Vector& PenaltyEvaluator::multipliers() const { return state().y; }
const Vector& PenaltyEvaluator::linear_multipliers() const { return state().w; }
const Vector& PenaltyEvaluator::lagrangian_gradient() const { return state().g_sigma; }
const Vector& PenaltyEvaluator::partial_gradient() const { return state().g_partial; }
const ScalingDiag& PenaltyEvaluator::scaling() const { return state().system->scaling(); }
const AugSystem& PenaltyEvaluator::system() const { return *state().system; }
const SolveStats& PenaltyEvaluator::refresh_stats() const { return state().stats; }

Vector PenaltyEvaluator::c_product(const Vector& w) const { return state().system->op().apply(w); }
Vector PenaltyEvaluator::ct_product(const Vector& v) const {
  return state().system->op().apply_transpose(v);
}

Vector PenaltyEvaluator::lagrangian_hessian_product(const Vector& v) const {
  const State& s = state();
  return problem_->hessian_lagrangian_product(s.x, s.y, v);
}

Vector PenaltyEvaluator::s_product(const Vector& v) const {
  const State& s = state();
  Vector out = Vector::Zero(m_nonlinear() + m_linear());
  if (m_nonlinear() > 0) out.head(m_nonlinear()) = problem_->second_jacobian_product(s.x, s.qg, v);
  return out;
}

// S~^T w = sum_i w_i grad^2 c_i (Q g_sigma) = H_L(x,0) Q g_sigma - H_L(x,w) Q g_sigma.
Vector PenaltyEvaluator::st_product(const Vector& w) const {
  const State& s = state();
  const Index m1 = m_nonlinear();
  if (m1 == 0 || w.head(m1).isZero(0.0)) return Vector::Zero(n());
  const Vector w1 = w.head(m1);
  Vector h0;
  {
    std::lock_guard<std::mutex> lock(s.mutex);
    if (!s.h0_qg) s.h0_qg = problem_->hessian_lagrangian_product(s.x, Vector::Zero(m1), s.qg);
    h0 = *s.h0_qg;
  }
  return h0 - problem_->hessian_lagrangian_product(s.x, w1, s.qg);
}

Vector PenaltyEvaluator::left_op(const Vector& v, const Vector& Hv) const {
  const State& s = state();
  const ScalingDiag& sc = s.system->scaling();
  return sc.q.cwiseProduct(Hv) - options_.sigma * v + s.r_diag.cwiseProduct(v);
}

Vector PenaltyEvaluator::yw_product(const Vector& u) const {
  const State& s = state();
  const AugSystem& K = *s.system;
  if (u.size() != K.op().m()) throw ConfigError("yw_product: wrong length");
  if (u.isZero(0.0)) return Vector::Zero(n());
  const Vector zero_n = Vector::Zero(n());
  if (options_.form == KernelForm::symmetric) {
    // (v, w) solves K (v; w) = (0; u); Y u = H Q^{1/2} v + (sigma I - R) C w - S^T w.
    const AugSolution sol = K.solve(zero_n, u);
    const Vector Cw = c_product(sol.q);
    return lagrangian_hessian_product(K.sqrt_q().cwiseProduct(sol.p)) + options_.sigma * Cw -
           s.r_diag.cwiseProduct(Cw) - st_product(sol.q);
  }
  // Unsymmetric: vbar = -C w with w = -(C^T Q C)^{-1} u; Y u = (H Q - sigma I + R) vbar - S^T w.
  const AugSolution sol = K.solve(zero_n, u);
  const Vector& vbar = sol.p;
  return lagrangian_hessian_product(K.scaling().q.cwiseProduct(vbar)) - options_.sigma * vbar +
         s.r_diag.cwiseProduct(vbar) - st_product(sol.q);
}

Vector PenaltyEvaluator::ywt_product(const Vector& v) const {
  const State& s = state();
  const AugSystem& K = *s.system;
  if (v.size() != n()) throw ConfigError("ywt_product: wrong length");
  if (v.isZero(0.0)) return Vector::Zero(K.op().m());
  const Vector Hv = lagrangian_hessian_product(v);
  const Vector Sv = s_product(v);
  if (options_.form == KernelForm::symmetric) {
    const Vector top = K.sqrt_q().cwiseProduct(Hv);
    const Vector bottom = ct_product(options_.sigma * v - s.r_diag.cwiseProduct(v)) - Sv;
    return K.solve(top, bottom).q;
  }
  // Transposed unsymmetric system [I, QC; C^T, 0] (rbar; u) = ((QH - sigma I + R) v; -S v).
  return K.solve(left_op(v, Hv), -Sv, true).q;
}

Vector PenaltyEvaluator::y_product(const Vector& u) const {
  if (u.size() != m_nonlinear()) throw ConfigError("y_product: wrong length");
  Vector full = Vector::Zero(m_nonlinear() + m_linear());
  full.head(m_nonlinear()) = u;
  return yw_product(full);
}

Vector PenaltyEvaluator::yt_product(const Vector& v) const {
  return ywt_product(v).head(m_nonlinear());
}

Vector PenaltyEvaluator::pinv_product(const Vector& v) const {
  const AugSystem& K = *state().system;
  if (v.isZero(0.0)) return Vector::Zero(K.op().m());
  if (options_.form == KernelForm::symmetric) {
    return -K.solve(Vector::Zero(n()), ct_product(v)).q;
  }
  return K.solve(v, Vector::Zero(K.op().m()), true).q;
}

Vector PenaltyEvaluator::range_product(const Vector& u) const {
  const AugSystem& K = *state().system;
  if (u.isZero(0.0)) return Vector::Zero(n());
  const AugSolution sol = K.solve(Vector::Zero(n()), u);
  if (options_.form == KernelForm::symmetric) return -c_product(sol.q);
  return sol.p;
}

const Vector& PenaltyEvaluator::gradient() const {
  const State& s = state();
  {
    std::lock_guard<std::mutex> lock(s.mutex);
    if (s.gradient) return *s.gradient;
  }
  Vector grad = s.g_partial;
  if (m_nonlinear() > 0) grad -= y_product(s.c);
  std::lock_guard<std::mutex> lock(s.mutex);
  if (!s.gradient) s.gradient = std::move(grad);
  return *s.gradient;
}

Vector PenaltyEvaluator::dual_estimate() const {
  Vector z = gradient();
  if (linear_) z.noalias() -= linear_->B * state().w;
  return z;
}

Vector PenaltyEvaluator::hess_product(const Vector& d, HessianMode mode) const {
  if (d.size() != n()) throw ConfigError("hess_product: wrong length");
  if (d.isZero(0.0)) return Vector::Zero(n());
  const State& s = state();
  const Index m1 = m_nonlinear();
  const Index m = m1 + m_linear();
  const Vector Hd = lagrangian_hessian_product(d);
  if (m1 == 0) return Hd;

  if (mode == HessianMode::B1) {
    // H d - A (Y^T d) - Y (A^T d)
    Vector out = Hd;
    out -= problem_->jacobian_product(s.x, yt_product(d));
    out -= y_product(problem_->jacobian_transpose_product(s.x, d));
    return out;
  }

  // B2: H d - [A 0] N^{-1} C^T (QH - sigma I + R) d - (HQ - sigma I + R) C N^{-1} [A^T d; 0]
  Vector out = Hd;
  const Vector t1 = pinv_product(left_op(d, Hd));
  out -= problem_->jacobian_product(s.x, t1.head(m1));

  Vector atd = Vector::Zero(m);
  atd.head(m1) = problem_->jacobian_transpose_product(s.x, d);
  const Vector t2 = range_product(atd);
  const ScalingDiag& sc = s.system->scaling();
  out -= lagrangian_hessian_product(sc.q.cwiseProduct(t2)) - options_.sigma * t2 +
         s.r_diag.cwiseProduct(t2);
  return out;
}

}  // namespace fletcher
