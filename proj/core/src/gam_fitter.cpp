#include "putilt/gam_fitter.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "putilt/errors.hpp"
#include "putilt/gaet_model.hpp"

namespace putilt::gam {

namespace {

constexpr double kWeightFloor = 1e-6;
constexpr int kMaxNewtonIter = 100;
constexpr double kGradTolPerRow = 1e-6;
constexpr double kRelObjTol = 1e-9;

}  // namespace

void WorkingResponse::validate() const {
  if (n_labeled < 0 || n_labeled > y.size()) {
    throw ParameterError("WorkingResponse: invalid labeled count");
  }
  if (!((y.array() >= 0.0).all() && (y.array() <= 1.0).all()) || !y.allFinite()) {
    throw ParameterError("WorkingResponse: entries must lie in [0,1]");
  }
  if (n_labeled > 0 && (y.head(n_labeled).array() != 1.0).any()) {
    throw ParameterError("WorkingResponse: labeled entries must equal 1");
  }
}

AdditiveDesign::AdditiveDesign(const Eigen::Ref<const Eigen::MatrixXd>& features01,
                               const spline::BasisSpec& spec)
    : spec_(spec), p_(features01.cols()) {
  if (p_ < 1) throw ParameterError("AdditiveDesign: need at least one feature");
  const Eigen::Index nb = spec_.size();

  // Z = orthonormal complement of the centering functional c.
  const Eigen::VectorXd c = spline::centering_weights(spec_);
  Eigen::MatrixXd cmat = c;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(cmat);
  Eigen::MatrixXd q = qr.householderQ();
  null_basis_ = q.rightCols(nb - 1);

  const Eigen::MatrixXd s = spline::penalty_matrix(spec_);
  penalty_reduced_ = null_basis_.transpose() * s * null_basis_;
  penalty_reduced_ = 0.5 * (penalty_reduced_ + penalty_reduced_.transpose()).eval();

  const Eigen::Index n = features01.rows();
  const Eigen::Index block = nb - 1;
  design_.resize(n, 1 + p_ * block);
  design_.col(0).setOnes();
  for (Eigen::Index j = 0; j < p_; ++j) {
    const Eigen::MatrixXd basis = spline::eval_basis(spec_, features01.col(j));
    design_.middleCols(1 + j * block, block) = basis * null_basis_;
  }
}

Eigen::MatrixXd AdditiveDesign::theta_from_coef(
    const Eigen::Ref<const Eigen::VectorXd>& coef) const {
  const Eigen::Index nb_ = nb();
  const Eigen::Index block = nb_ - 1;
  Eigen::MatrixXd theta(p_, nb_);
  for (Eigen::Index j = 0; j < p_; ++j) {
    theta.row(j) = (null_basis_ * coef.segment(1 + j * block, block)).transpose();
  }
  return theta;
}

Eigen::VectorXd AdditiveDesign::coef_from_theta(
    double alpha_star, const Eigen::Ref<const Eigen::MatrixXd>& theta) const {
  const Eigen::Index block = nb() - 1;
  Eigen::VectorXd coef(dim());
  coef[0] = alpha_star;
  for (Eigen::Index j = 0; j < p_; ++j) {
    coef.segment(1 + j * block, block) = null_basis_.transpose() * theta.row(j).transpose();
  }
  return coef;
}

namespace {

struct NewtonProblem {
  const Eigen::MatrixXd& design;          // n x d, column 0 = intercept
  const Eigen::VectorXd& y;
  const Eigen::MatrixXd* penalty = nullptr;  // reduced per-block penalty, or null
  Eigen::Index block = 0;                  // penalty block size
  double kappa = 0.0;

  double pen_quad(const Eigen::VectorXd& coef) const {
    if (penalty == nullptr || kappa == 0.0) return 0.0;
    double acc = 0.0;
    const Eigen::Index nblocks = (coef.size() - 1) / block;
    for (Eigen::Index j = 0; j < nblocks; ++j) {
      const auto g = coef.segment(1 + j * block, block);
      acc += g.dot(*penalty * g);
    }
    return acc;
  }

  void add_pen_grad(const Eigen::VectorXd& coef, Eigen::VectorXd& grad) const {
    if (penalty == nullptr || kappa == 0.0) return;
    const Eigen::Index nblocks = (coef.size() - 1) / block;
    for (Eigen::Index j = 0; j < nblocks; ++j) {
      grad.segment(1 + j * block, block) -=
          2.0 * kappa * (*penalty * coef.segment(1 + j * block, block));
    }
  }

  void add_pen_hessian(Eigen::MatrixXd& h) const {
    if (penalty == nullptr || kappa == 0.0) return;
    const Eigen::Index nblocks = (h.rows() - 1) / block;
    for (Eigen::Index j = 0; j < nblocks; ++j) {
      h.block(1 + j * block, 1 + j * block, block, block) += 2.0 * kappa * (*penalty);
    }
  }

  double objective(const Eigen::VectorXd& f, const Eigen::VectorXd& coef) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      acc += y[i] * f[i] - gaet::log1pexp(f[i]);
    }
    return acc - kappa * pen_quad(coef);
  }
};

struct NewtonResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd weights;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;
};

NewtonResult newton_solve(const NewtonProblem& prob, Eigen::VectorXd coef) {
  const Eigen::Index n = prob.design.rows();
  const Eigen::Index d = prob.design.cols();
  const double grad_tol = kGradTolPerRow * static_cast<double>(n);

  NewtonResult res;
  Eigen::VectorXd f = prob.design * coef;
  double obj = prob.objective(f, coef);
  res.trace.push_back(obj);

  Eigen::VectorXd mu(n), w(n), grad(d);
  Eigen::MatrixXd h(d, d);
  bool converged = false;
  int iter = 0;
  for (; iter < kMaxNewtonIter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = gaet::expit(f[i]);
    grad.noalias() = prob.design.transpose() * (prob.y - mu);
    prob.add_pen_grad(coef, grad);
    if (grad.norm() <= grad_tol) {
      converged = true;
      break;
    }

    w = (mu.array() * (1.0 - mu.array())).cwiseMax(kWeightFloor);
    h.setZero();
    h.selfadjointView<Eigen::Lower>().rankUpdate(
        (prob.design.array().colwise() * w.array().sqrt()).matrix().transpose());
    h = h.selfadjointView<Eigen::Lower>();
    prob.add_pen_hessian(h);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd delta;
    if (ldlt.info() == Eigen::Success) delta = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !delta.allFinite()) {
      // Singular or indefinite system: retry with a small ridge.
      const double ridge = 1e-10 * (1.0 + h.diagonal().maxCoeff());
      h.diagonal().array() += ridge;
      delta = h.ldlt().solve(grad);
      warn("fit_additive_logistic: near-singular Newton system, ridge applied");
    }

    // Step-halving keeps the concave objective nondecreasing.
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd coef_try, f_try;
    double obj_try = obj;
    for (int halving = 0; halving < 40; ++halving) {
      coef_try = coef + step * delta;
      f_try.noalias() = prob.design * coef_try;
      obj_try = prob.objective(f_try, coef_try);
      if (std::isfinite(obj_try) && obj_try >= obj - 1e-10) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step-halving exhausted

    const double prev = obj;
    coef.swap(coef_try);
    f.swap(f_try);
    obj = obj_try;
    res.trace.push_back(obj);
    if (std::abs(obj - prev) <= kRelObjTol * (1.0 + std::abs(obj))) {
      converged = true;
      ++iter;
      break;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) mu[i] = gaet::expit(f[i]);
  res.coef = std::move(coef);
  res.weights = (mu.array() * (1.0 - mu.array())).cwiseMax(kWeightFloor);
  res.objective = obj;
  res.converged = converged;
  res.iterations = iter;
  return res;
}

double edf_from_weights(const Eigen::MatrixXd& design, const Eigen::VectorXd& w,
                        const NewtonProblem& prob) {
  const Eigen::Index d = design.cols();
  Eigen::MatrixXd a(d, d);
  a.setZero();
  a.selfadjointView<Eigen::Lower>().rankUpdate(
      (design.array().colwise() * w.array().sqrt()).matrix().transpose());
  a = a.selfadjointView<Eigen::Lower>();
  Eigen::MatrixXd h = a;
  prob.add_pen_hessian(h);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  double tr = ldlt.info() == Eigen::Success ? ldlt.solve(a).trace()
                                            : std::numeric_limits<double>::quiet_NaN();
  if (!std::isfinite(tr)) {
    warn("effective_df: singular system, ridge 1e-10 applied");
    h.diagonal().array() += 1e-10 * (1.0 + h.diagonal().maxCoeff());
    tr = h.ldlt().solve(a).trace();
  }
  return tr;
}

}  // namespace

AdditiveFit fit_additive_logistic(const AdditiveDesign& design, const WorkingResponse& y,
                                  double kappa, const std::optional<AdditiveFit>& init) {
  y.validate();
  if (y.y.size() != design.n()) throw ParameterError("fit_additive_logistic: response length");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw ParameterError("fit_additive_logistic: kappa must be finite and >= 0");
  }

  NewtonProblem prob{design.design(), y.y, &design.penalty_reduced(), design.nb() - 1, kappa};

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(design.dim());
  if (init) {
    coef = design.coef_from_theta(init->alpha_star, init->theta);
  } else {
    const double ybar = std::clamp(y.y.mean(), 1e-3, 1.0 - 1e-3);
    coef[0] = std::log(ybar / (1.0 - ybar));
  }

  NewtonResult res = newton_solve(prob, std::move(coef));

  AdditiveFit fit;
  fit.alpha_star = res.coef[0];
  fit.theta = design.theta_from_coef(res.coef);
  fit.kappa = kappa;
  fit.objective = res.objective;
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.coef = res.coef;
  fit.objective_trace = std::move(res.trace);
  fit.edf = edf_from_weights(design.design(), res.weights, prob);

  if (!res.converged) {
    throw NonConvergenceError("fit_additive_logistic: IRLS did not converge", fit);
  }
  return fit;
}

AdditiveFit fit_additive_logistic(const Eigen::Ref<const Eigen::MatrixXd>& features01,
                                  const WorkingResponse& y, const spline::BasisSpec& spec,
                                  double kappa, const std::optional<AdditiveFit>& init) {
  return fit_additive_logistic(AdditiveDesign(features01, spec), y, kappa, init);
}

std::pair<double, Eigen::VectorXd> fit_linear_logistic(
    const Eigen::Ref<const Eigen::MatrixXd>& features, const WorkingResponse& y) {
  y.validate();
  const Eigen::Index n = features.rows();
  if (y.y.size() != n) throw ParameterError("fit_linear_logistic: response length");
  Eigen::MatrixXd design(n, features.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(features.cols()) = features;

  NewtonProblem prob{design, y.y, nullptr, 0, 0.0};
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(design.cols());
  const double ybar = std::clamp(y.y.mean(), 1e-3, 1.0 - 1e-3);
  coef[0] = std::log(ybar / (1.0 - ybar));

  NewtonResult res = newton_solve(prob, std::move(coef));
  if (!res.converged) {
    AdditiveFit last;
    last.alpha_star = res.coef[0];
    last.coef = res.coef;
    last.objective = res.objective;
    last.iterations = res.iterations;
    throw NonConvergenceError("fit_linear_logistic: IRLS did not converge", last);
  }
  return {res.coef[0], res.coef.tail(features.cols())};
}

double effective_df(const AdditiveFit& fit, const AdditiveDesign& design,
                    const WorkingResponse& y) {
  y.validate();
  NewtonProblem prob{design.design(), y.y, &design.penalty_reduced(), design.nb() - 1,
                     fit.kappa};
  const Eigen::VectorXd f = design.design() * fit.coef;
  Eigen::VectorXd w(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double mu = gaet::expit(f[i]);
    w[i] = std::max(mu * (1.0 - mu), kWeightFloor);
  }
  return edf_from_weights(design.design(), w, prob);
}

}  // namespace putilt::gam
