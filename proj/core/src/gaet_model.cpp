#include "putilt/gaet_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "putilt/errors.hpp"

namespace putilt::gaet {

namespace {

constexpr double kExpClip = 40.0;

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double expit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GaetParams::GaetParams(double pi, double alpha, Eigen::MatrixXd theta, spline::BasisSpec spec,
                       Bounds bounds)
    : pi_(pi), alpha_(alpha), theta_(std::move(theta)), spec_(std::move(spec)), bounds_(bounds) {
  if (theta_.cols() != spec_.size()) {
    throw ParameterError("GaetParams: theta columns must equal the basis size");
  }
  if (pi_ < bounds_.pi_min || pi_ > 1.0 - bounds_.pi_min) {
    warn("GaetParams: pi = " + std::to_string(pi_) + " clipped to the sieve box");
    pi_ = clip(pi_, bounds_.pi_min, 1.0 - bounds_.pi_min);
  }
  if (std::abs(alpha_) > bounds_.alpha_max) {
    warn("GaetParams: |alpha| = " + std::to_string(std::abs(alpha_)) + " clipped to " +
         std::to_string(bounds_.alpha_max));
    alpha_ = clip(alpha_, -bounds_.alpha_max, bounds_.alpha_max);
  }
  const Eigen::VectorXd c = spline::centering_weights(spec_);
  for (Eigen::Index j = 0; j < theta_.rows(); ++j) {
    const double integral = c.dot(theta_.row(j));
    if (std::abs(integral) > 1e-6 * (1.0 + theta_.row(j).cwiseAbs().maxCoeff())) {
      throw ParameterError("GaetParams: theta row " + std::to_string(j) + " is not centered");
    }
    if (theta_.row(j).cwiseAbs().maxCoeff() > bounds_.theta_max) {
      warn("GaetParams: |theta| exceeds the sieve bound in component " + std::to_string(j));
    }
  }
}

double GaetParams::component(Eigen::Index j, double x) const {
  const spline::LocalBasis lb = spline::basis_local(spec_, x);
  return theta_.row(j).segment(lb.first, spec_.order()).dot(lb.values.transpose());
}

double eta(const GaetParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != params.p()) throw ParameterError("eta: feature dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < params.p(); ++j) acc += params.component(j, x[j]);
  return acc;
}

double eta(const LinearParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != params.beta.size()) throw ParameterError("eta: feature dimension mismatch");
  return x * params.beta;
}

double density_ratio_from_eta(double alpha, double eta_value) {
  return std::exp(clip(alpha + eta_value, -kExpClip, kExpClip));
}

double density_ratio(const GaetParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return density_ratio_from_eta(params.alpha(), eta(params, x));
}

double density_ratio(const LinearParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return density_ratio_from_eta(params.alpha, eta(params, x));
}

double posterior_from_eta(double pi, double alpha, double eta_value) {
  const double omega = density_ratio_from_eta(alpha, eta_value);
  return pi * omega / (pi * omega + 1.0 - pi);
}

double posterior(const GaetParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return posterior_from_eta(params.pi(), params.alpha(), eta(params, x));
}

double posterior(const LinearParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return posterior_from_eta(params.pi, params.alpha, eta(params, x));
}

double lambda_tilde(double pi, Eigen::Index n0, Eigen::Index n1) {
  return (static_cast<double>(n0) + static_cast<double>(n1) * pi) /
         static_cast<double>(n0 + n1);
}

namespace {

// log(e^a + e^b) without overflow.
double logsumexp2(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace

double profile_loglik_from_eta(double pi, double alpha, const Eigen::VectorXd& eta_all,
                               Eigen::Index n0, Eigen::Index n1) {
  if (eta_all.size() != n0 + n1) {
    throw ParameterError("profile_loglik: eta length must equal n0 + n1");
  }
  const double dn0 = static_cast<double>(n0);
  const double dn1 = static_cast<double>(n1);
  const double tau = std::log((1.0 - pi) / pi);
  const double log_n1pi = std::log(dn1 * pi);
  const double log_n0 = std::log(dn0);
  const double log_mix = std::log(dn0 + dn1 * pi);

  double total = 0.0;
  for (Eigen::Index i = 0; i < n0 + n1; ++i) {
    const double s = alpha + eta_all[i] - tau;
    if (!std::isfinite(s)) {
      throw NumericError("profile_loglik: non-finite exponent at row " + std::to_string(i));
    }
    const double denom = logsumexp2(log_n1pi, log_mix + s);
    if (i < n0) {
      total += log_n0 + s - denom;
    } else {
      total += log_n1pi + log1pexp(s) - denom;
    }
  }
  return total;
}

Eigen::VectorXd eta_all_rows(const GaetParams& params, const PuDataset& data) {
  Eigen::VectorXd out(data.n());
  for (Eigen::Index i = 0; i < data.n0(); ++i) out[i] = eta(params, data.labeled().row(i));
  for (Eigen::Index i = 0; i < data.n1(); ++i) {
    out[data.n0() + i] = eta(params, data.unlabeled().row(i));
  }
  return out;
}

Eigen::VectorXd eta_all_rows(const LinearParams& params, const PuDataset& data) {
  Eigen::VectorXd out(data.n());
  out.head(data.n0()) = data.labeled() * params.beta;
  out.tail(data.n1()) = data.unlabeled() * params.beta;
  return out;
}

double profile_loglik(const GaetParams& params, const PuDataset& data) {
  return profile_loglik_from_eta(params.pi(), params.alpha(), eta_all_rows(params, data),
                                 data.n0(), data.n1());
}

double profile_loglik(const LinearParams& params, const PuDataset& data) {
  return profile_loglik_from_eta(params.pi, params.alpha, eta_all_rows(params, data), data.n0(),
                                 data.n1());
}

double empirical_normalization_gap_from_eta(double pi, double alpha,
                                            const Eigen::VectorXd& eta_all, Eigen::Index n0,
                                            Eigen::Index n1) {
  const double lambda = lambda_tilde(pi, n0, n1);
  const double n = static_cast<double>(n0 + n1);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eta_all.size(); ++i) {
    const double omega = density_ratio_from_eta(alpha, eta_all[i]);
    acc += omega / (n * (1.0 + lambda * (omega - 1.0)));
  }
  return acc - 1.0;
}

double empirical_normalization_gap(const GaetParams& params, const PuDataset& data) {
  return empirical_normalization_gap_from_eta(params.pi(), params.alpha(),
                                              eta_all_rows(params, data), data.n0(), data.n1());
}

double empirical_normalization_gap(const LinearParams& params, const PuDataset& data) {
  return empirical_normalization_gap_from_eta(params.pi, params.alpha,
                                              eta_all_rows(params, data), data.n0(), data.n1());
}

}  // namespace putilt::gaet
