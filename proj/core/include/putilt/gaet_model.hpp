#pragma once

#include <Eigen/Core>

#include "putilt/dataset.hpp"
#include "putilt/spline_basis.hpp"

namespace putilt::gaet {

/// Sieve-space box constraints. pi is kept in [pi_min, 1-pi_min] and |alpha|
/// <= alpha_max (violations are clipped with a warning); coefficient bounds
/// are monitored only, since the M-step fitter is unconstrained.
struct Bounds {
  double pi_min = 1e-3;
  double alpha_max = 20.0;
  double theta_max = 50.0;
};

/// A point of the additive sieve space: mixture proportion pi, normalizer
/// alpha, and one centered coefficient row per feature.
class GaetParams {
 public:
  GaetParams(double pi, double alpha, Eigen::MatrixXd theta, spline::BasisSpec spec,
             Bounds bounds = {});

  double pi() const { return pi_; }
  double alpha() const { return alpha_; }
  /// p x (K_n + m); each row satisfies c . theta_j = 0.
  const Eigen::MatrixXd& theta() const { return theta_; }
  const spline::BasisSpec& spec() const { return spec_; }
  const Bounds& bounds() const { return bounds_; }
  Eigen::Index p() const { return theta_.rows(); }

  /// The additive component j evaluated at a single (rescaled) point.
  double component(Eigen::Index j, double x) const;

 private:
  double pi_;
  double alpha_;
  Eigen::MatrixXd theta_;
  spline::BasisSpec spec_;
  Bounds bounds_;
};

/// Baseline exponential tilting model with a linear log density ratio.
struct LinearParams {
  double pi = 0.5;
  double alpha = 0.0;
  Eigen::VectorXd beta;
  Bounds bounds{};
};

/// eta(x) = sum_j sum_k theta_jk N_k(x_j).
double eta(const GaetParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x);
double eta(const LinearParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// omega(x) = exp(alpha + eta(x)); the exponent is clipped to [-40, 40].
double density_ratio(const GaetParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x);
double density_ratio(const LinearParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x);
double density_ratio_from_eta(double alpha, double eta_value);

/// Posterior probability that an unlabeled instance is positive:
/// pi * omega / (pi * omega + 1 - pi).
double posterior(const GaetParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x);
double posterior(const LinearParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x);
double posterior_from_eta(double pi, double alpha, double eta_value);

/// Profiling multiplier (n0 + n1 * pi) / n.
double lambda_tilde(double pi, Eigen::Index n0, Eigen::Index n1);

/// Profile empirical log-likelihood of the two-sample PU model, evaluated in
/// log space; always <= 0. eta carries the additive part for all n rows
/// (labeled first).
double profile_loglik_from_eta(double pi, double alpha, const Eigen::VectorXd& eta_all,
                               Eigen::Index n0, Eigen::Index n1);
double profile_loglik(const GaetParams& params, const PuDataset& data);
double profile_loglik(const LinearParams& params, const PuDataset& data);

/// Convergence diagnostic sum_i p_i omega(x_i) - 1 with the profiled
/// empirical-likelihood masses p_i.
double empirical_normalization_gap_from_eta(double pi, double alpha,
                                            const Eigen::VectorXd& eta_all, Eigen::Index n0,
                                            Eigen::Index n1);
double empirical_normalization_gap(const GaetParams& params, const PuDataset& data);
double empirical_normalization_gap(const LinearParams& params, const PuDataset& data);

/// Additive parts for every row of the dataset (labeled rows first).
Eigen::VectorXd eta_all_rows(const GaetParams& params, const PuDataset& data);
Eigen::VectorXd eta_all_rows(const LinearParams& params, const PuDataset& data);

/// Numerically stable log(1 + exp(x)) and logistic function.
double log1pexp(double x);
double expit(double x);

}  // namespace putilt::gaet
