#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "putilt/dataset.hpp"
#include "putilt/gaet_model.hpp"
#include "putilt/gam_fitter.hpp"
#include "putilt/rng.hpp"
#include "putilt/spline_basis.hpp"

namespace putilt::em {

enum class Model { gaet, linear };

std::vector<double> default_kappa_grid();

struct EmConfig {
  int n_starts = 20;
  int max_em_iter = 500;
  double tol_loglik = 1e-4;   ///< absolute increment threshold for the profile log-likelihood
  double tol_pi_rel = 1e-4;   ///< relative-change threshold for pi
  std::vector<double> kappa_grid = default_kappa_grid();
  spline::BasisSpec spec = spline::make_spec(4, 6);
  std::uint64_t seed = 0;
  Model model = Model::gaet;
  gaet::Bounds bounds{};
  int threads = 1;            ///< 0 = all hardware threads

  void validate() const;
};

struct FitResult {
  Model model = Model::gaet;
  std::optional<gaet::GaetParams> gaet_params;
  std::optional<gaet::LinearParams> linear_params;
  std::vector<double> loglik_trace;   ///< profile log-likelihood per iteration, entry 0 at init
  std::vector<double> pi_trace;
  Eigen::VectorXd posteriors;         ///< final E-step values for the unlabeled rows
  double kappa_selected = 0.0;
  double edf = 0.0;
  double aic = 0.0;
  int start_index = 0;
  int iterations = 0;
  bool converged = false;
  bool monotone_ok = true;            ///< trace nondecreasing within 1e-8

  double loglik() const { return loglik_trace.back(); }
  double pi() const { return pi_trace.back(); }
  double alpha() const;
};

struct Classification {
  std::vector<int> labels;  ///< one 0/1 label per unlabeled row
};

/// Posterior working responses: 1 for labeled rows, Bayes posteriors for
/// unlabeled rows.
gam::WorkingResponse e_step(const gaet::GaetParams& params, const gaet::PuDataset& data);
gam::WorkingResponse e_step(const gaet::LinearParams& params, const gaet::PuDataset& data);

/// Mean of the unlabeled working responses, clipped to [pi_min, 1 - pi_min].
double update_pi(const gam::WorkingResponse& y, Eigen::Index n0, Eigen::Index n1,
                 double pi_min = 1e-3);

/// c = log(n0/n1 + pi) - log(1 - pi); the M-step intercept is alpha + c.
double shift_constant(double pi, Eigen::Index n0, Eigen::Index n1);

/// One EM run from a given start at a fixed roughness penalty.
FitResult em_fit_single(const gaet::PuDataset& data, const EmConfig& config, double kappa,
                        const gaet::GaetParams& init);
FitResult em_fit_single(const gaet::PuDataset& data, const EmConfig& config,
                        const gaet::LinearParams& init);
/// Fast-path overload reusing a prebuilt design for the stacked rows.
FitResult em_fit_single(const gaet::PuDataset& data, const EmConfig& config, double kappa,
                        const gaet::GaetParams& init, const gam::AdditiveDesign& design);

/// Multi-start EM over the kappa grid; the winner per kappa is the start with
/// the largest final profile log-likelihood, and kappa is selected by
/// AIC = -2 loglik + 2 (edf + 2).
FitResult em_fit(const gaet::PuDataset& data, const EmConfig& config);

/// Random start: pi ~ U[0.05, 0.95], alpha = 0, theta rows i.i.d.
/// N(0, 0.25^2) then centered (beta likewise for the linear model).
gaet::GaetParams random_gaet_init(const gaet::PuDataset& data, const EmConfig& config, Rng& rng);
gaet::LinearParams random_linear_init(const gaet::PuDataset& data, const EmConfig& config,
                                      Rng& rng);

/// Thresholds posteriors at 0.5; a tie maps to label 0.
Classification classify(const FitResult& fit);

}  // namespace putilt::em
