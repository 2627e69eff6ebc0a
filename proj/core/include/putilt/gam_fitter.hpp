#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <vector>

#include "putilt/spline_basis.hpp"

namespace putilt::gam {

/// Quasi-binomial responses in [0,1]; the first n_labeled entries are 1.
struct WorkingResponse {
  Eigen::VectorXd y;
  Eigen::Index n_labeled = 0;

  void validate() const;
};

/// Cached basis expansion of a feature matrix. The design holds an intercept
/// column followed by p blocks of centered basis columns B_j Z, where Z is an
/// orthonormal basis of {theta : c . theta = 0}; the centering constraint is
/// therefore satisfied by every coefficient vector the solver can reach, which
/// is an exact reparameterization of projecting each Newton iterate and
/// absorbing the constants into the intercept.
class AdditiveDesign {
 public:
  AdditiveDesign(const Eigen::Ref<const Eigen::MatrixXd>& features01,
                 const spline::BasisSpec& spec);

  const spline::BasisSpec& spec() const { return spec_; }
  Eigen::Index n() const { return design_.rows(); }
  Eigen::Index p() const { return p_; }
  /// Basis size K_n + m.
  Eigen::Index nb() const { return null_basis_.rows(); }
  /// Total coefficient dimension 1 + p * (nb - 1).
  Eigen::Index dim() const { return design_.cols(); }

  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::MatrixXd& null_basis() const { return null_basis_; }
  const Eigen::MatrixXd& penalty_reduced() const { return penalty_reduced_; }

  /// Expands reduced coefficients into centered per-component rows (p x nb).
  Eigen::MatrixXd theta_from_coef(const Eigen::Ref<const Eigen::VectorXd>& coef) const;
  /// Packs (alpha_*, centered theta) into the reduced coefficient vector.
  Eigen::VectorXd coef_from_theta(double alpha_star,
                                  const Eigen::Ref<const Eigen::MatrixXd>& theta) const;

 private:
  spline::BasisSpec spec_;
  Eigen::Index p_;
  Eigen::MatrixXd design_;
  Eigen::MatrixXd null_basis_;
  Eigen::MatrixXd penalty_reduced_;
};

/// Result of the penalized additive-logistic M-step.
struct AdditiveFit {
  double alpha_star = 0.0;
  Eigen::MatrixXd theta;              ///< p x nb, rows centered
  double kappa = 0.0;
  double edf = 0.0;                   ///< trace of the final influence operator
  double objective = 0.0;             ///< penalized objective at the solution
  bool converged = false;
  int iterations = 0;
  Eigen::VectorXd coef;               ///< reduced coefficients (intercept first)
  std::vector<double> objective_trace;
};

/// Thrown when IRLS fails to reach a stationary point; carries the last
/// iterate for diagnostics.
struct NonConvergenceError : std::runtime_error {
  NonConvergenceError(const std::string& msg, AdditiveFit last)
      : std::runtime_error(msg), last_fit(std::move(last)) {}
  AdditiveFit last_fit;
};

/// Maximizes sum_i [ y_i f_i - log(1 + e^{f_i}) ] - kappa * sum_j theta_j' S
/// theta_j over f = alpha_* + sum_j nu_j(x_ij) by Newton iteration with
/// step-halving. The objective is concave, so accepted steps never decrease
/// it.
AdditiveFit fit_additive_logistic(const AdditiveDesign& design, const WorkingResponse& y,
                                  double kappa,
                                  const std::optional<AdditiveFit>& init = std::nullopt);
AdditiveFit fit_additive_logistic(const Eigen::Ref<const Eigen::MatrixXd>& features01,
                                  const WorkingResponse& y, const spline::BasisSpec& spec,
                                  double kappa,
                                  const std::optional<AdditiveFit>& init = std::nullopt);

/// Unpenalized logistic fit on raw features; returns (intercept, beta).
std::pair<double, Eigen::VectorXd> fit_linear_logistic(
    const Eigen::Ref<const Eigen::MatrixXd>& features, const WorkingResponse& y);

/// Effective degrees of freedom of a converged fit: the trace of
/// F (F' W F + H_pen)^{-1} F' W with the final IRLS weights W and the penalty
/// Hessian H_pen. Equals the rank of the design at kappa = 0.
double effective_df(const AdditiveFit& fit, const AdditiveDesign& design,
                    const WorkingResponse& y);

}  // namespace putilt::gam
