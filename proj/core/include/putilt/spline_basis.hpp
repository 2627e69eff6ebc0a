#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace putilt::spline {

enum class KnotPlacement { uniform, quantile };

/// Clamped B-spline system of order m on [0,1]: m repeated boundary knots at
/// 0 and 1 plus K_n interior knots, giving K_n + m basis functions.
class BasisSpec {
 public:
  BasisSpec(int order, std::vector<double> interior_knots);

  int order() const { return order_; }
  int interior_count() const { return static_cast<int>(knots_.size()) - 2 * order_; }
  /// Number of basis functions, K_n + m.
  int size() const { return static_cast<int>(knots_.size()) - order_; }
  /// Full clamped knot vector, length K_n + 2m.
  const std::vector<double>& knots() const { return knots_; }

  /// Index s of the knot span [t_s, t_{s+1}) containing x; x = 1 maps to the
  /// last nonempty span.
  int find_span(double x) const;

  bool operator==(const BasisSpec&) const = default;

 private:
  int order_;
  std::vector<double> knots_;
};

BasisSpec make_spec(int order, int interior_knot_count,
                    KnotPlacement placement = KnotPlacement::uniform,
                    std::span<const double> data = {});

/// Values of the m basis functions that are nonzero at x (all others vanish).
struct LocalBasis {
  int first;                   ///< index of the first nonzero basis function
  Eigen::VectorXd values;      ///< length m
};

/// Rows of derivative order 0..nderiv for the m nonzero basis functions at x.
struct LocalBasisDerivatives {
  int first;
  Eigen::MatrixXd values;      ///< (nderiv+1) x m; row d = d-th derivative
};

LocalBasis basis_local(const BasisSpec& spec, double x);
LocalBasisDerivatives basis_derivatives_local(const BasisSpec& spec, double x, int nderiv);

/// Dense row of all K_n + m basis values at x.
Eigen::VectorXd basis_row(const BasisSpec& spec, double x);

/// Design matrix: one row per evaluation point, one column per basis function.
/// Rows sum to one (partition of unity); throws DomainError if any x is
/// outside [0,1].
Eigen::MatrixXd eval_basis(const BasisSpec& spec, std::span<const double> xs);
Eigen::MatrixXd eval_basis(const BasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xs);

/// Gram matrix of second derivatives, S_kl = int_0^1 N''_k N''_l dt, computed
/// exactly by per-interval Gauss-Legendre. Requires order >= 3.
Eigen::MatrixXd penalty_matrix(const BasisSpec& spec);

/// c_k = int_0^1 N_k dt = (t_{k+m} - t_k) / m; the entries sum to one.
Eigen::VectorXd centering_weights(const BasisSpec& spec);

}  // namespace putilt::spline
