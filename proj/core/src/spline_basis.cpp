#include "putilt/spline_basis.hpp"

#include <algorithm>
#include <cmath>

#include "putilt/errors.hpp"
#include "putilt/quadrature.hpp"

namespace putilt::spline {

BasisSpec::BasisSpec(int order, std::vector<double> interior_knots) : order_(order) {
  if (order < 2) throw ParameterError("BasisSpec: order must be >= 2");
  for (std::size_t i = 0; i < interior_knots.size(); ++i) {
    const double t = interior_knots[i];
    if (!(t > 0.0 && t < 1.0)) {
      throw ParameterError("BasisSpec: interior knots must lie strictly inside (0,1)");
    }
    if (i > 0 && t < interior_knots[i - 1]) {
      throw ParameterError("BasisSpec: interior knots must be nondecreasing");
    }
  }
  knots_.assign(order, 0.0);
  knots_.insert(knots_.end(), interior_knots.begin(), interior_knots.end());
  knots_.insert(knots_.end(), order, 1.0);
}

int BasisSpec::find_span(double x) const {
  const int m = order_;
  const int last = m + interior_count() - 1;  // last nonempty span start
  if (x >= 1.0) return last;
  // largest s in [m-1, last] with knots_[s] <= x
  int lo = m - 1, hi = last;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (knots_[mid] <= x) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

BasisSpec make_spec(int order, int interior_knot_count, KnotPlacement placement,
                    std::span<const double> data) {
  if (order < 2) throw ParameterError("make_spec: order must be >= 2");
  if (interior_knot_count < 0) throw ParameterError("make_spec: interior knot count must be >= 0");

  std::vector<double> interior(interior_knot_count);
  const auto uniform_at = [&](int j) {
    return static_cast<double>(j + 1) / static_cast<double>(interior_knot_count + 1);
  };
  bool use_uniform = true;

  if (placement == KnotPlacement::quantile) {
    if (data.empty()) throw ParameterError("make_spec: quantile placement needs data");
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    use_uniform = false;
    for (int j = 0; j < interior_knot_count; ++j) {
      const double q = uniform_at(j);
      const double pos = q * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(lo);
      const double hi_val = sorted[std::min(lo + 1, sorted.size() - 1)];
      interior[j] = sorted[lo] + frac * (hi_val - sorted[lo]);
    }
    // Degenerate quantiles (ties, boundary hits) fall back to the uniform grid.
    for (int j = 0; j < interior_knot_count; ++j) {
      if (!(interior[j] > 0.0 && interior[j] < 1.0) ||
          (j > 0 && !(interior[j] > interior[j - 1]))) {
        use_uniform = true;
        break;
      }
    }
  }

  if (use_uniform) {
    for (int j = 0; j < interior_knot_count; ++j) interior[j] = uniform_at(j);
  }
  return BasisSpec(order, std::move(interior));
}

namespace {

// All order-m basis values that are nonzero on the span s, by the stable
// triangular recurrence; sums to one by construction.
void local_values(const std::vector<double>& t, int m, int s, double x, double* out) {
  std::vector<double> left(m), right(m);
  out[0] = 1.0;
  for (int j = 1; j < m; ++j) {
    left[j] = x - t[s + 1 - j];
    right[j] = t[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

}  // namespace

LocalBasis basis_local(const BasisSpec& spec, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("basis_local: x outside [0,1]; rescale features first");
  }
  const int m = spec.order();
  const int s = spec.find_span(x);
  LocalBasis out{s - m + 1, Eigen::VectorXd(m)};
  local_values(spec.knots(), m, s, x, out.values.data());
  return out;
}

LocalBasisDerivatives basis_derivatives_local(const BasisSpec& spec, double x, int nderiv) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("basis_derivatives_local: x outside [0,1]");
  }
  const int m = spec.order();
  const int degree = m - 1;
  const int nd = std::min(nderiv, degree);
  const std::vector<double>& t = spec.knots();
  const int s = spec.find_span(x);

  // Triangular table of lower-order basis values and knot differences.
  Eigen::MatrixXd ndu(m, m);
  std::vector<double> left(m), right(m);
  ndu(0, 0) = 1.0;
  for (int j = 1; j < m; ++j) {
    left[j] = x - t[s + 1 - j];
    right[j] = t[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  LocalBasisDerivatives out{s - m + 1, Eigen::MatrixXd::Zero(nderiv + 1, m)};
  for (int r = 0; r < m; ++r) out.values(0, r) = ndu(r, degree);

  Eigen::MatrixXd a(2, m);
  for (int r = 0; r < m; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = degree - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : degree - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      out.values(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = degree;
  for (int k = 1; k <= nd; ++k) {
    for (int r = 0; r < m; ++r) out.values(k, r) *= factor;
    factor *= degree - k;
  }
  return out;
}

Eigen::VectorXd basis_row(const BasisSpec& spec, double x) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(spec.size());
  const LocalBasis lb = basis_local(spec, x);
  row.segment(lb.first, spec.order()) = lb.values;
  return row;
}

Eigen::MatrixXd eval_basis(const BasisSpec& spec, std::span<const double> xs) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), spec.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const LocalBasis lb = basis_local(spec, xs[i]);
    out.row(static_cast<Eigen::Index>(i)).segment(lb.first, spec.order()) = lb.values;
  }
  return out;
}

Eigen::MatrixXd eval_basis(const BasisSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xs) {
  return eval_basis(spec, std::span<const double>(xs.data(), static_cast<std::size_t>(xs.size())));
}

Eigen::MatrixXd penalty_matrix(const BasisSpec& spec) {
  const int m = spec.order();
  if (m < 3) {
    throw ParameterError("penalty_matrix: second-derivative penalty needs order >= 3");
  }
  const int nb = spec.size();
  const std::vector<double>& t = spec.knots();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nb, nb);

  // N'' is a polynomial of degree m-3 on each span, so the integrand has
  // degree 2m-6; m-1 Gauss-Legendre nodes are exact (degree 2m-3).
  const int nodes = m - 1;
  const GaussLegendre& rule = gauss_legendre(nodes);

  const int first_span = m - 1;
  const int last_span = m + spec.interior_count() - 1;
  for (int s = first_span; s <= last_span; ++s) {
    const double a = t[s], b = t[s + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int q = 0; q < nodes; ++q) {
      const double x = mid + half * rule.nodes[q];
      const double w = half * rule.weights[q];
      const LocalBasisDerivatives d = basis_derivatives_local(spec, x, 2);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          S(d.first + i, d.first + j) += w * d.values(2, i) * d.values(2, j);
        }
      }
    }
  }
  // Enforce exact symmetry against accumulation order.
  S = 0.5 * (S + S.transpose()).eval();
  return S;
}

Eigen::VectorXd centering_weights(const BasisSpec& spec) {
  const int m = spec.order();
  const int nb = spec.size();
  const std::vector<double>& t = spec.knots();
  Eigen::VectorXd c(nb);
  for (int k = 0; k < nb; ++k) c[k] = (t[k + m] - t[k]) / static_cast<double>(m);
  return c;
}

}  // namespace putilt::spline
