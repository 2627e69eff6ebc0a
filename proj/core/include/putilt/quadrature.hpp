#pragma once

#include <cstddef>
#include <vector>

namespace putilt {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1],
/// exact for polynomials of degree <= 2n-1.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule lookup; thread-safe.
const GaussLegendre& gauss_legendre(int n);

/// Integrates f over [a, b] with an n-point Gauss-Legendre rule.
template <typename F>
double integrate_gl(const F& f, double a, double b, int n) {
  const GaussLegendre& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int q = 0; q < n; ++q) {
    acc += rule.weights[q] * f(mid + half * rule.nodes[q]);
  }
  return half * acc;
}

/// Composite Simpson mean of uniformly spaced samples over [0,1]
/// (values.size() must be odd). Used as the grid-level centering check.
double simpson_mean(const std::vector<double>& values);

}  // namespace putilt
