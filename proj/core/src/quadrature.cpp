#include "putilt/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace putilt {

namespace {

GaussLegendre compute_rule(int n) {
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n with the three-term recurrence; roots are
  // symmetric, so only the lower half is solved.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  static std::map<int, GaussLegendre> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
  return it->second;
}

double simpson_mean(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 3 || n % 2 == 0) {
    throw std::invalid_argument("simpson_mean: need an odd number of samples >= 3");
  }
  double acc = values.front() + values.back();
  for (std::size_t i = 1; i + 1 < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
  // h/3 * acc integrates over [0,1] with h = 1/(n-1); the mean equals the
  // integral since the interval has unit length.
  return acc / (3.0 * static_cast<double>(n - 1));
}

}  // namespace putilt
