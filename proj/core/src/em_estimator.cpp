#include "putilt/em_estimator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "putilt/errors.hpp"
#include "putilt/parallel.hpp"

namespace putilt::em {

namespace {

constexpr double kMonotoneSlack = 1e-8;

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

Eigen::VectorXd working_response_from_eta(double pi, double alpha,
                                          const Eigen::VectorXd& eta_all, Eigen::Index n0) {
  Eigen::VectorXd y(eta_all.size());
  y.head(n0).setOnes();
  for (Eigen::Index i = n0; i < eta_all.size(); ++i) {
    y[i] = gaet::posterior_from_eta(pi, alpha, eta_all[i]);
  }
  return y;
}

}  // namespace

std::vector<double> default_kappa_grid() {
  // 8 points, log-spaced over [1e-4, 1e2].
  std::vector<double> grid(8);
  for (int i = 0; i < 8; ++i) grid[i] = std::pow(10.0, -4.0 + 6.0 * i / 7.0);
  return grid;
}

void EmConfig::validate() const {
  if (n_starts < 1) throw ParameterError("EmConfig: n_starts must be >= 1");
  if (max_em_iter < 1) throw ParameterError("EmConfig: max_em_iter must be >= 1");
  if (!(tol_loglik > 0.0) || !(tol_pi_rel > 0.0)) {
    throw ParameterError("EmConfig: tolerances must be positive");
  }
  if (kappa_grid.empty()) throw ParameterError("EmConfig: kappa grid must be nonempty");
  for (double k : kappa_grid) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw ParameterError("EmConfig: invalid kappa");
  }
}

double FitResult::alpha() const {
  return model == Model::gaet ? gaet_params->alpha() : linear_params->alpha;
}

gam::WorkingResponse e_step(const gaet::GaetParams& params, const gaet::PuDataset& data) {
  gam::WorkingResponse out;
  out.n_labeled = data.n0();
  out.y.resize(data.n());
  out.y.head(data.n0()).setOnes();
  for (Eigen::Index i = 0; i < data.n1(); ++i) {
    out.y[data.n0() + i] = gaet::posterior(params, data.unlabeled().row(i));
  }
  return out;
}

gam::WorkingResponse e_step(const gaet::LinearParams& params, const gaet::PuDataset& data) {
  gam::WorkingResponse out;
  out.n_labeled = data.n0();
  out.y.resize(data.n());
  out.y.head(data.n0()).setOnes();
  for (Eigen::Index i = 0; i < data.n1(); ++i) {
    out.y[data.n0() + i] = gaet::posterior(params, data.unlabeled().row(i));
  }
  return out;
}

double update_pi(const gam::WorkingResponse& y, Eigen::Index n0, Eigen::Index n1,
                 double pi_min) {
  if (n1 < 1) throw ParameterError("update_pi: n1 must be >= 1");
  if (y.y.size() != n0 + n1) throw ParameterError("update_pi: response length");
  const double mean = y.y.tail(n1).mean();
  return clip(mean, pi_min, 1.0 - pi_min);
}

double shift_constant(double pi, Eigen::Index n0, Eigen::Index n1) {
  return std::log(static_cast<double>(n0) / static_cast<double>(n1) + pi) - std::log(1.0 - pi);
}

namespace {

// Shared EM loop. The model adapter supplies the M-step and the resulting
// (alpha_star, eta) pair; everything else (E-step, pi update, shifting,
// stopping) is identical for the additive and linear models.
template <typename MStep>
void em_loop(const gaet::PuDataset& data, const EmConfig& config, double init_pi,
             double init_alpha, const Eigen::VectorXd& init_eta, MStep&& mstep,
             FitResult& out, double& final_alpha) {
  const Eigen::Index n0 = data.n0();
  const Eigen::Index n1 = data.n1();
  const double pi_min = config.bounds.pi_min;

  double pi = clip(init_pi, pi_min, 1.0 - pi_min);
  double alpha = init_alpha;
  Eigen::VectorXd eta_all = init_eta;
  double ell = gaet::profile_loglik_from_eta(pi, alpha, eta_all, n0, n1);

  out.loglik_trace.assign(1, ell);
  out.pi_trace.assign(1, pi);
  out.converged = false;
  out.monotone_ok = true;

  int r = 0;
  for (; r < config.max_em_iter; ++r) {
    const Eigen::VectorXd y = working_response_from_eta(pi, alpha, eta_all, n0);
    const double pi_new = clip(y.tail(n1).mean(), pi_min, 1.0 - pi_min);
    const double c = shift_constant(pi_new, n0, n1);

    double alpha_star = 0.0;
    mstep(y, alpha + c, alpha_star, eta_all);  // updates eta_all in place

    double alpha_new = alpha_star - c;
    if (std::abs(alpha_new) > config.bounds.alpha_max) {
      warn("em_fit: |alpha| exceeded the sieve bound and was clipped");
      alpha_new = clip(alpha_new, -config.bounds.alpha_max, config.bounds.alpha_max);
    }

    const double ell_new = gaet::profile_loglik_from_eta(pi_new, alpha_new, eta_all, n0, n1);
    out.loglik_trace.push_back(ell_new);
    out.pi_trace.push_back(pi_new);
    assert(ell_new >= ell - kMonotoneSlack);
    if (ell_new < ell - kMonotoneSlack) out.monotone_ok = false;

    const bool stop = std::abs(ell_new - ell) < config.tol_loglik &&
                      std::abs(pi_new - pi) / pi < config.tol_pi_rel;
    pi = pi_new;
    alpha = alpha_new;
    ell = ell_new;
    if (stop) {
      out.converged = true;
      ++r;
      break;
    }
  }

  out.iterations = r;
  out.posteriors.resize(n1);
  for (Eigen::Index i = 0; i < n1; ++i) {
    out.posteriors[i] = gaet::posterior_from_eta(pi, alpha, eta_all[n0 + i]);
  }
}

}  // namespace

FitResult em_fit_single(const gaet::PuDataset& data, const EmConfig& config, double kappa,
                        const gaet::GaetParams& init, const gam::AdditiveDesign& design) {
  config.validate();
  FitResult out;
  out.model = Model::gaet;
  out.kappa_selected = kappa;

  Eigen::MatrixXd theta = init.theta();
  gam::AdditiveFit last_fit;
  bool have_fit = false;

  // eta at the initial coefficients, computed through the cached design.
  Eigen::VectorXd init_eta = design.design() * design.coef_from_theta(0.0, theta);

  auto mstep = [&](const Eigen::VectorXd& y, double warm_alpha_star, double& alpha_star,
                   Eigen::VectorXd& eta_all) {
    gam::WorkingResponse resp{y, data.n0()};
    gam::AdditiveFit warm;
    warm.alpha_star = warm_alpha_star;
    warm.theta = theta;
    last_fit = gam::fit_additive_logistic(design, resp, kappa, warm);
    have_fit = true;
    theta = last_fit.theta;
    alpha_star = last_fit.alpha_star;
    eta_all = design.design() * last_fit.coef;
    eta_all.array() -= last_fit.alpha_star;
  };

  em_loop(data, config, init.pi(), init.alpha(), init_eta, mstep, out);

  out.gaet_params.emplace(out.pi_trace.back(),
                          clip(out.loglik_trace.empty() ? 0.0 : 0.0, 0.0, 0.0) +
                              (have_fit ? last_fit.alpha_star - shift_constant(
                                                                    out.pi_trace.back(),
                                                                    data.n0(), data.n1())
                                        : init.alpha()),
                          theta, config.spec, config.bounds);
  out.edf = have_fit ? last_fit.edf : 0.0;
  return out;
}

FitResult em_fit_single(const gaet::PuDataset& data, const EmConfig& config, double kappa,
                        const gaet::GaetParams& init) {
  const gam::AdditiveDesign design(data.stacked(), config.spec);
  return em_fit_single(data, config, kappa, init, design);
}

FitResult em_fit_single(const gaet::PuDataset& data, const EmConfig& config,
                        const gaet::LinearParams& init) {
  config.validate();
  FitResult out;
  out.model = Model::linear;
  out.kappa_selected = 0.0;

  const Eigen::MatrixXd features = data.stacked();
  Eigen::VectorXd beta = init.beta;
  double last_intercept = init.alpha;

  Eigen::VectorXd init_eta = features * beta;

  auto mstep = [&](const Eigen::VectorXd& y, double warm_alpha_star, double& alpha_star,
                   Eigen::VectorXd& eta_all) {
    (void)warm_alpha_star;
    gam::WorkingResponse resp{y, data.n0()};
    auto [intercept, b] = gam::fit_linear_logistic(features, resp);
    beta = b;
    last_intercept = intercept;
    alpha_star = intercept;
    eta_all = features * beta;
  };

  em_loop(data, config, init.pi, init.alpha, init_eta, mstep, out);

  gaet::LinearParams params;
  params.pi = out.pi_trace.back();
  params.alpha = last_intercept - shift_constant(params.pi, data.n0(), data.n1());
  params.alpha = clip(params.alpha, -config.bounds.alpha_max, config.bounds.alpha_max);
  params.beta = beta;
  params.bounds = config.bounds;
  out.linear_params = params;
  out.edf = static_cast<double>(data.p() + 1);
  return out;
}

gaet::GaetParams random_gaet_init(const gaet::PuDataset& data, const EmConfig& config,
                                  Rng& rng) {
  const Eigen::Index nb = config.spec.size();
  const Eigen::VectorXd c = spline::centering_weights(config.spec);
  Eigen::MatrixXd theta(data.p(), nb);
  const double pi0 = rng.uniform(0.05, 0.95);
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    for (Eigen::Index k = 0; k < nb; ++k) theta(j, k) = rng.normal(0.0, 0.25);
    theta.row(j).array() -= c.dot(theta.row(j));
  }
  return gaet::GaetParams(pi0, 0.0, std::move(theta), config.spec, config.bounds);
}

gaet::LinearParams random_linear_init(const gaet::PuDataset& data, const EmConfig& config,
                                      Rng& rng) {
  gaet::LinearParams params;
  params.pi = rng.uniform(0.05, 0.95);
  params.alpha = 0.0;
  params.beta.resize(data.p());
  for (Eigen::Index j = 0; j < data.p(); ++j) params.beta[j] = rng.normal(0.0, 0.25);
  params.bounds = config.bounds;
  return params;
}

FitResult em_fit(const gaet::PuDataset& data, const EmConfig& config) {
  config.validate();
  const bool linear = config.model == Model::linear;
  const std::size_t n_kappa = linear ? 1 : config.kappa_grid.size();
  const std::size_t n_cells = n_kappa * static_cast<std::size_t>(config.n_starts);

  std::unique_ptr<gam::AdditiveDesign> design;
  if (!linear) design = std::make_unique<gam::AdditiveDesign>(data.stacked(), config.spec);

  std::vector<std::optional<FitResult>> cells(n_cells);
  parallel_for(n_cells, config.threads, [&](std::size_t cell) {
    const std::size_t ki = cell / config.n_starts;
    const std::size_t start = cell % config.n_starts;
    Rng rng(Rng::derive(config.seed, start, ki));
    try {
      FitResult fit;
      if (linear) {
        fit = em_fit_single(data, config, random_linear_init(data, config, rng));
      } else {
        fit = em_fit_single(data, config, config.kappa_grid[ki],
                            random_gaet_init(data, config, rng), *design);
      }
      fit.start_index = static_cast<int>(start);
      cells[cell] = std::move(fit);
    } catch (const gam::NonConvergenceError&) {
      // failed start; recorded as an empty cell
    }
  });

  // Best start per kappa by final profile log-likelihood, then AIC over kappa.
  int best_ki = -1;
  double best_aic = std::numeric_limits<double>::infinity();
  std::vector<int> best_start(n_kappa, -1);
  for (std::size_t ki = 0; ki < n_kappa; ++ki) {
    double best_ell = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < config.n_starts; ++s) {
      const auto& cell = cells[ki * config.n_starts + s];
      if (cell && cell->loglik() > best_ell) {
        best_ell = cell->loglik();
        best_start[ki] = s;
      }
    }
    if (best_start[ki] < 0) continue;
    const FitResult& fit = *cells[ki * config.n_starts + best_start[ki]];
    const double aic = -2.0 * fit.loglik() + 2.0 * (fit.edf + 2.0);
    if (aic < best_aic) {
      best_aic = aic;
      best_ki = static_cast<int>(ki);
    }
  }
  if (best_ki < 0) throw EstimationError("em_fit: every start failed to converge");

  FitResult winner = std::move(*cells[best_ki * config.n_starts + best_start[best_ki]]);
  winner.aic = best_aic;
  return winner;
}

Classification classify(const FitResult& fit) {
  Classification out;
  out.labels.resize(static_cast<std::size_t>(fit.posteriors.size()));
  for (Eigen::Index i = 0; i < fit.posteriors.size(); ++i) {
    out.labels[static_cast<std::size_t>(i)] = fit.posteriors[i] > 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace putilt::em
