#include "robustmeta/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "robustmeta/model.hpp"
#include "robustmeta/specfun.hpp"

namespace robustmeta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> effect_sizes(const Dataset& data) {
  std::vector<double> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = data.studies[i].y;
  return y;
}

double mean_s2(const Dataset& data) {
  double m = 0.0;
  for (const auto& s : data.studies) m += s.s2;
  return m / static_cast<double>(data.size());
}

// Weighted least squares through the normal equations with a Cholesky solve;
// throws on a rank-deficient design.
std::vector<double> wls_solve(const Dataset& data, const std::vector<double>& row_weights,
                              const std::vector<double>& y) {
  const std::size_t n = data.size();
  const std::size_t p = data.n_covariates();
  std::vector<double> gram(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = data.covariates[i];
    const double w = row_weights[i];
    for (std::size_t j = 0; j < p; ++j) {
      rhs[j] += w * x[j] * y[i];
      for (std::size_t k = j; k < p; ++k) gram[j * p + k] += w * x[j] * x[k];
    }
  }
  double max_diag = 0.0;
  for (std::size_t j = 0; j < p; ++j) max_diag = std::max(max_diag, gram[j * p + j]);

  // In-place Cholesky on the upper triangle.
  std::vector<double> chol = gram;
  for (std::size_t j = 0; j < p; ++j) {
    double d = chol[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= chol[k * p + j] * chol[k * p + j];
    if (!(d > 1e-12 * std::max(max_diag, 1.0))) {
      throw std::invalid_argument("fit_tmeta_regression: rank-deficient covariate design");
    }
    const double r = std::sqrt(d);
    chol[j * p + j] = r;
    for (std::size_t k = j + 1; k < p; ++k) {
      double v = chol[j * p + k];
      for (std::size_t m = 0; m < j; ++m) v -= chol[m * p + j] * chol[m * p + k];
      chol[j * p + k] = v / r;
    }
  }
  // Solve R' z = rhs, then R beta = z.
  std::vector<double> z(p), beta(p);
  for (std::size_t j = 0; j < p; ++j) {
    double v = rhs[j];
    for (std::size_t k = 0; k < j; ++k) v -= chol[k * p + j] * z[k];
    z[j] = v / chol[j * p + j];
  }
  for (std::size_t jj = p; jj-- > 0;) {
    double v = z[jj];
    for (std::size_t k = jj + 1; k < p; ++k) v -= chol[jj * p + k] * beta[k];
    beta[jj] = v / chol[jj * p + jj];
  }
  return beta;
}

// Derivative of the observed log-likelihood in nu at fixed location/sigma2,
// as a function of nu with the distances held fixed.
double nu_score(double nu, const std::vector<double>& delta2) {
  double data_term = 0.0;
  for (double d2 : delta2) {
    const double tau = (nu + 1.0) / (nu + d2);
    data_term += std::log(tau) - tau;
  }
  data_term /= static_cast<double>(delta2.size());
  return -digamma(0.5 * nu) + std::log(0.5 * nu) + 1.0 + digamma(0.5 * (nu + 1.0)) -
         std::log(0.5 * (nu + 1.0)) + data_term;
}

struct SweepState {
  std::vector<double> location;  // per-study fitted locations
  double sigma2 = 0.0;
  double nu = kInf;
  bool nu_frozen_infinite = false;
};

// Shared ECME loop.  `regression` switches CM-step 1 between the weighted
// mean and weighted least squares; `normal_model` pins the weights at one and
// skips CM-step 3.
FitResult run_ecme(const Dataset& data, const Theta& init, const FitOptions& options,
                   bool regression, bool normal_model) {
  data.validate_for_fit();
  options.validate();
  init.validate();
  if (regression && !data.has_covariates()) {
    throw std::invalid_argument("fit_tmeta_regression: dataset has no covariates");
  }
  if (regression && init.location.size() != data.n_covariates()) {
    throw std::invalid_argument("fit_tmeta_regression: init coefficient length mismatch");
  }

  const std::size_t n = data.size();
  Theta theta = init;
  if (!normal_model && !theta.nu_infinite() && theta.nu > options.nu_max) theta.nu = kInf;
  bool nu_inf = normal_model || theta.nu_infinite();

  auto loglik = [&](const Theta& th) {
    return (normal_model || th.nu_infinite()) ? loglik_normal(data, th) : loglik_t(data, th);
  };

  FitResult result;
  result.model_kind = normal_model ? ModelKind::normal
                                   : (regression ? ModelKind::t_regression : ModelKind::t);
  result.loglik_trace.push_back(loglik(theta));

  std::vector<double> tau(n, 1.0), rw(n), loc = study_locations(data, theta);
  double ll_old = result.loglik_trace.front();

  for (int it = 1; it <= options.max_iter; ++it) {
    // E-step at the current theta.
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = data.studies[i];
      const double w = theta.sigma2 + s.s2;
      if (nu_inf) {
        tau[i] = 1.0;
      } else {
        const double d2 = mahalanobis_sq(s.y, loc[i], s.s2, theta.sigma2);
        tau[i] = (theta.nu + 1.0) / (theta.nu + d2);
      }
      rw[i] = tau[i] / w;
    }

    // CM-step 1: location given (sigma2, nu).
    if (regression) {
      theta.location = wls_solve(data, rw, effect_sizes(data));
    } else {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += rw[i] * data.studies[i].y;
        den += rw[i];
      }
      if (!(den > 0.0)) throw std::runtime_error("ECME: degenerate location update");
      theta.location[0] = num / den;
    }
    loc = study_locations(data, theta);

    // CM-step 2: one fixed-point step for sigma2, clamped at zero.
    {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& s = data.studies[i];
        const double w = theta.sigma2 + s.s2;
        const double r = s.y - loc[i];
        num += (tau[i] * r * r - s.s2) / (w * w);
        den += 1.0 / (w * w);
      }
      theta.sigma2 = std::max(num / den, 0.0);
    }

    // CM-step 3: nu by bisection on the observed-likelihood score.  Once the
    // score says infinite, the weights stay pinned at one.
    if (!normal_model && !nu_inf) {
      theta.nu = cm_update_nu(data, theta, options);
      if (theta.nu_infinite()) nu_inf = true;
    }

    const double ll_new = loglik(theta);
    result.loglik_trace.push_back(ll_new);
    result.iterations = it;

    const double dl = std::fabs(ll_new - ll_old);
    const bool rel_ok = dl <= options.tol * std::fabs(ll_new);
    const bool near_zero_ok = std::fabs(ll_new) < 1.0 && dl <= options.tol * (1.0 + std::fabs(ll_new));
    if (rel_ok || near_zero_ok) {
      result.converged = true;
      break;
    }
    ll_old = ll_new;
  }

  result.theta = theta;
  if (normal_model) result.theta.nu = kInf;
  result.weights.assign(n, 1.0);
  if (!normal_model && !nu_inf) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = data.studies[i];
      const double d2 = mahalanobis_sq(s.y, loc[i], s.s2, theta.sigma2);
      result.weights[i] = (theta.nu + 1.0) / (theta.nu + d2);
    }
  }
  return result;
}

FitResult best_of(FitResult a, FitResult b) {
  return a.loglik() >= b.loglik() ? std::move(a) : std::move(b);
}

Theta regression_start(const Dataset& data, bool robust, double nu0) {
  const auto y = effect_sizes(data);
  const std::size_t n = data.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = robust ? 1.0 : 1.0 / data.studies[i].s2;
  Theta t;
  t.location = wls_solve(data, w, y);
  const auto loc = study_locations(data, t);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - loc[i];
  const double rv = sample_variance(resid);
  t.sigma2 = robust ? rv : std::max(rv - mean_s2(data), 0.0);
  t.nu = nu0;
  return t;
}

}  // namespace

std::vector<double> e_step_weights(const Dataset& data, const Theta& theta) {
  if (theta.nu_infinite()) {
    throw std::domain_error("e_step_weights: requires finite nu");
  }
  theta.validate();
  const auto loc = study_locations(data, theta);
  std::vector<double> tau(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    const double d2 = mahalanobis_sq(s.y, loc[i], s.s2, theta.sigma2);
    tau[i] = (theta.nu + 1.0) / (theta.nu + d2);
  }
  return tau;
}

double cm_update_mu(const Dataset& data, const std::vector<double>& weights,
                    const Theta& theta) {
  if (weights.size() != data.size()) {
    throw std::invalid_argument("cm_update_mu: weight count mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    const double w = theta.sigma2 + s.s2;
    num += weights[i] * s.y / w;
    den += weights[i] / w;
  }
  if (!(den > 0.0)) throw std::runtime_error("cm_update_mu: degenerate denominator");
  return num / den;
}

double cm_update_sigma2(const Dataset& data, const std::vector<double>& weights,
                        double mu_new, const Theta& theta) {
  if (weights.size() != data.size()) {
    throw std::invalid_argument("cm_update_sigma2: weight count mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    const double w = theta.sigma2 + s.s2;
    const double r = s.y - mu_new;
    num += (weights[i] * r * r - s.s2) / (w * w);
    den += 1.0 / (w * w);
  }
  return std::max(num / den, 0.0);
}

double cm_update_nu(const Dataset& data, const Theta& theta_new, const FitOptions& options) {
  options.validate();
  const auto loc = study_locations(data, theta_new);
  std::vector<double> delta2(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    delta2[i] = mahalanobis_sq(s.y, loc[i], s.s2, theta_new.sigma2);
  }
  // Endpoint checks decide the boundary regimes before bisecting.
  if (nu_score(options.nu_max, delta2) > 0.0) return kInf;
  if (nu_score(options.nu_min, delta2) < 0.0) return options.nu_min;

  double lo = options.nu_min, hi = options.nu_max;
  constexpr double kNuTol = 1e-6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (nu_score(mid, delta2) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= kNuTol) return 0.5 * (lo + hi);
  }
  throw std::runtime_error("cm_update_nu: bisection exceeded its budget");
}

Theta moment_start(const Dataset& data, double nu0) {
  data.validate_for_fit();
  if (data.has_covariates()) return regression_start(data, /*robust=*/false, nu0);
  double num = 0.0, den = 0.0;
  for (const auto& s : data.studies) {
    num += s.y / s.s2;
    den += 1.0 / s.s2;
  }
  const auto y = effect_sizes(data);
  return Theta::scalar(num / den, std::max(sample_variance(y) - mean_s2(data), 0.0), nu0);
}

Theta robust_start(const Dataset& data, double nu0) {
  data.validate_for_fit();
  if (data.has_covariates()) return regression_start(data, /*robust=*/true, nu0);
  const auto y = effect_sizes(data);
  return Theta::scalar(median(y), sample_variance(y), nu0);
}

FitResult fit_tmeta(const Dataset& data, const Theta& init, const FitOptions& options) {
  return run_ecme(data, init, options, /*regression=*/false, /*normal_model=*/false);
}

FitResult fit_nmeta(const Dataset& data, const Theta& init, const FitOptions& options) {
  return run_ecme(data, init, options, /*regression=*/false, /*normal_model=*/true);
}

FitResult fit_tmeta_regression(const Dataset& data, const Theta& init,
                               const FitOptions& options) {
  return run_ecme(data, init, options, /*regression=*/true, /*normal_model=*/false);
}

FitResult fit_tmeta(const Dataset& data, const FitOptions& options) {
  // The likelihood can be multimodal; two deterministic starts and keeping
  // the better endpoint recovers the dominant mode on heavy-tailed data.
  return best_of(fit_tmeta(data, moment_start(data), options),
                 fit_tmeta(data, robust_start(data), options));
}

FitResult fit_nmeta(const Dataset& data, const FitOptions& options) {
  return best_of(fit_nmeta(data, moment_start(data), options),
                 fit_nmeta(data, robust_start(data), options));
}

FitResult fit_tmeta_regression(const Dataset& data, const FitOptions& options) {
  return best_of(fit_tmeta_regression(data, moment_start(data), options),
                 fit_tmeta_regression(data, robust_start(data), options));
}

}  // namespace robustmeta
