#include "robustmeta/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "robustmeta/model.hpp"
#include "robustmeta/specfun.hpp"

namespace robustmeta {

std::vector<double> study_u_weights(const Dataset& data, const Theta& theta_hat) {
  const std::size_t n = data.size();
  double total = 0.0;
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = 1.0 / (theta_hat.sigma2 + data.studies[i].s2);
    total += u[i];
  }
  for (std::size_t i = 0; i < n; ++i) u[i] *= static_cast<double>(n) / total;
  return u;
}

double check_prop2_identity(const std::vector<double>& weights, const std::vector<double>& u,
                            double sigma2_hat) {
  (void)sigma2_hat;  // the caller interprets the mean against the sigma2 regime
  if (weights.size() != u.size() || weights.empty()) {
    throw std::invalid_argument("check_prop2_identity: weight/u length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * u[i];
  return acc / static_cast<double>(weights.size());
}

double critical_weight(double nu_hat, Probability alpha, double nu_max) {
  const double nu = std::isinf(nu_hat) ? nu_max : nu_hat;
  if (!(nu >= 1.0)) throw std::domain_error("critical_weight: nu_hat must be >= 1");
  const double p = alpha.value();
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("critical_weight: alpha must lie strictly in (0, 1)");
  }
  return (1.0 + 1.0 / nu) * beta_quantile(alpha, 0.5 * nu, 0.5);
}

OutlierReport detect_outliers(const Dataset& data, const FitResult& fit, Probability alpha) {
  if (fit.weights.size() != data.size()) {
    throw std::invalid_argument("detect_outliers: fit does not match the dataset");
  }
  OutlierReport report;
  report.alpha = alpha.value();
  report.sigma2_was_zero = fit.theta.sigma2 == 0.0;
  report.critical_tau = critical_weight(fit.theta.nu, alpha);
  report.inv_critical_tau = 1.0 / report.critical_tau;

  const auto u = study_u_weights(data, fit.theta);
  report.identity_mean = check_prop2_identity(fit.weights, u, fit.theta.sigma2);

  const auto loc = study_locations(data, fit.theta);
  report.records.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    OutlierRecord rec;
    rec.id = s.id;
    rec.y = s.y;
    rec.s2 = s.s2;
    rec.tau = fit.weights[i];
    rec.inv_tau = 1.0 / rec.tau;
    rec.u = u[i];
    rec.u_tau = u[i] * rec.tau;
    rec.mahalanobis_sq = mahalanobis_sq(s.y, loc[i], s.s2, fit.theta.sigma2);
    rec.outlier = rec.tau < report.critical_tau;  // strict: ties are normal
    report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace robustmeta
