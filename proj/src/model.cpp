#include "robustmeta/model.hpp"

#include <cmath>
#include <stdexcept>

#include "robustmeta/specfun.hpp"

namespace robustmeta {

std::vector<double> study_locations(const Dataset& data, const Theta& theta) {
  const std::size_t n = data.size();
  std::vector<double> loc(n);
  if (theta.scalar_location()) {
    const double mu = theta.location.front();
    for (std::size_t i = 0; i < n; ++i) loc[i] = mu;
    return loc;
  }
  if (!data.has_covariates() || data.n_covariates() != theta.location.size()) {
    throw std::invalid_argument(
        "study_locations: coefficient length does not match covariate count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < theta.location.size(); ++j) {
      v += data.covariates[i][j] * theta.location[j];
    }
    loc[i] = v;
  }
  return loc;
}

double mahalanobis_sq(double y, double location, double s2, double sigma2) {
  const double r = y - location;
  return r * r / (sigma2 + s2);
}

double mahalanobis_sq(const Study& study, const Theta& theta) {
  return mahalanobis_sq(study.y, theta.mu(), study.s2, theta.sigma2);
}

double loglik_t(const Dataset& data, const Theta& theta) {
  if (theta.nu_infinite() || !(theta.nu >= 1.0)) {
    throw std::domain_error("loglik_t: requires finite nu >= 1");
  }
  const auto loc = study_locations(data, theta);
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    const double w = theta.sigma2 + s.s2;
    if (!(w > 0.0)) {
      throw std::domain_error("loglik_t: sigma2 + s2 must be positive (study '" + s.id + "')");
    }
    ll += student_t_logpdf(s.y, loc[i], w, theta.nu);
  }
  return ll;
}

double loglik_normal(const Dataset& data, const Theta& theta) {
  const auto loc = study_locations(data, theta);
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    const double w = theta.sigma2 + s.s2;
    if (!(w > 0.0)) {
      throw std::domain_error("loglik_normal: sigma2 + s2 must be positive (study '" +
                              s.id + "')");
    }
    ll += normal_logpdf(s.y, loc[i], w);
  }
  return ll;
}

}  // namespace robustmeta
