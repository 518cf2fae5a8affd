#ifndef ROBUSTMETA_MODEL_HPP
#define ROBUSTMETA_MODEL_HPP

#include <vector>

#include "robustmeta/types.hpp"

namespace robustmeta {

// Per-study model locations: theta.mu() everywhere, or x_i' beta when the
// dataset carries covariates and theta holds coefficients.
std::vector<double> study_locations(const Dataset& data, const Theta& theta);

// Squared Mahalanobis distance (y - mu)^2 / (sigma2 + s2) of one study.
double mahalanobis_sq(const Study& study, const Theta& theta);

// Same, with the location supplied directly (regression path).
double mahalanobis_sq(double y, double location, double s2, double sigma2);

// Observed-data log-likelihood of the t model: the exact t log-density sum
// including all normalizing constants.  Requires finite nu >= 1.
double loglik_t(const Dataset& data, const Theta& theta);

// Observed-data log-likelihood of the normal model.
double loglik_normal(const Dataset& data, const Theta& theta);

}  // namespace robustmeta

#endif  // ROBUSTMETA_MODEL_HPP
