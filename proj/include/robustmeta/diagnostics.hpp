#ifndef ROBUSTMETA_DIAGNOSTICS_HPP
#define ROBUSTMETA_DIAGNOSTICS_HPP

#include <string>
#include <vector>

#include "robustmeta/fitting.hpp"
#include "robustmeta/types.hpp"

namespace robustmeta {

struct OutlierRecord {
  std::string id;
  double y = 0.0;
  double s2 = 0.0;
  double tau = 0.0;       // expected weight tau_i
  double inv_tau = 0.0;
  double u = 0.0;         // precision-share normalizer u_i
  double u_tau = 0.0;
  double mahalanobis_sq = 0.0;
  bool outlier = false;
};

struct OutlierReport {
  std::vector<OutlierRecord> records;
  double critical_tau = 0.0;       // flag when tau_i < critical_tau
  double inv_critical_tau = 0.0;   // the line drawn in inverse-weight plots
  double alpha = 0.05;
  double identity_mean = 0.0;      // mean of u_i tau_i (Proposition 2)
  bool sigma2_was_zero = false;

  std::vector<std::string> outlier_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : records) {
      if (r.outlier) ids.push_back(r.id);
    }
    return ids;
  }
};

// u_i = N / (sigma2 + s_i^2) / sum_j 1/(sigma2 + s_j^2); they average to one.
std::vector<double> study_u_weights(const Dataset& data, const Theta& theta_hat);

// Mean of u_i tau_i over the studies.  At an interior ML point this equals
// one; at sigma2 = 0 it may exceed one.
double check_prop2_identity(const std::vector<double>& weights, const std::vector<double>& u,
                            double sigma2_hat);

// Critical weight (1 + 1/nu) * BetaQuantile(alpha; nu/2, 1/2).  An infinite
// nu_hat is evaluated at the nu_max cap, the normal-theory limit.
double critical_weight(double nu_hat, Probability alpha, double nu_max = 1e6);

// Classify each study: outlier iff tau_i < critical weight (strict).
OutlierReport detect_outliers(const Dataset& data, const FitResult& fit, Probability alpha);

}  // namespace robustmeta

#endif  // ROBUSTMETA_DIAGNOSTICS_HPP
