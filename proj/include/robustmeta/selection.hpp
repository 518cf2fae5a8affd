#ifndef ROBUSTMETA_SELECTION_HPP
#define ROBUSTMETA_SELECTION_HPP

#include <string>
#include <vector>

#include "robustmeta/fitting.hpp"
#include "robustmeta/types.hpp"

namespace robustmeta {

struct ComparisonRow {
  ModelKind model_kind = ModelKind::normal;
  std::vector<double> location;  // mu, or beta for the regression row
  double sigma = 0.0;            // reported as sqrt(sigma2)
  double nu = 0.0;               // +infinity in the normal limit
  double neg_loglik = 0.0;
  double bic = 0.0;
  int n_params = 0;
  bool converged = false;
  double wall_time_ms = 0.0;
  std::string error;  // non-empty when this row's fit failed

  bool failed() const { return !error.empty(); }
};

// BIC = 2 * neg_loglik + n_params * ln(n_studies).
double bic(double neg_loglik, int n_params, std::size_t n_studies);

// Fit nMeta and tMeta (and the t regression when covariates are present);
// rows come back sorted by BIC ascending, failed rows last.
std::vector<ComparisonRow> compare_models(const Dataset& data, const FitOptions& options = {});

std::string model_kind_name(ModelKind kind);

}  // namespace robustmeta

#endif  // ROBUSTMETA_SELECTION_HPP
