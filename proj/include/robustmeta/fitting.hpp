#ifndef ROBUSTMETA_FITTING_HPP
#define ROBUSTMETA_FITTING_HPP

#include <vector>

#include "robustmeta/types.hpp"

namespace robustmeta {

enum class ModelKind { normal, t, t_regression };

struct FitResult {
  Theta theta;
  std::vector<double> weights;        // expected tau_i at convergence
  std::vector<double> loglik_trace;   // L per iteration, starting at the init
  int iterations = 0;
  bool converged = false;
  ModelKind model_kind = ModelKind::t;

  double loglik() const { return loglik_trace.back(); }
};

// E-step: tau_i = (nu + 1) / (nu + delta2_i).  Requires finite nu.
std::vector<double> e_step_weights(const Dataset& data, const Theta& theta);

// CM-step 1: weighted location update; sigma2 is taken from theta.
double cm_update_mu(const Dataset& data, const std::vector<double>& weights,
                    const Theta& theta);

// CM-step 2: one fixed-point step for sigma2, clamped at zero.  The RHS
// denominators use the current iterate theta.sigma2.
double cm_update_sigma2(const Dataset& data, const std::vector<double>& weights,
                        double mu_new, const Theta& theta);

// CM-step 3: root of the nu score on [nu_min, nu_max] by bisection.  Returns
// +infinity when the score is positive at nu_max, nu_min when negative at
// nu_min.  theta_new carries the freshly updated location and sigma2.
double cm_update_nu(const Dataset& data, const Theta& theta_new,
                    const FitOptions& options);

// ECME fits from an explicit starting point.
FitResult fit_tmeta(const Dataset& data, const Theta& init, const FitOptions& options = {});
FitResult fit_nmeta(const Dataset& data, const Theta& init, const FitOptions& options = {});
FitResult fit_tmeta_regression(const Dataset& data, const Theta& init,
                               const FitOptions& options = {});

// Default-start drivers: run the moment start and a robust start, keep the
// fit with the higher final log-likelihood.
FitResult fit_tmeta(const Dataset& data, const FitOptions& options = {});
FitResult fit_nmeta(const Dataset& data, const FitOptions& options = {});
FitResult fit_tmeta_regression(const Dataset& data, const FitOptions& options = {});

// Deterministic starting points used by the drivers above.
Theta moment_start(const Dataset& data, double nu0 = 10.0);
Theta robust_start(const Dataset& data, double nu0 = 10.0);

}  // namespace robustmeta

#endif  // ROBUSTMETA_FITTING_HPP
