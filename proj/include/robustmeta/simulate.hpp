#ifndef ROBUSTMETA_SIMULATE_HPP
#define ROBUSTMETA_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "robustmeta/types.hpp"

namespace robustmeta {

// Within-study variance law for the generator.
struct S2Law {
  enum class Kind { fixed, uniform, list };
  Kind kind = Kind::fixed;
  double value = 1.0;           // fixed
  double lo = 0.0, hi = 1.0;    // uniform
  std::vector<double> values;   // list, recycled over studies

  void validate() const;
};

struct SimConfig {
  int n_studies = 0;
  double mu_true = 0.0;
  double sigma2_true = 0.0;
  double nu_true = std::numeric_limits<double>::infinity();  // inf => normal generator
  S2Law s2_law;
  std::uint64_t seed = 0;
  std::string name = "simulated";

  bool normal_generator() const { return std::isinf(nu_true); }
  void validate() const;
};

struct ContaminationSpec {
  enum class Mode { uniform_shift, point_mass };
  Mode mode = Mode::uniform_shift;
  double lo = 0.0, hi = 0.0;  // uniform_shift interval
  double value = 0.0;         // point_mass effect size
  double s2_out = 1.0;        // within-study variance of injected studies
  int count = 0;

  void validate() const;
};

// Draw a dataset from the latent-weight generative model: tau_i ~
// Gamma(nu/2, nu/2), b_i | tau ~ N(0, sigma2/tau), e_i | tau ~ N(0, s2_i/tau).
Dataset sample_dataset(const SimConfig& config);

// Append `count` contaminated studies; the input dataset is not modified.
Dataset inject_outliers(const Dataset& data, const ContaminationSpec& spec, std::uint64_t seed);

struct BreakdownRow {
  double fraction = 0.0;
  double magnitude = 0.0;
  int replicate = 0;
  std::string model;  // "t" or "normal"
  double mu_hat = 0.0;
  double abs_error = 0.0;
  double sigma2_hat = 0.0;
  double nu_hat = 0.0;
};

// Contaminate `base` draws with point-mass outliers of the given magnitudes
// (offsets from mu_true) at each fraction, fit both models, and record the
// location error, one row per (fraction, magnitude, replicate, model).
std::vector<BreakdownRow> breakdown_experiment(const SimConfig& base,
                                               const std::vector<double>& magnitudes,
                                               const std::vector<double>& fractions,
                                               int replicates, std::uint64_t seed,
                                               double s2_out = 0.25);

struct NullWeightSummary {
  double nu_hat = 0.0;
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double ks_tau_stat = 0.0;
  double ks_tau_pvalue = 0.0;
  double ks_delta2_stat = 0.0;
  double ks_delta2_pvalue = 0.0;
  double flag_rate = 0.0;
  bool degenerate = false;  // nu_hat landed in the normal regime
};

// Fit one large simulated dataset and compare the fitted weights to the
// scaled-Beta law and the distances to F(1, nu).
NullWeightSummary null_weight_study(const SimConfig& config, Probability alpha);

// Two-sided one-sample Kolmogorov-Smirnov helpers.  `cdf_values` are F(x_i)
// for the sample, in any order.
double ks_statistic(std::vector<double> cdf_values);
double ks_pvalue(double statistic, std::size_t n);

}  // namespace robustmeta

#endif  // ROBUSTMETA_SIMULATE_HPP
