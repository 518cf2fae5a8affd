#include "robustmeta/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "robustmeta/diagnostics.hpp"
#include "robustmeta/fitting.hpp"
#include "robustmeta/model.hpp"
#include "robustmeta/rng.hpp"
#include "robustmeta/specfun.hpp"

namespace robustmeta {

void S2Law::validate() const {
  switch (kind) {
    case Kind::fixed:
      if (!(value > 0.0)) throw std::invalid_argument("s2_law: fixed value must be > 0");
      break;
    case Kind::uniform:
      if (!(lo > 0.0 && hi >= lo)) {
        throw std::invalid_argument("s2_law: uniform interval must satisfy 0 < lo <= hi");
      }
      break;
    case Kind::list:
      if (values.empty()) throw std::invalid_argument("s2_law: list must be non-empty");
      for (double v : values) {
        if (!(v > 0.0)) throw std::invalid_argument("s2_law: list entries must be > 0");
      }
      break;
  }
}

void SimConfig::validate() const {
  if (n_studies < 1) throw std::invalid_argument("SimConfig: n_studies must be >= 1");
  if (!std::isfinite(mu_true)) throw std::invalid_argument("SimConfig: mu_true must be finite");
  if (!(sigma2_true >= 0.0)) throw std::invalid_argument("SimConfig: sigma2_true must be >= 0");
  if (!normal_generator() && !(nu_true > 0.0)) {
    throw std::invalid_argument("SimConfig: nu_true must be positive or infinite");
  }
  s2_law.validate();
}

void ContaminationSpec::validate() const {
  if (count < 0) throw std::invalid_argument("ContaminationSpec: count must be >= 0");
  if (!(s2_out > 0.0)) throw std::invalid_argument("ContaminationSpec: s2_out must be > 0");
  if (mode == Mode::uniform_shift && !(hi >= lo)) {
    throw std::invalid_argument("ContaminationSpec: need lo <= hi");
  }
}

namespace {

// Stream indices of the master seed, one per purpose, so adding draws to one
// stage never perturbs another.
enum class StreamId : std::uint64_t { s2 = 1, tau = 2, effects = 3, contamination = 4 };

Rng stream_for(std::uint64_t seed, StreamId id) {
  return Rng::stream(seed, static_cast<std::uint64_t>(id));
}

std::vector<double> draw_s2(const S2Law& law, int n, Rng& rng) {
  std::vector<double> s2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    switch (law.kind) {
      case S2Law::Kind::fixed: s2[i] = law.value; break;
      case S2Law::Kind::uniform: s2[i] = rng.uniform(law.lo, law.hi); break;
      case S2Law::Kind::list: s2[i] = law.values[i % law.values.size()]; break;
    }
  }
  return s2;
}

}  // namespace

Dataset sample_dataset(const SimConfig& config) {
  config.validate();
  Rng s2_rng = stream_for(config.seed, StreamId::s2);
  Rng tau_rng = stream_for(config.seed, StreamId::tau);
  Rng eff_rng = stream_for(config.seed, StreamId::effects);

  const auto s2 = draw_s2(config.s2_law, config.n_studies, s2_rng);
  Dataset out;
  out.name = config.name;
  out.studies.reserve(static_cast<std::size_t>(config.n_studies));
  for (int i = 0; i < config.n_studies; ++i) {
    double tau = 1.0;
    if (!config.normal_generator()) {
      tau = tau_rng.gamma(0.5 * config.nu_true, 0.5 * config.nu_true);
    }
    const double b = eff_rng.normal(0.0, std::sqrt(config.sigma2_true / tau));
    const double e = eff_rng.normal(0.0, std::sqrt(s2[static_cast<std::size_t>(i)] / tau));
    Study s;
    s.id = std::to_string(i + 1);
    s.y = config.mu_true + b + e;
    s.s2 = s2[static_cast<std::size_t>(i)];
    out.studies.push_back(std::move(s));
  }
  out.validate();
  return out;
}

Dataset inject_outliers(const Dataset& data, const ContaminationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Dataset out = data;
  Rng rng = stream_for(seed, StreamId::contamination);
  for (int k = 0; k < spec.count; ++k) {
    Study s;
    s.id = std::to_string(data.size() + static_cast<std::size_t>(k) + 1);
    s.y = spec.mode == ContaminationSpec::Mode::uniform_shift ? rng.uniform(spec.lo, spec.hi)
                                                              : spec.value;
    s.s2 = spec.s2_out;
    out.studies.push_back(std::move(s));
  }
  return out;
}

std::vector<BreakdownRow> breakdown_experiment(const SimConfig& base,
                                               const std::vector<double>& magnitudes,
                                               const std::vector<double>& fractions,
                                               int replicates, std::uint64_t seed,
                                               double s2_out) {
  base.validate();
  if (replicates < 1) throw std::invalid_argument("breakdown_experiment: replicates >= 1");
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 0.6)) {
      throw std::invalid_argument("breakdown_experiment: fractions must lie in [0, 0.6]");
    }
  }

  std::vector<BreakdownRow> rows;
  std::uint64_t cell = 0;
  for (double fraction : fractions) {
    for (double magnitude : magnitudes) {
      ++cell;
      for (int rep = 0; rep < replicates; ++rep) {
        // Each (cell, replicate) owns a derived seed, so cells are
        // independent and the assembly order is immaterial.
        std::uint64_t sm = seed ^ (cell * 0x9E3779B97F4A7C15ULL);
        const std::uint64_t rep_seed = splitmix64(sm) + static_cast<std::uint64_t>(rep);

        SimConfig cfg = base;
        cfg.seed = rep_seed;
        Dataset clean = sample_dataset(cfg);

        ContaminationSpec spec;
        spec.mode = ContaminationSpec::Mode::point_mass;
        spec.value = base.mu_true + magnitude;
        spec.s2_out = s2_out;
        spec.count = static_cast<int>(std::lround(fraction * base.n_studies));
        Dataset dirty = inject_outliers(clean, spec, rep_seed);

        for (const bool robust : {true, false}) {
          const FitResult fit = robust ? fit_tmeta(dirty) : fit_nmeta(dirty);
          BreakdownRow row;
          row.fraction = fraction;
          row.magnitude = magnitude;
          row.replicate = rep;
          row.model = robust ? "t" : "normal";
          row.mu_hat = fit.theta.mu();
          row.abs_error = std::fabs(fit.theta.mu() - base.mu_true);
          row.sigma2_hat = fit.theta.sigma2;
          row.nu_hat = fit.theta.nu;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

double ks_statistic(std::vector<double> cdf_values) {
  if (cdf_values.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(cdf_values.begin(), cdf_values.end());
  const double n = static_cast<double>(cdf_values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < cdf_values.size(); ++i) {
    const double lo = cdf_values[i] - static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n - cdf_values[i];
    d = std::max({d, lo, hi});
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  // Stephens' small-sample adjustment of the asymptotic Kolmogorov law.
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                        std::exp(-2.0 * lambda * lambda * k * k);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::min(std::max(sum, 0.0), 1.0);
}

NullWeightSummary null_weight_study(const SimConfig& config, Probability alpha) {
  config.validate();
  const Dataset data = sample_dataset(config);
  const FitResult fit = fit_tmeta(data);

  NullWeightSummary out;
  out.mu_hat = fit.theta.mu();
  out.sigma2_hat = fit.theta.sigma2;
  out.nu_hat = fit.theta.nu;
  out.degenerate = fit.theta.nu_infinite();
  if (out.degenerate) {
    // Weights are pinned at one; the scaled-Beta comparison is vacuous.
    out.flag_rate = 0.0;
    return out;
  }

  const double nu = fit.theta.nu;
  const double scale = 1.0 + 1.0 / nu;
  std::vector<double> tau_cdf, d2_cdf;
  tau_cdf.reserve(data.size());
  d2_cdf.reserve(data.size());
  const double crit = critical_weight(nu, alpha);
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.studies[i];
    const double tau = fit.weights[i];
    tau_cdf.push_back(reg_inc_beta(std::min(tau / scale, 1.0), 0.5 * nu, 0.5));
    const double d2 = mahalanobis_sq(s, fit.theta);
    d2_cdf.push_back(f_cdf(d2, 1.0, nu));
    if (tau < crit) ++flagged;
  }
  out.ks_tau_stat = ks_statistic(tau_cdf);
  out.ks_tau_pvalue = ks_pvalue(out.ks_tau_stat, data.size());
  out.ks_delta2_stat = ks_statistic(d2_cdf);
  out.ks_delta2_pvalue = ks_pvalue(out.ks_delta2_stat, data.size());
  out.flag_rate = static_cast<double>(flagged) / static_cast<double>(data.size());
  return out;
}

}  // namespace robustmeta
