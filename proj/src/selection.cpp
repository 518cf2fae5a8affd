#include "robustmeta/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace robustmeta {

double bic(double neg_loglik, int n_params, std::size_t n_studies) {
  if (n_studies < 1) throw std::domain_error("bic: n_studies must be >= 1");
  return 2.0 * neg_loglik + static_cast<double>(n_params) *
                                std::log(static_cast<double>(n_studies));
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::normal: return "normal";
    case ModelKind::t: return "t";
    case ModelKind::t_regression: return "t-regression";
  }
  return "unknown";
}

namespace {

ComparisonRow fit_row(const Dataset& data, ModelKind kind, int n_params,
                      const std::function<FitResult()>& fit) {
  ComparisonRow row;
  row.model_kind = kind;
  row.n_params = n_params;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const FitResult r = fit();
    row.location = r.theta.location;
    row.sigma = std::sqrt(r.theta.sigma2);
    row.nu = r.theta.nu;
    row.neg_loglik = -r.loglik();
    row.bic = bic(row.neg_loglik, n_params, data.size());
    row.converged = r.converged;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  row.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

}  // namespace

std::vector<ComparisonRow> compare_models(const Dataset& data, const FitOptions& options) {
  std::vector<ComparisonRow> rows;
  rows.push_back(fit_row(data, ModelKind::normal, 2,
                         [&] { return fit_nmeta(data, options); }));
  rows.push_back(fit_row(data, ModelKind::t, 3,
                         [&] { return fit_tmeta(data, options); }));
  if (data.has_covariates()) {
    rows.push_back(fit_row(data, ModelKind::t_regression,
                           static_cast<int>(data.n_covariates()) + 2,
                           [&] { return fit_tmeta_regression(data, options); }));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.failed() != b.failed()) return !a.failed();
    return a.bic < b.bic;
  });
  return rows;
}

}  // namespace robustmeta
