#include "robustmeta/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robustmeta/csv.hpp"

namespace robustmeta {

namespace {

Json nu_json(double nu) {
  if (std::isinf(nu)) return Json("inf");
  return Json(nu);
}

}  // namespace

Json fit_report_json(const Dataset& data, const FitResult& fit, const OutlierReport& report) {
  Json j;
  j["model"] = model_kind_name(fit.model_kind);

  Json params;
  if (fit.theta.scalar_location()) {
    params["mu"] = fit.theta.mu();
  } else {
    params["beta"] = fit.theta.location;
  }
  params["sigma"] = std::sqrt(fit.theta.sigma2);
  params["sigma2"] = fit.theta.sigma2;
  params["nu"] = nu_json(fit.theta.nu);
  j["parameters"] = params;

  const double neg_ll = -fit.loglik();
  const int n_params = fit.model_kind == ModelKind::normal
                           ? 2
                           : static_cast<int>(fit.theta.location.size()) + 2;
  j["neg_loglik"] = neg_ll;
  j["bic"] = bic(neg_ll, n_params, data.size());
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["loglik_trace"] = fit.loglik_trace;

  Json per_study = Json::array();
  for (const auto& r : report.records) {
    Json row;
    row["id"] = r.id;
    row["y"] = r.y;
    row["s2"] = r.s2;
    row["tau_tilde"] = r.tau;
    row["inv_tau"] = r.inv_tau;
    row["u"] = r.u;
    row["u_tau"] = r.u_tau;
    row["mahalanobis_sq"] = r.mahalanobis_sq;
    row["outlier_flag"] = r.outlier;
    per_study.push_back(std::move(row));
  }
  j["per_study"] = per_study;

  Json crit;
  crit["alpha"] = report.alpha;
  crit["tau_critical"] = report.critical_tau;
  crit["inv_tau_critical"] = report.inv_critical_tau;
  j["critical"] = crit;
  j["identity_mean"] = report.identity_mean;
  j["sigma2_was_zero"] = report.sigma2_was_zero;
  return j;
}

std::string fit_report_csv(const Dataset& data, const FitResult& fit,
                           const OutlierReport& report) {
  (void)data;
  std::ostringstream out;
  out << "model,mu,sigma,nu,neg_loglik,converged,iterations,"
         "id,y,s2,tau_tilde,inv_tau,u,u_tau,mahalanobis_sq,outlier_flag\n";
  const std::string model = model_kind_name(fit.model_kind);
  const std::string mu = fit.theta.scalar_location() ? format_double(fit.theta.mu()) : "";
  const std::string sigma = format_double(std::sqrt(fit.theta.sigma2));
  const std::string nu = std::isinf(fit.theta.nu) ? "inf" : format_double(fit.theta.nu);
  const std::string neg_ll = format_double(-fit.loglik());
  for (const auto& r : report.records) {
    out << model << ',' << mu << ',' << sigma << ',' << nu << ',' << neg_ll << ','
        << (fit.converged ? "true" : "false") << ',' << fit.iterations << ',' << r.id << ','
        << format_double(r.y) << ',' << format_double(r.s2) << ',' << format_double(r.tau)
        << ',' << format_double(r.inv_tau) << ',' << format_double(r.u) << ','
        << format_double(r.u_tau) << ',' << format_double(r.mahalanobis_sq) << ','
        << (r.outlier ? "true" : "false") << '\n';
  }
  return out.str();
}

Json comparison_json(const Dataset& data, const std::vector<ComparisonRow>& rows) {
  Json j;
  j["dataset"] = data.name;
  j["n_studies"] = data.size();
  Json out_rows = Json::array();
  for (const auto& r : rows) {
    Json row;
    row["model"] = model_kind_name(r.model_kind);
    if (r.failed()) {
      row["error"] = r.error;
    } else {
      if (r.location.size() == 1) {
        row["mu"] = r.location.front();
      } else {
        row["beta"] = r.location;
      }
      row["sigma"] = r.sigma;
      row["nu"] = r.model_kind == ModelKind::normal ? Json() : nu_json(r.nu);
      row["neg_loglik"] = r.neg_loglik;
      row["bic"] = r.bic;
      row["n_params"] = r.n_params;
      row["converged"] = r.converged;
    }
    row["wall_time_ms"] = r.wall_time_ms;
    out_rows.push_back(std::move(row));
  }
  j["models"] = out_rows;
  return j;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "model,mu,sigma,nu,neg_loglik,bic,n_params,converged,wall_time_ms,error\n";
  for (const auto& r : rows) {
    out << model_kind_name(r.model_kind) << ',';
    if (r.failed()) {
      out << ",,,,,,," << format_double(r.wall_time_ms) << ',' << r.error << '\n';
      continue;
    }
    out << (r.location.size() == 1 ? format_double(r.location.front()) : std::string()) << ','
        << format_double(r.sigma) << ','
        << (r.model_kind == ModelKind::normal ? ""
                                              : (std::isinf(r.nu) ? "inf" : format_double(r.nu)))
        << ',' << format_double(r.neg_loglik) << ',' << format_double(r.bic) << ','
        << r.n_params << ',' << (r.converged ? "true" : "false") << ','
        << format_double(r.wall_time_ms) << ",\n";
  }
  return out.str();
}

std::string forest_csv(const Dataset& data) {
  std::ostringstream out;
  out << "id,y,ci_lo,ci_hi\n";
  for (const auto& s : data.studies) {
    const double half = 1.96 * std::sqrt(s.s2);
    out << s.id << ',' << format_double(s.y) << ',' << format_double(s.y - half) << ','
        << format_double(s.y + half) << '\n';
  }
  return out.str();
}

std::string weights_csv(const OutlierReport& report) {
  std::ostringstream out;
  out << "id,inv_tau,inv_tau_critical\n";
  for (const auto& r : report.records) {
    out << r.id << ',' << format_double(r.inv_tau) << ','
        << format_double(report.inv_critical_tau) << '\n';
  }
  return out.str();
}

std::string detect_svg(const Dataset& data, const OutlierReport& report) {
  const int n = static_cast<int>(data.size());
  const int panel_w = 420, row_h = 12, margin = 40;
  const int h = std::max(n * row_h + 2 * margin, 200);
  const int w = 2 * panel_w + 3 * margin;

  double y_lo = 0.0, y_hi = 0.0;
  for (const auto& s : data.studies) {
    const double half = 1.96 * std::sqrt(s.s2);
    y_lo = std::min(y_lo, s.y - half);
    y_hi = std::max(y_hi, s.y + half);
  }
  double it_hi = report.inv_critical_tau;
  for (const auto& r : report.records) it_hi = std::max(it_hi, r.inv_tau);
  it_hi *= 1.05;

  auto fx = [&](double v) { return margin + (v - y_lo) / (y_hi - y_lo) * panel_w; };
  auto wx = [&](double v) { return 2 * margin + panel_w + v / it_hi * panel_w; };
  auto fy = [&](int i) { return margin + i * row_h + row_h / 2; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  svg << "<text x='" << margin << "' y='20' font-size='12'>effect sizes (95% CI)</text>\n";
  svg << "<text x='" << 2 * margin + panel_w << "' y='20' font-size='12'>"
      << "inverse weights 1/tau (critical line)</text>\n";
  for (int i = 0; i < n; ++i) {
    const auto& s = data.studies[i];
    const auto& r = report.records[static_cast<std::size_t>(i)];
    const double half = 1.96 * std::sqrt(s.s2);
    const int y = fy(i);
    svg << "<line x1='" << fx(s.y - half) << "' y1='" << y << "' x2='" << fx(s.y + half)
        << "' y2='" << y << "' stroke='black' stroke-width='1'/>\n";
    svg << "<circle cx='" << fx(s.y) << "' cy='" << y << "' r='2.5' fill='"
        << (r.outlier ? "red" : "steelblue") << "'/>\n";
    svg << "<circle cx='" << wx(r.inv_tau) << "' cy='" << y << "' r='2.5' fill='"
        << (r.outlier ? "red" : "steelblue") << "'/>\n";
  }
  svg << "<line x1='" << wx(report.inv_critical_tau) << "' y1='" << margin << "' x2='"
      << wx(report.inv_critical_tau) << "' y2='" << h - margin
      << "' stroke='red' stroke-dasharray='4 3'/>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace robustmeta
