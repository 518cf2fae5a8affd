#ifndef ROBUSTMETA_REPORT_HPP
#define ROBUSTMETA_REPORT_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "robustmeta/diagnostics.hpp"
#include "robustmeta/fitting.hpp"
#include "robustmeta/selection.hpp"
#include "robustmeta/types.hpp"

namespace robustmeta {

using Json = nlohmann::ordered_json;

// Fit report: model, parameters, likelihood, trace, per-study diagnostics and
// the critical line.  Numbers serialize at full round-trip precision; an
// infinite nu becomes the string "inf".
Json fit_report_json(const Dataset& data, const FitResult& fit, const OutlierReport& report);

// Per-study CSV flattening of the same report (summary columns repeated).
std::string fit_report_csv(const Dataset& data, const FitResult& fit,
                           const OutlierReport& report);

Json comparison_json(const Dataset& data, const std::vector<ComparisonRow>& rows);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

// Plot data mirroring the paper's figures: per-study effect sizes with 95%
// intervals, and inverse weights with the critical line.
std::string forest_csv(const Dataset& data);
std::string weights_csv(const OutlierReport& report);

// Minimal static SVG with both panels.
std::string detect_svg(const Dataset& data, const OutlierReport& report);

}  // namespace robustmeta

#endif  // ROBUSTMETA_REPORT_HPP
