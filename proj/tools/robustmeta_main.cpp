#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustmeta/csv.hpp"
#include "robustmeta/diagnostics.hpp"
#include "robustmeta/fitting.hpp"
#include "robustmeta/model.hpp"
#include "robustmeta/report.hpp"
#include "robustmeta/selection.hpp"
#include "robustmeta/simulate.hpp"

namespace rm = robustmeta;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

void emit(const std::string& output, const std::string& content) {
  if (output.empty()) {
    std::cout << content;
  } else {
    write_text(output, content);
  }
}

std::string round3(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

std::uint64_t env_seed_or(std::uint64_t fallback) {
  if (const char* s = std::getenv("ROBUSTMETA_SEED")) {
    return static_cast<std::uint64_t>(std::stoull(s));
  }
  return fallback;
}

// ---------------------------------------------------------------------------
// fit / detect
// ---------------------------------------------------------------------------

struct FitFlags {
  std::string data_path;
  std::string model = "t";
  double alpha = 0.05;
  rm::FitOptions options;
  std::string output;
  std::string format = "json";
};

int run_fit(const FitFlags& flags) {
  const rm::Dataset data = rm::load_csv(flags.data_path);
  rm::FitResult fit;
  if (flags.model == "normal") {
    fit = rm::fit_nmeta(data, flags.options);
  } else if (flags.model == "t-regression") {
    fit = rm::fit_tmeta_regression(data, flags.options);
  } else if (flags.model == "t") {
    fit = data.has_covariates() ? rm::fit_tmeta_regression(data, flags.options)
                                : rm::fit_tmeta(data, flags.options);
  } else {
    throw std::runtime_error("unknown --model '" + flags.model + "'");
  }
  const rm::OutlierReport report =
      rm::detect_outliers(data, fit, rm::Probability(flags.alpha));
  if (flags.format == "csv") {
    emit(flags.output, rm::fit_report_csv(data, fit, report));
  } else {
    emit(flags.output, rm::fit_report_json(data, fit, report).dump(2) + "\n");
  }
  return fit.converged ? kExitOk : kExitNotConverged;
}

struct DetectFlags {
  std::string data_path;
  double alpha = 0.05;
  rm::FitOptions options;
  std::string output;
  std::string plot_data;
  std::string svg;
};

int run_detect(const DetectFlags& flags) {
  const rm::Dataset data = rm::load_csv(flags.data_path);
  const rm::FitResult fit = data.has_covariates()
                                ? rm::fit_tmeta_regression(data, flags.options)
                                : rm::fit_tmeta(data, flags.options);
  const rm::OutlierReport report =
      rm::detect_outliers(data, fit, rm::Probability(flags.alpha));

  emit(flags.output, rm::fit_report_json(data, fit, report).dump(2) + "\n");
  if (!flags.plot_data.empty()) {
    fs::create_directories(flags.plot_data);
    write_text((fs::path(flags.plot_data) / "forest.csv").string(), rm::forest_csv(data));
    write_text((fs::path(flags.plot_data) / "weights.csv").string(), rm::weights_csv(report));
  }
  if (!flags.svg.empty()) {
    write_text(flags.svg, rm::detect_svg(data, report));
  }

  std::ostringstream summary;
  summary << data.name << ": ";
  const auto ids = report.outlier_ids();
  if (ids.empty()) {
    summary << "no outliers";
  } else {
    summary << "outliers {";
    for (std::size_t i = 0; i < ids.size(); ++i) summary << (i ? "," : "") << ids[i];
    summary << "}";
  }
  summary << " at alpha=" << flags.alpha << "\n";
  std::cerr << summary.str();
  return fit.converged ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

int run_compare(const std::string& data_path, const rm::FitOptions& options,
                const std::string& output, const std::string& format) {
  const rm::Dataset data = rm::load_csv(data_path);
  const auto rows = rm::compare_models(data, options);

  std::cout << "model          mu       sigma    nu       -L        BIC       time_ms\n";
  for (const auto& r : rows) {
    if (r.failed()) {
      std::cout << rm::model_kind_name(r.model_kind) << "  FAILED: " << r.error << "\n";
      continue;
    }
    std::cout << std::left << std::setw(14) << rm::model_kind_name(r.model_kind)
              << std::setw(9) << (r.location.size() == 1 ? round3(r.location.front()) : "-")
              << std::setw(9) << round3(r.sigma) << std::setw(9)
              << (r.model_kind == rm::ModelKind::normal ? "-" : round3(r.nu)) << std::setw(10)
              << round3(r.neg_loglik) << std::setw(10) << round3(r.bic) << round3(r.wall_time_ms)
              << "\n";
  }
  if (!output.empty()) {
    if (format == "csv" || (format == "auto" && output.size() > 4 &&
                            output.substr(output.size() - 4) == ".csv")) {
      write_text(output, rm::comparison_csv(rows));
    } else {
      write_text(output, rm::comparison_json(data, rows).dump(2) + "\n");
    }
  }
  for (const auto& r : rows) {
    if (r.failed() || !r.converged) return kExitNotConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

rm::S2Law parse_s2_law(const nlohmann::json& j) {
  rm::S2Law law;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") {
    law.kind = rm::S2Law::Kind::fixed;
    law.value = j.at("value").get<double>();
  } else if (kind == "uniform") {
    law.kind = rm::S2Law::Kind::uniform;
    law.lo = j.at("lo").get<double>();
    law.hi = j.at("hi").get<double>();
  } else if (kind == "list") {
    law.kind = rm::S2Law::Kind::list;
    law.values = j.at("values").get<std::vector<double>>();
  } else {
    throw std::runtime_error("s2_law.kind must be fixed|uniform|list");
  }
  return law;
}

double parse_nu(const nlohmann::json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  return j.get<double>();
}

rm::SimConfig parse_sim_config(const nlohmann::json& j) {
  rm::SimConfig cfg;
  cfg.n_studies = j.at("n_studies").get<int>();
  cfg.mu_true = j.at("mu").get<double>();
  cfg.sigma2_true = j.at("sigma2").get<double>();
  cfg.nu_true = parse_nu(j.at("nu"));
  cfg.s2_law = parse_s2_law(j.at("s2_law"));
  cfg.seed = env_seed_or(j.value("seed", 0ULL));
  cfg.name = j.value("name", std::string("simulated"));
  cfg.validate();
  return cfg;
}

rm::ContaminationSpec parse_contamination(const nlohmann::json& j) {
  rm::ContaminationSpec spec;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "uniform_shift") {
    spec.mode = rm::ContaminationSpec::Mode::uniform_shift;
    spec.lo = j.at("lo").get<double>();
    spec.hi = j.at("hi").get<double>();
  } else if (mode == "point_mass") {
    spec.mode = rm::ContaminationSpec::Mode::point_mass;
    spec.value = j.at("value").get<double>();
  } else {
    throw std::runtime_error("contamination.mode must be uniform_shift|point_mass");
  }
  spec.s2_out = j.at("s2_out").get<double>();
  spec.count = j.at("count").get<int>();
  spec.validate();
  return spec;
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open '" + config_path + "'");
  nlohmann::json cfg = nlohmann::json::parse(in);
  fs::create_directories(out_dir);
  const std::string experiment = cfg.at("experiment").get<std::string>();

  if (experiment == "sample") {
    const rm::SimConfig sim = parse_sim_config(cfg.at("sim"));
    const rm::Dataset data = rm::sample_dataset(sim);
    const std::string name = cfg.value("output_name", sim.name + ".csv");
    rm::write_csv(data, (fs::path(out_dir) / name).string());
    std::cout << "sample: wrote " << name << " with " << data.size() << " studies (seed "
              << sim.seed << ")\n";
    return kExitOk;
  }

  if (experiment == "inject") {
    rm::Dataset base;
    if (cfg.contains("dataset")) {
      base = rm::load_csv(cfg.at("dataset").get<std::string>());
    } else {
      base = rm::sample_dataset(parse_sim_config(cfg.at("sim")));
    }
    // Optional in-place overrides of within-study variances, applied before
    // the injection (used by the modified-dataset recipes).
    if (cfg.contains("mutations")) {
      for (const auto& m : cfg.at("mutations")) {
        const std::string id = m.at("id").get<std::string>();
        bool found = false;
        for (auto& s : base.studies) {
          if (s.id == id) {
            if (m.contains("s2")) s.s2 = m.at("s2").get<double>();
            if (m.contains("y")) s.y = m.at("y").get<double>();
            found = true;
          }
        }
        if (!found) throw std::runtime_error("mutation id '" + id + "' not in dataset");
      }
    }
    const rm::ContaminationSpec spec = parse_contamination(cfg.at("contamination"));
    const std::uint64_t seed = env_seed_or(cfg.value("seed", 0ULL));
    const rm::Dataset modified = rm::inject_outliers(base, spec, seed);
    const std::string name = cfg.value("output_name", base.name + "_modified.csv");
    rm::write_csv(modified, (fs::path(out_dir) / name).string());
    std::cout << "inject: wrote " << name << " with " << modified.size() << " studies (seed "
              << seed << ")\n";
    return kExitOk;
  }

  if (experiment == "breakdown") {
    const rm::SimConfig sim = parse_sim_config(cfg.at("sim"));
    const auto fractions = cfg.at("fractions").get<std::vector<double>>();
    const auto magnitudes = cfg.at("magnitudes").get<std::vector<double>>();
    const int replicates = cfg.at("replicates").get<int>();
    const double s2_out = cfg.value("s2_out", 0.25);
    const std::uint64_t seed = env_seed_or(cfg.value("seed", 0ULL));
    const auto rows = rm::breakdown_experiment(sim, magnitudes, fractions, replicates, seed,
                                               s2_out);
    std::ostringstream out;
    out << "fraction,magnitude,replicate,model,mu_hat,abs_error,sigma2_hat,nu_hat\n";
    for (const auto& r : rows) {
      out << rm::format_double(r.fraction) << ',' << rm::format_double(r.magnitude) << ','
          << r.replicate << ',' << r.model << ',' << rm::format_double(r.mu_hat) << ','
          << rm::format_double(r.abs_error) << ',' << rm::format_double(r.sigma2_hat) << ','
          << (std::isinf(r.nu_hat) ? "inf" : rm::format_double(r.nu_hat)) << '\n';
    }
    const std::string name = cfg.value("output_name", std::string("breakdown.csv"));
    write_text((fs::path(out_dir) / name).string(), out.str());
    std::cout << "breakdown: " << fractions.size() << " fractions x " << magnitudes.size()
              << " magnitudes x " << replicates << " replicates -> " << name << "\n";
    return kExitOk;
  }

  if (experiment == "null_weight") {
    const rm::SimConfig sim = parse_sim_config(cfg.at("sim"));
    const double alpha = cfg.value("alpha", 0.05);
    const auto summary = rm::null_weight_study(sim, rm::Probability(alpha));
    rm::Json j;
    j["nu_hat"] = std::isinf(summary.nu_hat) ? rm::Json("inf") : rm::Json(summary.nu_hat);
    j["mu_hat"] = summary.mu_hat;
    j["sigma2_hat"] = summary.sigma2_hat;
    j["ks_tau_stat"] = summary.ks_tau_stat;
    j["ks_tau_pvalue"] = summary.ks_tau_pvalue;
    j["ks_delta2_stat"] = summary.ks_delta2_stat;
    j["ks_delta2_pvalue"] = summary.ks_delta2_pvalue;
    j["flag_rate"] = summary.flag_rate;
    j["alpha"] = alpha;
    j["degenerate"] = summary.degenerate;
    const std::string name = cfg.value("output_name", std::string("null_weight.json"));
    write_text((fs::path(out_dir) / name).string(), j.dump(2) + "\n");
    if (summary.degenerate) {
      std::cout << "null_weight: degenerate (nu_hat infinite); weights pinned at 1\n";
    } else {
      std::cout << "null_weight: nu_hat=" << round3(summary.nu_hat)
                << " KS(tau) p=" << round3(summary.ks_tau_pvalue)
                << " KS(delta2) p=" << round3(summary.ks_delta2_pvalue)
                << " flag_rate=" << round3(summary.flag_rate) << "\n";
    }
    return kExitOk;
  }

  throw std::runtime_error("unknown experiment '" + experiment + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robustmeta: robust random-effects meta-analysis with Student-t marginals"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a study table");
  fit_cmd->add_option("--data", fit_flags.data_path, "study CSV")->required();
  fit_cmd->add_option("--model", fit_flags.model, "normal|t|t-regression");
  fit_cmd->add_option("--alpha", fit_flags.alpha, "outlier significance level");
  fit_cmd->add_option("--tol", fit_flags.options.tol, "relative log-likelihood tolerance");
  fit_cmd->add_option("--max-iter", fit_flags.options.max_iter, "iteration cap");
  fit_cmd->add_option("--nu-max", fit_flags.options.nu_max, "nu cap (infinite above)");
  fit_cmd->add_option("--output", fit_flags.output, "report path (stdout when omitted)");
  fit_cmd->add_option("--format", fit_flags.format, "json|csv");

  DetectFlags det_flags;
  auto* det_cmd = app.add_subcommand("detect", "fit tMeta and flag outlying studies");
  det_cmd->add_option("--data", det_flags.data_path, "study CSV")->required();
  det_cmd->add_option("--alpha", det_flags.alpha, "significance level");
  det_cmd->add_option("--tol", det_flags.options.tol, "relative log-likelihood tolerance");
  det_cmd->add_option("--max-iter", det_flags.options.max_iter, "iteration cap");
  det_cmd->add_option("--output", det_flags.output, "report path (stdout when omitted)");
  det_cmd->add_option("--plot-data", det_flags.plot_data,
                      "directory for forest.csv and weights.csv");
  det_cmd->add_option("--svg", det_flags.svg, "optional SVG rendering");

  std::string cmp_data, cmp_output, cmp_format = "auto";
  rm::FitOptions cmp_options;
  auto* cmp_cmd = app.add_subcommand("compare", "negative log-likelihood and BIC table");
  cmp_cmd->add_option("--data", cmp_data, "study CSV")->required();
  cmp_cmd->add_option("--tol", cmp_options.tol, "relative log-likelihood tolerance");
  cmp_cmd->add_option("--max-iter", cmp_options.max_iter, "iteration cap");
  cmp_cmd->add_option("--output", cmp_output, "table path");
  cmp_cmd->add_option("--format", cmp_format, "json|csv|auto");

  std::string sim_config, sim_out = ".";
  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation experiment from a config");
  sim_cmd->add_option("--config", sim_config, "JSON experiment config")->required();
  sim_cmd->add_option("--out", sim_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) return run_fit(fit_flags);
    if (*det_cmd) return run_detect(det_flags);
    if (*cmp_cmd) return run_compare(cmp_data, cmp_options, cmp_output, cmp_format);
    if (*sim_cmd) return run_simulate(sim_config, sim_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
