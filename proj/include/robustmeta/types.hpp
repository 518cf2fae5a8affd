#ifndef ROBUSTMETA_TYPES_HPP
#define ROBUSTMETA_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace robustmeta {

// A probability in [0, 1]. Construction validates the range.
class Probability {
 public:
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw std::domain_error("Probability must lie in [0, 1], got " +
                              std::to_string(value));
    }
  }
  double value() const { return value_; }

 private:
  double value_;
};

// One study: observed effect size and its known within-study variance.
struct Study {
  std::string id;
  double y = 0.0;
  double s2 = 0.0;

  void validate() const {
    if (!std::isfinite(y)) {
      throw std::invalid_argument("study '" + id + "': effect size y must be finite");
    }
    if (!(s2 > 0.0) || !std::isfinite(s2)) {
      throw std::invalid_argument("study '" + id +
                                  "': within-study variance s2 must be positive and finite");
    }
  }
};

// Ordered collection of studies with an optional covariate matrix.
struct Dataset {
  std::vector<Study> studies;
  // Row-aligned with studies when non-empty; covariates[i].size() == n_covariates().
  std::vector<std::vector<double>> covariates;
  std::vector<std::string> covariate_names;
  std::string name;

  std::size_t size() const { return studies.size(); }
  bool has_covariates() const { return !covariates.empty(); }
  std::size_t n_covariates() const {
    return covariates.empty() ? 0 : covariates.front().size();
  }

  void validate() const {
    for (const auto& s : studies) s.validate();
    if (!covariates.empty()) {
      if (covariates.size() != studies.size()) {
        throw std::invalid_argument("dataset '" + name +
                                    "': covariate row count differs from study count");
      }
      const std::size_t p = covariates.front().size();
      for (const auto& row : covariates) {
        if (row.size() != p) {
          throw std::invalid_argument("dataset '" + name + "': ragged covariate matrix");
        }
      }
      if (!covariate_names.empty() && covariate_names.size() != p) {
        throw std::invalid_argument("dataset '" + name + "': covariate name count mismatch");
      }
    }
  }

  // Minimum size required before fitting is meaningful.
  void validate_for_fit() const {
    validate();
    const std::size_t min_n = has_covariates() ? n_covariates() + 2 : 2;
    if (studies.size() < min_n) {
      throw std::invalid_argument("dataset '" + name + "': needs at least " +
                                  std::to_string(min_n) + " studies, has " +
                                  std::to_string(studies.size()));
    }
  }
};

// Model parameters. location has one entry (the overall effect mu) for the
// plain model, or p regression coefficients when covariates are used.
// nu == +infinity flags the normal limit of the t model.
struct Theta {
  std::vector<double> location{0.0};
  double sigma2 = 0.0;
  double nu = std::numeric_limits<double>::infinity();

  bool nu_infinite() const { return std::isinf(nu); }
  bool scalar_location() const { return location.size() == 1; }

  double mu() const {
    if (location.size() != 1) {
      throw std::logic_error("Theta holds regression coefficients, not a scalar mu");
    }
    return location.front();
  }

  static Theta scalar(double mu, double sigma2, double nu) {
    Theta t;
    t.location = {mu};
    t.sigma2 = sigma2;
    t.nu = nu;
    return t;
  }

  void validate() const {
    for (double b : location) {
      if (!std::isfinite(b)) throw std::domain_error("Theta: non-finite location parameter");
    }
    if (!(sigma2 >= 0.0)) throw std::domain_error("Theta: sigma2 must be >= 0");
    if (!nu_infinite() && !(nu >= 1.0)) {
      throw std::domain_error("Theta: finite nu must satisfy nu >= 1");
    }
  }
};

// Stopping rule and nu bounds for the ECME loop.
struct FitOptions {
  double tol = 1e-8;      // relative log-likelihood change threshold
  int max_iter = 100;     // iteration cap
  double nu_max = 1e6;    // nu treated as infinite above this cap
  double nu_min = 1.0;

  void validate() const {
    if (!(tol > 0.0)) throw std::domain_error("FitOptions: tol must be > 0");
    if (max_iter < 1) throw std::domain_error("FitOptions: max_iter must be >= 1");
    if (!(nu_min >= 1.0 && nu_min < nu_max)) {
      throw std::domain_error("FitOptions: need 1 <= nu_min < nu_max");
    }
  }
};

}  // namespace robustmeta

#endif  // ROBUSTMETA_TYPES_HPP
