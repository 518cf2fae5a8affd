#ifndef ROBUSTMETA_SPECFUN_HPP
#define ROBUSTMETA_SPECFUN_HPP

#include "robustmeta/types.hpp"

namespace robustmeta {

// ln Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
double ln_gamma(double x);

// psi(x) = d ln Gamma(x) / dx for x > 0, asymptotic series after an upward
// recurrence shift to x >= 6.
double digamma(double x);

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double reg_inc_beta(double x, double a, double b);

// Quantile of Beta(a, b): the x with I_x(a, b) = alpha.  Safeguarded Newton
// with bisection fallback; throws on non-convergence.
double beta_quantile(Probability alpha, double a, double b);

// Log density of the scaled Student t: ln f(y; mu, scale2, nu) including all
// normalizing constants.
double student_t_logpdf(double y, double mu, double scale2, double nu);

// Log density of N(mu, var).
double normal_logpdf(double y, double mu, double var);

// CDF of the scaled Student t at y (via the incomplete beta function).
double student_t_cdf(double y, double mu, double scale2, double nu);

// CDF of the F(d1, d2) distribution at x >= 0.
double f_cdf(double x, double d1, double d2);

}  // namespace robustmeta

#endif  // ROBUSTMETA_SPECFUN_HPP
