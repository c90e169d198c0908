#ifndef RATEMIX_SPECIAL_HPP
#define RATEMIX_SPECIAL_HPP

// Thin wrappers over Boost.Math with a non-promoting policy. The sampler's
// hot loop calls these a few thousand times per iteration.

namespace ratemix::special {

double lgamma(double x);
double digamma(double x);
double trigamma(double x);
double polygamma(int n, double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);
double gamma_p_inv(double a, double p);
double gamma_q_inv(double a, double q);
/// d/dx P(a, x) = x^(a-1) e^(-x) / Gamma(a).
double gamma_p_derivative(double a, double x);
/// log P(a, x), accurate where P underflows.
double log_gamma_p(double a, double x);

double ibeta(double a, double b, double x);
double ibetac(double a, double b, double x);
double ibeta_inv(double a, double b, double p);
double ibetac_inv(double a, double b, double q);

double norm_cdf(double z);
/// Phi^{-1}(p) for p in (0, 1).
double norm_quantile(double p);
/// Phi^{-1}(1 - q), accurate for small q.
double norm_quantile_upper(double q);
double norm_logpdf(double z);

double bessel_k(double order, double x);

}  // namespace ratemix::special

#endif
