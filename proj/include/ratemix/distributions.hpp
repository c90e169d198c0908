#ifndef RATEMIX_DISTRIBUTIONS_HPP
#define RATEMIX_DISTRIBUTIONS_HPP

#include "ratemix/common.hpp"

namespace ratemix {

/// Generalized Pareto with scale `tau` and tail index `xi`.
struct GpParams {
  double tau;
  double xi;
};

/// Gamma in the rate-first parametrization: density rate^shape y^(shape-1) e^(-rate y) / Gamma(shape).
struct GammaParams {
  double rate;
  double shape;
};

/// Marginal law of Y = Ytilde / Lambda with Ytilde ~ Gamma(1, beta1) and
/// Lambda ~ Gamma(alpha, beta2). Equal in law to (alpha beta1 / beta2) F(2 beta1, 2 beta2).
struct GammaGammaParams {
  double alpha;
  double beta1;
  double beta2;
};

/// Generalized inverse Gaussian with density proportional to
/// y^(beta-1) exp{-(a y + b / y) / 2}.
struct GigParams {
  double a;
  double b;
  double beta;
};

/// Survival of the form r(y) exp(-rate y^index).
struct WeibullTail {
  double rate;
  double index;
};

/// Below this |xi| the GP uses its exponential limit.
inline constexpr double kGpExponentialTol = 1e-9;

double gp_cdf(double y, const GpParams& p);
double gp_logpdf(double y, const GpParams& p);
double gp_quantile(double prob, const GpParams& p);

double gamma_logpdf(double y, const GammaParams& p);
double gamma_cdf(double y, const GammaParams& p);
double gamma_quantile(double prob, const GammaParams& p);
double gamma_sample(const GammaParams& p, Rng& rng);

bool in_gig_domain(const GigParams& p);
double gig_logpdf(double y, const GigParams& p);
double gig_sample(const GigParams& p, Rng& rng);
/// Latent law of the gamma-GIG model for a given scale alpha: a = 2 alpha, so
/// that b = 0 gives exactly Gamma(alpha, beta2).
GigParams gamma_gig_latent(double alpha, double b, double beta2);
/// Y = (Ytilde / Lambda)^k with Ytilde ~ Gamma(1, beta1), Lambda ~ GIG.
double gamma_gig_sample(double k, double beta1, const GigParams& gig, Rng& rng);

double gamma_gamma_logpdf(double y, const GammaGammaParams& p);
double gamma_gamma_pdf(double y, const GammaGammaParams& p);
double gamma_gamma_cdf(double y, const GammaGammaParams& p);
double gamma_gamma_sf(double y, const GammaGammaParams& p);
double gamma_gamma_quantile(double prob, const GammaGammaParams& p);
/// E(Y^r), finite only for beta2 > r. Follows from the scaled-F representation:
/// alpha^r Gamma(beta1 + r) Gamma(beta2 - r) / (Gamma(beta1) Gamma(beta2)).
double gamma_gamma_moment(double r, const GammaGammaParams& p);
double gamma_gamma_sample(const GammaGammaParams& p, Rng& rng);

/// Tail of the product of two independent Weibull-type factors, e.g. Ytilde and 1/Lambda.
WeibullTail weibull_tail_combine(const WeibullTail& num, const WeibullTail& den);

}  // namespace ratemix

#endif
