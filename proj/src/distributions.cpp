#include "ratemix/distributions.hpp"

#include "ratemix/special.hpp"

#include <boost/random/gamma_distribution.hpp>

#include <cmath>
#include <string>

namespace ratemix {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

void check(const GpParams& p) {
  require(p.tau > 0.0 && std::isfinite(p.tau) && std::isfinite(p.xi), "GP: invalid parameters");
}

void check(const GammaParams& p) {
  require(p.rate > 0.0 && p.shape > 0.0 && std::isfinite(p.rate) && std::isfinite(p.shape),
          "gamma: rate and shape must be positive");
}

void check(const GammaGammaParams& p) {
  require(p.alpha > 0.0 && p.beta1 > 0.0 && p.beta2 > 0.0, "gamma-gamma: parameters must be positive");
}

bool gp_in_support(double y, const GpParams& p) {
  if (y < 0.0 || std::isnan(y)) return false;
  return p.xi >= 0.0 || y <= -p.tau / p.xi;
}

}  // namespace

double gp_cdf(double y, const GpParams& p) {
  check(p);
  require(gp_in_support(y, p), "gp_cdf: y outside support");
  if (std::abs(p.xi) < kGpExponentialTol) return -std::expm1(-y / p.tau);
  return -std::expm1(-std::log1p(p.xi * y / p.tau) / p.xi);
}

double gp_logpdf(double y, const GpParams& p) {
  check(p);
  require(gp_in_support(y, p), "gp_logpdf: y outside support");
  if (std::abs(p.xi) < kGpExponentialTol) return -std::log(p.tau) - y / p.tau;
  return -std::log(p.tau) - (1.0 / p.xi + 1.0) * std::log1p(p.xi * y / p.tau);
}

double gp_quantile(double prob, const GpParams& p) {
  check(p);
  require(prob >= 0.0 && prob < 1.0, "gp_quantile: probability outside [0, 1)");
  if (std::abs(p.xi) < kGpExponentialTol) return -p.tau * std::log1p(-prob);
  return p.tau * std::expm1(-p.xi * std::log1p(-prob)) / p.xi;
}

double gamma_logpdf(double y, const GammaParams& p) {
  check(p);
  require(y > 0.0, "gamma_logpdf: y must be positive");
  return p.shape * std::log(p.rate) - special::lgamma(p.shape) + (p.shape - 1.0) * std::log(y) -
         p.rate * y;
}

double gamma_cdf(double y, const GammaParams& p) {
  check(p);
  require(y >= 0.0, "gamma_cdf: y must be nonnegative");
  if (std::isinf(y)) return 1.0;
  return special::gamma_p(p.shape, p.rate * y);
}

double gamma_quantile(double prob, const GammaParams& p) {
  check(p);
  require(prob >= 0.0 && prob < 1.0, "gamma_quantile: probability outside [0, 1)");
  if (prob > 0.5) return special::gamma_q_inv(p.shape, 1.0 - prob) / p.rate;
  return special::gamma_p_inv(p.shape, prob) / p.rate;
}

double gamma_sample(const GammaParams& p, Rng& rng) {
  check(p);
  return boost::random::gamma_distribution<double>(p.shape, 1.0 / p.rate)(rng);
}

double gamma_gamma_logpdf(double y, const GammaGammaParams& p) {
  check(p);
  require(y > 0.0, "gamma_gamma_pdf: y must be positive");
  return -p.beta1 * std::log(p.alpha) + special::lgamma(p.beta1 + p.beta2) -
         special::lgamma(p.beta1) - special::lgamma(p.beta2) -
         (p.beta1 + p.beta2) * std::log1p(y / p.alpha) + (p.beta1 - 1.0) * std::log(y);
}

double gamma_gamma_pdf(double y, const GammaGammaParams& p) {
  return std::exp(gamma_gamma_logpdf(y, p));
}

// With Y = (alpha beta1/beta2) Z, Z ~ F(2 beta1, 2 beta2), the F cdf reduces to
// I_x(beta1, beta2) at x = y / (alpha + y).
double gamma_gamma_cdf(double y, const GammaGammaParams& p) {
  check(p);
  require(y >= 0.0, "gamma_gamma_cdf: y must be nonnegative");
  if (std::isinf(y)) return 1.0;
  return special::ibeta(p.beta1, p.beta2, y / (p.alpha + y));
}

double gamma_gamma_sf(double y, const GammaGammaParams& p) {
  check(p);
  require(y >= 0.0, "gamma_gamma_sf: y must be nonnegative");
  if (std::isinf(y)) return 0.0;
  return special::ibetac(p.beta1, p.beta2, y / (p.alpha + y));
}

double gamma_gamma_quantile(double prob, const GammaGammaParams& p) {
  check(p);
  require(prob >= 0.0 && prob < 1.0, "gamma_gamma_quantile: probability outside [0, 1)");
  if (prob == 0.0) return 0.0;
  // x / (1 - x) is computed from whichever of x, 1 - x is known accurately.
  if (prob <= 0.5) {
    const double x = special::ibeta_inv(p.beta1, p.beta2, prob);
    return p.alpha * x / (1.0 - x);
  }
  // I_x(b1, b2) = 1 - I_{1-x}(b2, b1)
  const double xc = special::ibeta_inv(p.beta2, p.beta1, 1.0 - prob);
  return p.alpha * (1.0 - xc) / xc;
}

double gamma_gamma_moment(double r, const GammaGammaParams& p) {
  check(p);
  require(r > 0.0, "gamma_gamma_moment: r must be positive");
  require(p.beta2 > r, "gamma_gamma_moment: moment infinite unless beta2 > r");
  return std::exp(r * std::log(p.alpha) + special::lgamma(p.beta1 + r) +
                  special::lgamma(p.beta2 - r) - special::lgamma(p.beta1) -
                  special::lgamma(p.beta2));
}

double gamma_gamma_sample(const GammaGammaParams& p, Rng& rng) {
  check(p);
  const double lambda = gamma_sample({p.alpha, p.beta2}, rng);
  const double ytilde = gamma_sample({1.0, p.beta1}, rng);
  return ytilde / lambda;
}

WeibullTail weibull_tail_combine(const WeibullTail& num, const WeibullTail& den) {
  require(num.rate > 0.0 && num.index > 0.0 && den.rate > 0.0 && den.index > 0.0,
          "weibull_tail_combine: rates and indexes must be positive");
  const double b = num.index / (num.index + den.index);
  const double index = num.index * den.index / (num.index + den.index);
  const double rate = std::pow(num.rate, 1.0 - b) * std::pow(den.rate, b) *
                      (std::pow(den.rate / num.rate, b) + std::pow(num.rate / den.rate, 1.0 - b));
  return {rate, index};
}

GigParams gamma_gig_latent(double alpha, double b, double beta2) { return {2.0 * alpha, b, beta2}; }

double gamma_gig_sample(double k, double beta1, const GigParams& gig, Rng& rng) {
  require(k > 0.0 && beta1 > 0.0, "gamma_gig_sample: k and beta1 must be positive");
  const double lambda = gig_sample(gig, rng);
  const double ytilde = gamma_sample({1.0, beta1}, rng);
  return std::pow(ytilde / lambda, k);
}

}  // namespace ratemix
