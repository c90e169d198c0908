#include "ratemix/priors.hpp"

#include "ratemix/common.hpp"
#include "ratemix/special.hpp"

#include <cmath>
#include <numbers>

namespace ratemix {

namespace {
// Below |beta1 - 1| < kSeriesBand the direct KLD loses digits to cancellation.
constexpr double kSeriesBand = 1e-4;
}  // namespace

double kld_gamma_vs_exp(double beta1) {
  if (!(beta1 > 0.0)) throw std::domain_error("kld_gamma_vs_exp: beta1 must be positive");
  const double h = beta1 - 1.0;
  if (std::abs(h) < kSeriesBand) {
    // KLD = h^2 psi'(1)/2 + h^3 psi''(1)/3 + O(h^4)
    const double t1 = special::trigamma(1.0);
    const double t2 = special::polygamma(2, 1.0);
    return h * h * (0.5 * t1 + h * t2 / 3.0);
  }
  return std::max(0.0, h * special::digamma(beta1) - special::lgamma(beta1));
}

double kld_gamma_vs_exp_derivative(double beta1) {
  if (!(beta1 > 0.0)) throw std::domain_error("kld_gamma_vs_exp_derivative: beta1 must be positive");
  return (beta1 - 1.0) * special::trigamma(beta1);
}

double pc_logprior_beta1(double beta1, double kappa1) {
  if (!(beta1 > 0.0) || !(kappa1 > 0.0))
    throw std::domain_error("pc_logprior_beta1: beta1 and kappa1 must be positive");
  const double h = beta1 - 1.0;
  double dist, log_slope;
  if (std::abs(h) < kSeriesBand) {
    // l = |h| sqrt(psi'(1)) (1 + c h), |l'| = sqrt(psi'(1)) (1 + 2 c h), c = psi''(1) / (3 psi'(1))
    const double t1 = special::trigamma(1.0);
    const double c = special::polygamma(2, 1.0) / (3.0 * t1);
    dist = std::abs(h) * std::sqrt(t1) * (1.0 + c * h);
    log_slope = 0.5 * std::log(t1) + std::log1p(2.0 * c * h);
  } else {
    dist = std::sqrt(2.0 * kld_gamma_vs_exp(beta1));
    // psi'(b) = 1/b^2 + psi'(b + 1) keeps the log finite where psi'(b) itself overflows
    const double log_trigamma = beta1 < 1e-3 ? -2.0 * std::log(beta1) + std::log1p(beta1 * beta1 * special::trigamma(beta1 + 1.0))
                                             : std::log(special::trigamma(beta1));
    log_slope = std::log(std::abs(h)) + log_trigamma - std::log(dist);
  }
  return std::log(0.5 * kappa1) - kappa1 * dist + log_slope;
}

double pc_logprior_xi(double xi, double kappa2) {
  if (!(kappa2 > 0.0)) throw std::domain_error("pc_logprior_xi: kappa2 must be positive");
  if (!(xi > 0.0 && xi < 1.0)) return kLogZero;
  const double rate = std::numbers::sqrt2 * kappa2;
  return std::log(rate) - rate * xi / std::sqrt(1.0 - xi) + std::log1p(-0.5 * xi) -
         1.5 * std::log1p(-xi);
}

double pc_logprior_beta2(double beta2, double kappa2) {
  if (!(kappa2 > 0.0)) throw std::domain_error("pc_logprior_beta2: kappa2 must be positive");
  if (!(beta2 > 1.0) || std::isinf(beta2)) return kLogZero;
  const double rate = std::numbers::sqrt2 * kappa2;
  const double g = beta2 * (beta2 - 1.0);
  return std::log(rate) - rate / std::sqrt(g) + std::log(beta2 - 0.5) - 1.5 * std::log(g);
}

double vague_logprior_range(double rho, const VaguePriorSet& v) {
  if (!(rho > 0.0)) throw std::domain_error("vague_logprior_range: rho must be positive");
  return v.range_shape * std::log(v.range_rate) - special::lgamma(v.range_shape) +
         (v.range_shape - 1.0) * std::log(rho) - v.range_rate * rho;
}

double vague_logprior_coef(double c, const VaguePriorSet& v) {
  const double d = c - v.coef_mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * v.coef_var) - 0.5 * d * d / v.coef_var;
}

}  // namespace ratemix
