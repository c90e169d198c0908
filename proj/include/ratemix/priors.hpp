#ifndef RATEMIX_PRIORS_HPP
#define RATEMIX_PRIORS_HPP

namespace ratemix {

/// PC prior shrinking the conditional gamma shape beta1 toward the exponential (beta1 = 1).
struct PcPriorBeta1 {
  double kappa1 = 1.0;
};

/// PC prior shrinking the tail index xi = 1/beta2 toward zero; support 0 < xi < 1.
struct PcPriorTail {
  double kappa2 = 1.0;
};

/// Vague priors: Gamma(shape 0.01, rate 0.01) for the range (mean 1, variance 100)
/// and N(0, 100) for regression coefficients, log-intercepts included.
struct VaguePriorSet {
  double range_shape = 0.01;
  double range_rate = 0.01;
  double coef_mean = 0.0;
  double coef_var = 100.0;
};

struct PriorConfig {
  PcPriorBeta1 beta1;
  PcPriorTail tail;
  VaguePriorSet vague;
};

/// KLD of Gamma(lambda, beta1) from Exp(lambda): (beta1 - 1) psi(beta1) - log Gamma(beta1).
double kld_gamma_vs_exp(double beta1);
/// d/dbeta1 of the above: (beta1 - 1) psi'(beta1).
double kld_gamma_vs_exp_derivative(double beta1);

/// log pi(beta1) = log(kappa1/2) - kappa1 l(beta1) + log|l'(beta1)|, l = sqrt(2 KLD).
/// Finite through beta1 = 1, where the 0/0 in l' is resolved by a Taylor expansion.
double pc_logprior_beta1(double beta1, double kappa1);

/// PC prior for the tail index; -inf outside (0, 1).
double pc_logprior_xi(double xi, double kappa2);
/// Same prior expressed in beta2 = 1/xi; -inf unless beta2 > 1.
double pc_logprior_beta2(double beta2, double kappa2);

double vague_logprior_range(double rho, const VaguePriorSet& v = {});
double vague_logprior_coef(double c, const VaguePriorSet& v = {});

}  // namespace ratemix

#endif
