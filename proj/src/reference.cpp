#include "ratemix/distributions.hpp"
#include "ratemix/likelihood.hpp"
#include "ratemix/special.hpp"

#include <cmath>

namespace ratemix::reference {

namespace {

struct Setup {
  HyperParams h;
  CorrelationModel corr;
  LatentMarginal marg;
};

Setup setup(const HyperParams& h0, const SpatialModel& model) {
  Setup s;
  s.h = h0;
  if (model.variant.beta1_fixed_at_one) s.h.beta1 = 1.0;
  s.corr = build_correlation(model.design, s.h.rho);
  s.marg.alpha = site_alpha(s.h.alpha_coefs, model.alpha_covariates);
  s.marg.beta2 = site_beta2(s.h, model);
  return s;
}

}  // namespace

double augmented_logpost(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                         const SpatialModel& model, const PriorConfig& priors) {
  const double prior = hyper_logprior(h, model.variant, priors);
  if (!std::isfinite(prior)) return kLogZero;
  Setup s;
  try {
    s = setup(h, model);
  } catch (const NumericError&) {
    return kLogZero;
  }
  double total = prior + log_jacobian(transform(s.h, model.variant.beta1_fixed_at_one));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::vector<double> lam(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double lt = l.log_lambda(i, j);
      lam[static_cast<std::size_t>(j)] = std::exp(lt);
      total += obs_logcontrib(data.y()(i, j), data.u()(i, j), data.exceeds(i, j), std::exp(lt), s.h.beta1);
      total += lt;
    }
    total += copula_loglik_row(lam, s.marg, s.corr);
  }
  return total;
}

Matrix grad_logpost_latent(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                           const SpatialModel& model, const PriorConfig&) {
  const Setup s = setup(h, model);
  const Eigen::Index d = data.cols();
  Matrix g(data.rows(), d);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    Vector z(d), dz(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double lam = std::exp(l.log_lambda(i, j));
      const double a = s.marg.alpha(j), b2 = s.marg.beta2(j);
      const LatentZ lz = latent_zscore(lam, a, b2);
      z(j) = lz.z;
      // dz/dlog(lambda) = lambda gamma(lambda) / phi(z)
      dz(j) = lz.clamped ? 0.0
                         : std::exp(std::log(lam) + gamma_logpdf(lam, {a, b2}) - special::norm_logpdf(lz.z));
      g(i, j) = obs_logcontrib_dlog(data.y()(i, j), data.u()(i, j), data.exceeds(i, j), lam, s.h.beta1) +
                (b2 - 1.0 - a * lam) + 1.0;
    }
    const Vector w = s.corr.solve(z);
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) -= (w(j) - z(j)) * dz(j);
  }
  return g;
}

}  // namespace ratemix::reference
