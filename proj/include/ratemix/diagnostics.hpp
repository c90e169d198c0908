#ifndef RATEMIX_DIAGNOSTICS_HPP
#define RATEMIX_DIAGNOSTICS_HPP

#include "ratemix/common.hpp"
#include "ratemix/distributions.hpp"
#include "ratemix/sampler.hpp"

#include <span>
#include <string>
#include <vector>

namespace ratemix {

/// Effective sample size by Geyer's initial monotone sequence estimator, capped at the
/// trace length. Throws std::invalid_argument for fewer than 10 values and
/// std::domain_error for a constant trace.
double ess(std::span<const double> trace);

/// Split potential scale reduction: each chain is halved and the halves are
/// compared. Needs at least 4 draws per chain; 1 when every draw is identical.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Energy-form CRPS of an ensemble: mean|X - y| - mean|X - X'| / 2 over all m^2 pairs.
double crps_sample(std::span<const double> draws, double obs);

/// Threshold-weighted CRPS with weight w(z) = Phi((z - threshold) / sigma), computed as
/// the energy form after the chaining map v(z) = sigma {x Phi(x) + phi(x)}, x = (z - threshold) / sigma.
/// threshold = -inf gives the CRPS, +inf gives 0.
double twcrps_sample(std::span<const double> draws, double obs, double threshold, double sigma = 5.0);

struct ParamSummary {
  std::string name;
  double mean;
  double lower;  // 2.5%
  double upper;  // 97.5%
  double ess;
  double rhat;
  std::size_t draws;
  /// Mean outside its own interval: only possible through numerical pathology.
  bool flagged;
};

/// Natural-scale summaries pooled over chains after dropping `burnin_drop` iterations
/// from each; when the chains carry beta2 (or beta2_0) a derived row xi = 1/beta2 is
/// appended, summarized draw by draw. Throws ValidationError with fewer than 100 draws per chain.
std::vector<ParamSummary> posterior_summaries(const std::vector<const ChainOutput*>& chains,
                                              std::size_t burnin_drop);
ParamSummary summarize(const std::string& name, const std::vector<std::vector<double>>& chains);

/// Posterior predictive draws at the k-th stored latent column: one Gamma(Lambda, beta1)
/// draw per stored iteration and replicate, shape stored_iters x n. beta1 is read from
/// the trace (1 when the variant pins it).
Matrix predictive_draws(const ChainOutput& output, std::size_t stored_index, Rng& rng);

struct QQPoint {
  double prob;
  double empirical;
  double model;
};

/// Sorted observations against model quantiles at k/(m+1). With threshold u > 0 the
/// model quantiles are those of the fitted law conditional on exceeding u.
std::vector<QQPoint> qq_data(std::vector<double> obs, const GammaGammaParams& fitted, double threshold = 0.0);

struct QQBand {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Pointwise 2.5%/97.5% envelopes of sorted samples of size m drawn from the fitted
/// law (conditional on exceeding threshold), B replicates.
QQBand qq_bands(std::size_t m, const GammaGammaParams& fitted, double threshold, std::size_t B, Rng& rng);

}  // namespace ratemix

#endif
