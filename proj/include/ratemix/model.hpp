#ifndef RATEMIX_MODEL_HPP
#define RATEMIX_MODEL_HPP

#include "ratemix/common.hpp"
#include "ratemix/likelihood.hpp"
#include "ratemix/priors.hpp"
#include "ratemix/sampler.hpp"
#include "ratemix/spatial_model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ratemix {

struct FitSpec {
  ModelVariant variant;
  /// Per-site threshold level; none keeps the thresholds already in the data.
  std::optional<double> censor_quantile;
  PriorConfig priors;
  SamplerConfig sampler;
  std::size_t chains = 2;
  /// Spread (sd, transformed scale) of the per-chain perturbation of the initial values.
  double init_jitter = 0.3;
  Exec exec = Exec::parallel;
};

/// Sampler target over (packed transformed hyperparameters, log latents).
class SpatialPosteriorTarget : public Target {
 public:
  SpatialPosteriorTarget(const ExceedanceData& data, const SpatialModel& model, PriorConfig priors,
                         Exec exec = Exec::parallel);

  std::size_t hyper_dim() const override;
  std::vector<std::string> hyper_names() const override;
  std::vector<double> report(std::span<const double> theta) const override;
  std::unique_ptr<HyperCache> prepare(std::span<const double> theta) const override;
  double evaluate(const HyperCache& cache, const Matrix& latents, Matrix* grad) const override;

  const PosteriorEvaluator& evaluator() const { return eval_; }
  HyperParams natural(std::span<const double> theta) const;
  std::vector<double> theta_of(const HyperParams& h) const;

 private:
  PosteriorEvaluator eval_;
  Exec exec_;
};

/// Per-site empirical quantile (type 7) of the non-missing (finite) values; sites listed in
/// `held_out` get +inf. Throws ValidationError when a training site has no values.
Matrix site_thresholds(const Matrix& y, double prob, std::span<const std::size_t> held_out);

/// Starting hyperparameters from the data. A crude start (alpha0 matched to the typical
/// site-level threshold under beta1 = 1, beta2 = 3, slopes zero) is refined by maximizing
/// the censored marginal likelihood with sites treated as independent; rho is half the
/// median inter-site distance.
HyperParams default_initial_hyper(const ExceedanceData& data, const SpatialModel& model);

/// Latent rows drawn from the latent copula under `h`, then each observed cell redrawn from
/// its single-cell conditional given the data (exact for exceedances, rejection for
/// censored cells).
Matrix init_latents(const ExceedanceData& data, const SpatialModel& model, const HyperParams& h, Rng& rng);

struct FitResult {
  ModelVariant variant;
  std::vector<std::string> names;
  std::vector<ChainOutput> chains;
  std::vector<std::size_t> predict_sites;  // stored latent columns
  /// Optional labels carried for output files.
  std::vector<std::string> site_ids;
  std::vector<std::string> time_ids;
};

/// Sampler settings for chain c: seed offset by c, prediction sites stored.
SamplerConfig chain_config(const FitSpec& spec, const ExceedanceData& data, std::size_t chain);

/// Runs (or resumes) chain c of a fit; see fit().
ChainOutput fit_chain(const FitSpec& spec, const SpatialPosteriorTarget& target, const ExceedanceData& data,
                      const SpatialModel& model, std::size_t chain, const RunHooks& hooks = {},
                      const std::pair<ChainSnapshot, ChainOutput>* resume = nullptr);

/// Runs spec.chains chains sequentially; chain c uses seed spec.sampler.seed + c and
/// its own perturbation of the initial values.
FitResult fit(const FitSpec& spec, const ExceedanceData& data, const SpatialModel& model,
              const RunHooks& hooks = {});

/// Columns of `data` that are entirely missing (u = +inf): the prediction sites.
std::vector<std::size_t> prediction_sites(const ExceedanceData& data);

/// Pooled predictive draws over all chains at the k-th stored site; rows are draws.
Matrix pooled_predictive(const FitResult& fit, std::size_t stored_index, std::uint64_t seed);

struct ScoreReport {
  std::string label;
  double crps = 0.0;
  double twcrps = 0.0;
  std::size_t cells = 0;
  bool best_crps = false;
  bool best_twcrps = false;
};

/// Held-out truth: y (n x k, NaN for missing cells) and the weight threshold of each site.
struct Holdout {
  Matrix y;
  std::vector<double> thresholds;
};

/// Mean CRPS/twCRPS over all non-missing held-out cells. `draws[v][k]` are the
/// predictive draws (rows) per replicate (columns) of variant v at held-out site k.
std::vector<ScoreReport> compare(const std::vector<std::string>& labels,
                                 const std::vector<std::vector<Matrix>>& draws, const Holdout& holdout,
                                 double sigma = 5.0);

}  // namespace ratemix

#endif
