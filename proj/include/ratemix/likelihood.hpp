#ifndef RATEMIX_LIKELIHOOD_HPP
#define RATEMIX_LIKELIHOOD_HPP

#include "ratemix/common.hpp"
#include "ratemix/latent_field.hpp"
#include "ratemix/priors.hpp"
#include "ratemix/spatial_model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ratemix {

/// How a cell enters the observation layer.
enum class CellKind : std::uint8_t {
  exceed,    // e = 1: density of y (includes u = 0, the uncensored case)
  censored,  // e = 0, finite u: probability of falling below u
  missing,   // u = +inf: no observation term, latent still sampled
};

/// n x d observations with per-cell thresholds. y is ignored where u = +inf.
class ExceedanceData {
 public:
  ExceedanceData() = default;

  /// Indicators derived as e = (y >= u); u = +inf marks missing cells.
  static ExceedanceData from_values(Matrix y, Matrix u);
  /// Explicit indicators, validated against y and u.
  static ExceedanceData from_indicators(Matrix y, Matrix u,
                                        const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& e);

  Eigen::Index rows() const { return y_.rows(); }
  Eigen::Index cols() const { return y_.cols(); }
  const Matrix& y() const { return y_; }
  const Matrix& u() const { return u_; }
  CellKind kind(Eigen::Index i, Eigen::Index j) const {
    return kinds_[static_cast<std::size_t>(i * y_.cols() + j)];
  }
  bool exceeds(Eigen::Index i, Eigen::Index j) const { return kind(i, j) == CellKind::exceed; }
  /// True when every cell of column j is missing.
  bool site_fully_missing(Eigen::Index j) const;

 private:
  ExceedanceData(Matrix y, Matrix u, std::vector<CellKind> kinds);
  Matrix y_;
  Matrix u_;
  std::vector<CellKind> kinds_;
};

/// Natural-scale hyperparameters. alpha_coefs[0] is the intercept alpha0 > 0,
/// the rest are log-linear slopes. beta2 is the (intercept) latent shape; D2/D4
/// add beta2_slopes on the same covariates.
struct HyperParams {
  std::vector<double> alpha_coefs{1.0};
  double beta1 = 1.0;
  double beta2 = 1.0;
  std::vector<double> beta2_slopes;
  double rho = 1.0;
};

/// Internal coordinates: alpha_t = log(alpha0 beta1 / beta2), beta1_t = log(alpha0 beta1^2 / beta2),
/// beta2_t = -log beta2, rho_t = log rho. Slopes are carried untransformed.
/// When beta1 is pinned at one, beta1_t is unused and alpha_t = log(alpha0 / beta2).
struct TransformedHyperParams {
  double alpha_t = 0.0;
  std::vector<double> alpha_slopes;
  double beta1_t = 0.0;
  double beta2_t = 0.0;
  std::vector<double> beta2_slopes;
  double rho_t = 0.0;
};

TransformedHyperParams transform(const HyperParams& h, bool beta1_fixed = false);
HyperParams inverse_transform(const TransformedHyperParams& t, bool beta1_fixed = false);
/// log |d natural / d transformed| = rho_t + alpha_t - 2 beta2_t.
double log_jacobian(const TransformedHyperParams& t);

/// Flat vector in hyperparam_names() order with beta1_t omitted when pinned.
std::vector<double> pack(const TransformedHyperParams& t, bool beta1_fixed);
TransformedHyperParams unpack(std::span<const double> v, const SpatialModel& model);
/// Natural-scale flat vector in hyperparam_names() order.
std::vector<double> natural_vector(const HyperParams& h, bool beta1_fixed);

/// n x d log latent rates.
struct LatentMatrix {
  Matrix log_lambda;
};

/// Observation-layer log contribution of one cell.
double obs_logcontrib(double y, double u, bool exceed, double lambda, double beta1);
/// d/d log(lambda) of obs_logcontrib.
double obs_logcontrib_dlog(double y, double u, bool exceed, double lambda, double beta1);

/// Joint log prior density of the natural-scale hyperparameters, -inf off support.
/// alpha0 and a covariate-dependent beta2 intercept are log-normal N(0, coef_var) on the log scale.
double hyper_logprior(const HyperParams& h, const ModelVariant& variant, const PriorConfig& priors);

enum class Exec { serial, parallel };

/// Hyperparameter-dependent quantities shared by every latent evaluation.
struct PreparedHyper {
  HyperParams natural;
  TransformedHyperParams transformed;
  CorrelationModel corr;
  LatentMarginal margins;
  Vector margin_const;  // beta2_j log alpha_j - lgamma(beta2_j)
  double beta1_lgamma = 0.0;
  double log_prior = 0.0;
  double log_jacobian = 0.0;
};

/// Term breakdown of the augmented log posterior.
struct PosteriorTerms {
  double obs = 0.0;
  double latent = 0.0;    // gamma margins plus Gaussian copula correction
  double log_lambda = 0.0;  // sum of log latents from the change of variables
  double prior = 0.0;
  double jacobian = 0.0;
  double total() const { return obs + latent + log_lambda + prior + jacobian; }
};

/// Augmented censored log posterior on (transformed hyperparameters, log latents).
/// Row kernels run under OpenMP when Exec::parallel; row sums are reduced in a
/// fixed order so serial and parallel results are bit-identical.
class PosteriorEvaluator {
 public:
  PosteriorEvaluator(const ExceedanceData& data, const SpatialModel& model, PriorConfig priors);

  const ExceedanceData& data() const { return *data_; }
  const SpatialModel& model() const { return *model_; }
  const PriorConfig& priors() const { return priors_; }

  /// Empty when the hyperparameters are off prior support or Sigma cannot be factorized.
  std::optional<PreparedHyper> prepare(const HyperParams& h) const;

  /// Fills `grad` (n x d, d/d log lambda) when non-null.
  PosteriorTerms evaluate(const PreparedHyper& hyper, const Matrix& log_lambda, Matrix* grad,
                          Exec exec = Exec::parallel) const;

 private:
  const ExceedanceData* data_;
  const SpatialModel* model_;
  PriorConfig priors_;
};

double augmented_logpost(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                         const SpatialModel& model, const PriorConfig& priors);
Matrix grad_logpost_latent(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                           const SpatialModel& model, const PriorConfig& priors);

/// Straightforward serial implementation built from the per-cell and per-row
/// public functions, kept as a cross-check for the fast kernel.
namespace reference {

double augmented_logpost(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                         const SpatialModel& model, const PriorConfig& priors);
Matrix grad_logpost_latent(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                           const SpatialModel& model, const PriorConfig& priors);

}  // namespace reference

/// Site-level latent shapes beta2(s) = beta2 exp(sum_k slope_k x_k(s)).
Vector site_beta2(const HyperParams& h, const SpatialModel& model);

}  // namespace ratemix

#endif
