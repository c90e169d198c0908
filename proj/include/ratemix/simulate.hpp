#ifndef RATEMIX_SIMULATE_HPP
#define RATEMIX_SIMULATE_HPP

#include "ratemix/common.hpp"
#include "ratemix/likelihood.hpp"
#include "ratemix/spatial_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ratemix {

enum class CopulaKind { gaussian, student_t };

struct ScenarioSpec {
  std::size_t d = 100;
  std::size_t n = 100;
  CopulaKind copula = CopulaKind::gaussian;
  double nu = kInf;  // degrees of freedom for the t copula
  HyperParams hyper{{1.0, 1.0, 1.0, 1.0}, 5.0, 5.0, {}, 1.0};
  /// Per-site empirical quantile used as threshold; none means uncensored (u = 0).
  std::optional<double> censor_quantile = 0.75;
  std::size_t n_predict_sites = 20;
  /// Range of the exponential correlation of the third covariate field.
  double covariate_range = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedDataset {
  SpatialDesign design;
  Matrix covariates;  // d x 3: east, north, z3 (raw)
  std::vector<std::string> covariate_names;
  Matrix y;           // n x d complete draws, held-out sites included
  Matrix thresholds;  // n x d as used for fitting; +inf at prediction sites
  std::vector<double> site_thresholds;  // per-site quantile (NaN at prediction sites)
  std::vector<std::size_t> predict_sites;
  std::vector<std::size_t> training_sites;
  Matrix true_log_lambda;
  ExceedanceData data;
  /// Generating model on raw covariates: D1, or D2 when the truth has beta2 slopes.
  SpatialModel model;
};

/// Sites uniform on the unit square; covariates (x, y, z3) with z3 a zero-mean
/// unit-variance Gaussian field; Lambda rows from the latent copula; Y ~ Gamma(Lambda, beta1).
/// The last n_predict_sites sites are held out with u = +inf.
SimulatedDataset simulate_dataset(const ScenarioSpec& spec);

/// Zero-mean unit-variance field with correlation exp(-h / range).
Vector gaussian_field_sample(const SpatialDesign& design, double range, Rng& rng);

/// Type-7 empirical quantile (linear interpolation between order statistics).
double empirical_quantile(std::vector<double> values, double prob);
/// Same on already sorted values.
double empirical_quantile_sorted(const std::vector<double>& sorted, double prob);

struct ChiCurve {
  std::vector<double> u_grid;
  std::vector<double> chi_hat;
  std::vector<double> mc_se;
  std::size_t n_mc = 0;
  std::vector<std::string> warnings;
};

/// Monte Carlo chi(u) for two sites planted `pair_distance` apart, using the
/// scenario's alpha0, beta1, beta2, rho, copula and seed. Quantiles are the
/// empirical margins of the same sample. Blocks of draws use fixed rng
/// substreams so serial and parallel runs agree exactly.
ChiCurve chi_u_curve(const ScenarioSpec& spec, double pair_distance, std::vector<double> u_grid,
                     std::size_t n_mc, Exec exec = Exec::parallel);

}  // namespace ratemix

#endif
