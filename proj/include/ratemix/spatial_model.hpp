#ifndef RATEMIX_SPATIAL_MODEL_HPP
#define RATEMIX_SPATIAL_MODEL_HPP

#include "ratemix/common.hpp"
#include "ratemix/latent_field.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ratemix {

enum class VariantId { D1, D2, D3, D4 };

/// Which hyperparameters carry covariates and whether beta1 is pinned to one.
///   D1: covariates in alpha          D2: covariates in alpha and beta2
///   D3: D1 with beta1 = 1             D4: D2 with beta1 = 1
struct ModelVariant {
  VariantId id = VariantId::D1;
  bool covariates_in_alpha = true;
  bool covariates_in_beta2 = false;
  bool beta1_fixed_at_one = false;

  static ModelVariant from_id(VariantId id);
  /// Accepts "D1".."D4"; throws ValidationError otherwise.
  static ModelVariant parse(std::string_view name);
  std::string name() const;

  friend bool operator==(const ModelVariant&, const ModelVariant&) = default;
};

/// Column-wise affine map applied to covariates. Training constants are reused
/// unchanged for prediction sites.
struct Standardization {
  Vector mean;
  Vector sd;

  static Standardization identity(Eigen::Index cols);
  /// Constants from the listed rows only (all rows when empty).
  static Standardization fit(const Matrix& covariates, std::span<const std::size_t> rows = {});
  Matrix apply(const Matrix& covariates) const;
};

struct SpatialModel {
  ModelVariant variant;
  SpatialDesign design;
  Matrix alpha_covariates;  // d x p, already standardized
  Matrix beta2_covariates;  // d x q, empty unless the variant uses them
  Standardization alpha_standardization;
  Standardization beta2_standardization;
  std::vector<std::string> covariate_names;

  std::size_t sites() const { return design.size(); }
  std::size_t n_alpha_slopes() const { return static_cast<std::size_t>(alpha_covariates.cols()); }
  std::size_t n_beta2_slopes() const { return static_cast<std::size_t>(beta2_covariates.cols()); }
  /// Natural-scale hyperparameter count: D1 with three covariates has 7.
  std::size_t n_hyperparams() const;
  /// Names in natural-scale order: alpha0, alpha_<cov>..., beta1, beta2, beta2_<cov>..., rho.
  std::vector<std::string> hyperparam_names() const;
};

/// Binds covariates to a variant. Covariates are standardized to mean 0 and
/// sd 1 per column unless `standardize` is false (raw-coordinate simulation designs).
/// Constants come from `training_sites` (all sites when empty) and are applied to every
/// site. `covariates` is d x p; D2/D4 reuse the same columns for beta2.
SpatialModel build_model(const ModelVariant& variant, const SpatialDesign& design,
                         const Matrix& covariates, std::vector<std::string> covariate_names = {},
                         bool standardize = true,
                         std::span<const std::size_t> training_sites = {});

}  // namespace ratemix

#endif
