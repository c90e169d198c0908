#include "ratemix/spatial_model.hpp"

#include <cmath>

namespace ratemix {

ModelVariant ModelVariant::from_id(VariantId id) {
  ModelVariant v;
  v.id = id;
  v.covariates_in_alpha = true;
  v.covariates_in_beta2 = id == VariantId::D2 || id == VariantId::D4;
  v.beta1_fixed_at_one = id == VariantId::D3 || id == VariantId::D4;
  return v;
}

ModelVariant ModelVariant::parse(std::string_view name) {
  if (name == "D1") return from_id(VariantId::D1);
  if (name == "D2") return from_id(VariantId::D2);
  if (name == "D3") return from_id(VariantId::D3);
  if (name == "D4") return from_id(VariantId::D4);
  throw ValidationError("unknown model variant '" + std::string(name) + "' (expected D1..D4)");
}

std::string ModelVariant::name() const {
  switch (id) {
    case VariantId::D1: return "D1";
    case VariantId::D2: return "D2";
    case VariantId::D3: return "D3";
    case VariantId::D4: return "D4";
  }
  return "?";
}

Standardization Standardization::identity(Eigen::Index cols) {
  return {Vector::Zero(cols), Vector::Ones(cols)};
}

Standardization Standardization::fit(const Matrix& covariates, std::span<const std::size_t> rows) {
  Matrix used;
  if (rows.empty()) {
    used = covariates;
  } else {
    used.resize(static_cast<Eigen::Index>(rows.size()), covariates.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r] >= static_cast<std::size_t>(covariates.rows()))
        throw ValidationError("standardization row index out of range");
      used.row(static_cast<Eigen::Index>(r)) = covariates.row(static_cast<Eigen::Index>(rows[r]));
    }
  }
  const auto n = used.rows();
  Standardization s = identity(covariates.cols());
  if (n < 2) return s;
  for (Eigen::Index k = 0; k < used.cols(); ++k) {
    const double mean = used.col(k).mean();
    const double var = (used.col(k).array() - mean).square().sum() / static_cast<double>(n - 1);
    if (!(var > 0.0))
      throw ValidationError("covariate column " + std::to_string(k) + " is constant");
    s.mean(k) = mean;
    s.sd(k) = std::sqrt(var);
  }
  return s;
}

Matrix Standardization::apply(const Matrix& covariates) const {
  if (covariates.cols() != mean.size())
    throw ValidationError("covariate column count does not match standardization");
  Matrix out(covariates.rows(), covariates.cols());
  for (Eigen::Index k = 0; k < covariates.cols(); ++k)
    out.col(k) = (covariates.col(k).array() - mean(k)) / sd(k);
  return out;
}

std::size_t SpatialModel::n_hyperparams() const {
  // alpha0 + slopes, beta1 unless fixed, beta2 (+ slopes), rho
  return 1 + n_alpha_slopes() + (variant.beta1_fixed_at_one ? 0 : 1) + 1 + n_beta2_slopes() + 1;
}

std::vector<std::string> SpatialModel::hyperparam_names() const {
  auto cov_name = [&](std::size_t k) {
    return k < covariate_names.size() ? covariate_names[k] : "x" + std::to_string(k + 1);
  };
  std::vector<std::string> names{"alpha0"};
  for (std::size_t k = 0; k < n_alpha_slopes(); ++k) names.push_back("alpha_" + cov_name(k));
  if (!variant.beta1_fixed_at_one) names.push_back("beta1");
  names.push_back(variant.covariates_in_beta2 ? "beta2_0" : "beta2");
  for (std::size_t k = 0; k < n_beta2_slopes(); ++k) names.push_back("beta2_" + cov_name(k));
  names.push_back("rho");
  return names;
}

SpatialModel build_model(const ModelVariant& variant, const SpatialDesign& design,
                         const Matrix& covariates, std::vector<std::string> covariate_names,
                         bool standardize, std::span<const std::size_t> training_sites) {
  if (static_cast<std::size_t>(covariates.rows()) != design.size())
    throw ValidationError("covariate rows (" + std::to_string(covariates.rows()) +
                          ") do not match site count (" + std::to_string(design.size()) + ")");
  if (!covariate_names.empty() &&
      covariate_names.size() != static_cast<std::size_t>(covariates.cols()))
    throw ValidationError("covariate name count does not match covariate columns");

  SpatialModel m;
  m.variant = variant;
  m.design = design;
  m.covariate_names = std::move(covariate_names);
  m.alpha_standardization =
      standardize ? Standardization::fit(covariates, training_sites) : Standardization::identity(covariates.cols());
  m.alpha_covariates = m.alpha_standardization.apply(covariates);
  if (variant.covariates_in_beta2) {
    m.beta2_standardization = m.alpha_standardization;
    m.beta2_covariates = m.alpha_covariates;
  } else {
    m.beta2_standardization = Standardization::identity(0);
    m.beta2_covariates = Matrix(covariates.rows(), 0);
  }
  return m;
}

}  // namespace ratemix
