#include "ratemix/latent_field.hpp"

#include "ratemix/distributions.hpp"
#include "ratemix/special.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/random/chi_squared_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace ratemix {

SpatialDesign::SpatialDesign(std::vector<Point> coords) : coords_(std::move(coords)) {
  const auto d = static_cast<Eigen::Index>(coords_.size());
  dist_.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    dist_(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double h = std::hypot(coords_[i].x - coords_[j].x, coords_[i].y - coords_[j].y);
      if (!(h > 0.0))
        throw std::invalid_argument("SpatialDesign: sites " + std::to_string(j) + " and " +
                                    std::to_string(i) + " coincide");
      dist_(i, j) = dist_(j, i) = h;
    }
  }
}

SpatialDesign SpatialDesign::subset(std::span<const std::size_t> sites) const {
  std::vector<Point> pts;
  pts.reserve(sites.size());
  for (auto s : sites) pts.push_back(coords_.at(s));
  return SpatialDesign(std::move(pts));
}

Eigen::VectorXd CorrelationModel::solve(const Eigen::VectorXd& rhs) const {
  const auto lower = chol_.triangularView<Eigen::Lower>();
  Eigen::VectorXd v = lower.solve(rhs);
  return lower.transpose().solve(v);
}

CorrelationModel build_correlation(const SpatialDesign& design, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw std::domain_error("build_correlation: rho must be positive and finite");
  CorrelationModel m;
  m.rho_ = rho;
  m.matrix_ = (-design.dist().array() / rho).exp().matrix();

  Eigen::LLT<Eigen::MatrixXd> llt(m.matrix_);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jittered = m.matrix_;
    jittered.diagonal().array() += kCholeskyJitter;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw FactorizationError("correlation matrix not positive definite at rho = " +
                               std::to_string(rho));
    m.jittered_ = true;
  }
  m.chol_ = llt.matrixL();
  m.log_det_ = 2.0 * m.chol_.diagonal().array().log().sum();
  if (!std::isfinite(m.log_det_))
    throw FactorizationError("correlation matrix singular at rho = " + std::to_string(rho));
  return m;
}

LatentMarginal LatentMarginal::shared_shape(Vector alpha, double beta2) {
  LatentMarginal m;
  m.beta2 = Vector::Constant(alpha.size(), beta2);
  m.alpha = std::move(alpha);
  return m;
}

LatentZ latent_zscore(double lambda, double alpha, double beta2) {
  const double x = alpha * lambda;
  const double p = special::gamma_p(beta2, x);
  if (p <= 0.5) {
    if (p < kZClip) return {special::norm_quantile(kZClip), true};
    return {special::norm_quantile(p), false};
  }
  const double q = p < 0.9 ? 1.0 - p : special::gamma_q(beta2, x);
  if (q < kZClip) return {special::norm_quantile_upper(kZClip), true};
  return {special::norm_quantile_upper(q), false};
}

double copula_loglik_row(std::span<const double> lambda_row, const LatentMarginal& marg,
                         const CorrelationModel& corr) {
  const auto d = static_cast<Eigen::Index>(lambda_row.size());
  if (d != static_cast<Eigen::Index>(corr.size()) || d != marg.alpha.size() ||
      d != marg.beta2.size())
    throw std::invalid_argument("copula_loglik_row: dimension mismatch");

  Eigen::VectorXd z(d);
  double margins = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double lam = lambda_row[static_cast<std::size_t>(j)];
    if (!(lam > 0.0)) throw std::domain_error("copula_loglik_row: latent rates must be positive");
    margins += gamma_logpdf(lam, {marg.alpha(j), marg.beta2(j)});
    z(j) = latent_zscore(lam, marg.alpha(j), marg.beta2(j)).z;
  }
  // log phi_Sigma(z) - sum_j log phi(z_j) = -log|Sigma|/2 - (z' Sigma^{-1} z - z'z)/2
  const Eigen::VectorXd v = corr.chol().triangularView<Eigen::Lower>().solve(z);
  return margins - 0.5 * corr.log_det() - 0.5 * (v.squaredNorm() - z.squaredNorm());
}

namespace {

std::vector<double> gamma_margins_from_uniform_tails(const Eigen::VectorXd& lower,
                                                     const Eigen::VectorXd& upper,
                                                     const LatentMarginal& marg) {
  std::vector<double> out(static_cast<std::size_t>(lower.size()));
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    const double p = std::clamp(lower(j), kZClip, 1.0 - kZClip);
    const double q = std::clamp(upper(j), kZClip, 1.0 - kZClip);
    const double g = p <= 0.5 ? special::gamma_p_inv(marg.beta2(j), p)
                              : special::gamma_q_inv(marg.beta2(j), q);
    out[static_cast<std::size_t>(j)] = g / marg.alpha(j);
  }
  return out;
}

Eigen::VectorXd correlated_normals(const CorrelationModel& corr, Rng& rng) {
  Eigen::VectorXd eps(static_cast<Eigen::Index>(corr.size()));
  for (Eigen::Index j = 0; j < eps.size(); ++j) eps(j) = draw_normal(rng);
  return corr.chol().triangularView<Eigen::Lower>() * eps;
}

}  // namespace

std::vector<double> copula_sample_row(const LatentMarginal& marg, const CorrelationModel& corr,
                                      Rng& rng) {
  const Eigen::VectorXd z = correlated_normals(corr, rng);
  Eigen::VectorXd lower(z.size()), upper(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    lower(j) = special::norm_cdf(z(j));
    upper(j) = special::norm_cdf(-z(j));
  }
  return gamma_margins_from_uniform_tails(lower, upper, marg);
}

std::vector<double> copula_sample_row_t(const LatentMarginal& marg, const CorrelationModel& corr,
                                        double nu, Rng& rng) {
  if (!(nu > 0.0)) throw std::domain_error("copula_sample_row_t: nu must be positive");
  if (std::isinf(nu)) return copula_sample_row(marg, corr, rng);
  const Eigen::VectorXd z = correlated_normals(corr, rng);
  const double w = boost::random::chi_squared_distribution<double>(nu)(rng);
  const double scale = std::sqrt(nu / w);
  const boost::math::students_t_distribution<double> t(nu);
  Eigen::VectorXd lower(z.size()), upper(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double tj = z(j) * scale;
    lower(j) = boost::math::cdf(t, tj);
    upper(j) = boost::math::cdf(boost::math::complement(t, tj));
  }
  return gamma_margins_from_uniform_tails(lower, upper, marg);
}

Vector site_alpha(std::span<const double> coefs, const Matrix& covariates) {
  if (coefs.empty()) throw std::invalid_argument("site_alpha: missing intercept");
  if (static_cast<Eigen::Index>(coefs.size()) != covariates.cols() + 1)
    throw std::invalid_argument("site_alpha: coefficient count does not match covariates");
  if (!(coefs[0] > 0.0)) throw std::domain_error("site_alpha: intercept alpha0 must be positive");
  const double log0 = std::log(coefs[0]);
  Vector out(covariates.rows());
  for (Eigen::Index s = 0; s < covariates.rows(); ++s) {
    double eta = log0;
    for (Eigen::Index k = 0; k < covariates.cols(); ++k)
      eta += coefs[static_cast<std::size_t>(k) + 1] * covariates(s, k);
    if (!std::isfinite(eta) || std::abs(eta) > 700.0)
      throw NumericError("site_alpha: log-linear predictor overflows at site " + std::to_string(s));
    out(s) = std::exp(eta);
  }
  return out;
}

}  // namespace ratemix
