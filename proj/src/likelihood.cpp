#include "ratemix/likelihood.hpp"

#include "ratemix/distributions.hpp"
#include "ratemix/special.hpp"

#include <cmath>
#include <string>

namespace ratemix {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(what) + ": shape mismatch");
}

std::string cell_name(Eigen::Index i, Eigen::Index j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

CellKind classify(double y, double u, Eigen::Index i, Eigen::Index j) {
  if (std::isnan(u) || u < 0.0) throw ValidationError("threshold must be >= 0 at cell " + cell_name(i, j));
  if (std::isinf(u)) return CellKind::missing;
  if (!std::isfinite(y) || y < 0.0)
    throw ValidationError("observation must be finite and >= 0 at cell " + cell_name(i, j));
  if (y >= u) {
    if (!(y > 0.0)) throw ValidationError("exceeding observation must be positive at cell " + cell_name(i, j));
    return CellKind::exceed;
  }
  return CellKind::censored;
}

}  // namespace

ExceedanceData::ExceedanceData(Matrix y, Matrix u, std::vector<CellKind> kinds)
    : y_(std::move(y)), u_(std::move(u)), kinds_(std::move(kinds)) {}

ExceedanceData ExceedanceData::from_values(Matrix y, Matrix u) {
  require_same_shape(y, u, "ExceedanceData");
  std::vector<CellKind> kinds(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      kinds[static_cast<std::size_t>(i * y.cols() + j)] = classify(y(i, j), u(i, j), i, j);
  return ExceedanceData(std::move(y), std::move(u), std::move(kinds));
}

ExceedanceData ExceedanceData::from_indicators(
    Matrix y, Matrix u, const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& e) {
  require_same_shape(y, u, "ExceedanceData");
  if (e.rows() != y.rows() || e.cols() != y.cols())
    throw ValidationError("ExceedanceData: indicator shape mismatch");
  ExceedanceData out = from_values(std::move(y), std::move(u));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const int ej = e(i, j);
      if (ej != 0 && ej != 1)
        throw ValidationError("indicator must be 0 or 1 at cell " + cell_name(i, j));
      const bool expected = out.kind(i, j) == CellKind::exceed;
      if ((ej == 1) != expected)
        throw ValidationError("indicator inconsistent with y and u at cell " + cell_name(i, j));
    }
  }
  return out;
}

bool ExceedanceData::site_fully_missing(Eigen::Index j) const {
  for (Eigen::Index i = 0; i < rows(); ++i)
    if (kind(i, j) != CellKind::missing) return false;
  return true;
}

TransformedHyperParams transform(const HyperParams& h, bool beta1_fixed) {
  const double a0 = h.alpha_coefs.at(0);
  const double b1 = beta1_fixed ? 1.0 : h.beta1;
  TransformedHyperParams t;
  t.alpha_t = std::log(a0) + std::log(b1) - std::log(h.beta2);
  t.beta1_t = beta1_fixed ? 0.0 : std::log(a0) + 2.0 * std::log(b1) - std::log(h.beta2);
  t.beta2_t = -std::log(h.beta2);
  t.rho_t = std::log(h.rho);
  t.alpha_slopes.assign(h.alpha_coefs.begin() + 1, h.alpha_coefs.end());
  t.beta2_slopes = h.beta2_slopes;
  return t;
}

HyperParams inverse_transform(const TransformedHyperParams& t, bool beta1_fixed) {
  HyperParams h;
  double a0;
  if (beta1_fixed) {
    h.beta1 = 1.0;
    a0 = std::exp(t.alpha_t - t.beta2_t);
  } else {
    h.beta1 = std::exp(t.beta1_t - t.alpha_t);
    a0 = std::exp(2.0 * t.alpha_t - t.beta1_t - t.beta2_t);
  }
  h.beta2 = std::exp(-t.beta2_t);
  h.rho = std::exp(t.rho_t);
  h.alpha_coefs.assign(1, a0);
  h.alpha_coefs.insert(h.alpha_coefs.end(), t.alpha_slopes.begin(), t.alpha_slopes.end());
  h.beta2_slopes = t.beta2_slopes;
  return h;
}

double log_jacobian(const TransformedHyperParams& t) {
  return t.rho_t + t.alpha_t - 2.0 * t.beta2_t;
}

std::vector<double> pack(const TransformedHyperParams& t, bool beta1_fixed) {
  std::vector<double> v{t.alpha_t};
  v.insert(v.end(), t.alpha_slopes.begin(), t.alpha_slopes.end());
  if (!beta1_fixed) v.push_back(t.beta1_t);
  v.push_back(t.beta2_t);
  v.insert(v.end(), t.beta2_slopes.begin(), t.beta2_slopes.end());
  v.push_back(t.rho_t);
  return v;
}

TransformedHyperParams unpack(std::span<const double> v, const SpatialModel& model) {
  if (v.size() != model.n_hyperparams())
    throw std::invalid_argument("unpack: expected " + std::to_string(model.n_hyperparams()) +
                                " values, got " + std::to_string(v.size()));
  TransformedHyperParams t;
  std::size_t k = 0;
  t.alpha_t = v[k++];
  for (std::size_t s = 0; s < model.n_alpha_slopes(); ++s) t.alpha_slopes.push_back(v[k++]);
  if (!model.variant.beta1_fixed_at_one) t.beta1_t = v[k++];
  t.beta2_t = v[k++];
  for (std::size_t s = 0; s < model.n_beta2_slopes(); ++s) t.beta2_slopes.push_back(v[k++]);
  t.rho_t = v[k++];
  return t;
}

std::vector<double> natural_vector(const HyperParams& h, bool beta1_fixed) {
  std::vector<double> v(h.alpha_coefs.begin(), h.alpha_coefs.end());
  if (!beta1_fixed) v.push_back(h.beta1);
  v.push_back(h.beta2);
  v.insert(v.end(), h.beta2_slopes.begin(), h.beta2_slopes.end());
  v.push_back(h.rho);
  return v;
}

double obs_logcontrib(double y, double u, bool exceed, double lambda, double beta1) {
  if (!(lambda > 0.0) || !(beta1 > 0.0))
    throw std::domain_error("obs_logcontrib: lambda and beta1 must be positive");
  if (std::isinf(u)) return 0.0;
  if (exceed) return gamma_logpdf(y, {lambda, beta1});
  return special::log_gamma_p(beta1, lambda * u);
}

double obs_logcontrib_dlog(double y, double u, bool exceed, double lambda, double beta1) {
  if (!(lambda > 0.0) || !(beta1 > 0.0))
    throw std::domain_error("obs_logcontrib_dlog: lambda and beta1 must be positive");
  if (std::isinf(u)) return 0.0;
  if (exceed) return beta1 - lambda * y;
  // d/dlambda P(beta1, lambda u) = u g(lambda u; beta1), times lambda for the log scale
  const double x = lambda * u;
  return std::exp(beta1 * std::log(x) - x - special::lgamma(beta1) - special::log_gamma_p(beta1, x));
}

double hyper_logprior(const HyperParams& h, const ModelVariant& variant, const PriorConfig& priors) {
  const auto& v = priors.vague;
  if (h.alpha_coefs.empty() || !(h.alpha_coefs[0] > 0.0) || !(h.beta2 > 0.0) || !(h.rho > 0.0))
    return kLogZero;
  if (!variant.beta1_fixed_at_one && !(h.beta1 > 0.0)) return kLogZero;

  const double log_a0 = std::log(h.alpha_coefs[0]);
  double lp = vague_logprior_coef(log_a0, v) - log_a0;
  for (std::size_t k = 1; k < h.alpha_coefs.size(); ++k) lp += vague_logprior_coef(h.alpha_coefs[k], v);
  if (!variant.beta1_fixed_at_one) lp += pc_logprior_beta1(h.beta1, priors.beta1.kappa1);
  if (variant.covariates_in_beta2) {
    const double log_b2 = std::log(h.beta2);
    lp += vague_logprior_coef(log_b2, v) - log_b2;
    for (double s : h.beta2_slopes) lp += vague_logprior_coef(s, v);
  } else {
    lp += pc_logprior_beta2(h.beta2, priors.tail.kappa2);
  }
  lp += vague_logprior_range(h.rho, v);
  return std::isnan(lp) ? kLogZero : lp;
}

Vector site_beta2(const HyperParams& h, const SpatialModel& model) {
  if (!model.variant.covariates_in_beta2) return Vector::Constant(static_cast<Eigen::Index>(model.sites()), h.beta2);
  std::vector<double> coefs{h.beta2};
  coefs.insert(coefs.end(), h.beta2_slopes.begin(), h.beta2_slopes.end());
  return site_alpha(coefs, model.beta2_covariates);
}

namespace {

void fill_latent_terms(PreparedHyper& p, const SpatialModel& m) {
  p.corr = build_correlation(m.design, p.natural.rho);
  p.margins.alpha = site_alpha(p.natural.alpha_coefs, m.alpha_covariates);
  p.margins.beta2 = site_beta2(p.natural, m);
  const auto d = static_cast<Eigen::Index>(m.sites());
  p.margin_const.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double b2 = p.margins.beta2(j);
    p.margin_const(j) = b2 * std::log(p.margins.alpha(j)) - special::lgamma(b2);
  }
  p.beta1_lgamma = special::lgamma(p.natural.beta1);
}

PreparedHyper prepare_latent_terms(const HyperParams& h, const SpatialModel& m) {
  PreparedHyper p;
  p.natural = h;
  if (m.variant.beta1_fixed_at_one) p.natural.beta1 = 1.0;
  fill_latent_terms(p, m);
  return p;
}

}  // namespace

PosteriorEvaluator::PosteriorEvaluator(const ExceedanceData& data, const SpatialModel& model,
                                       PriorConfig priors)
    : data_(&data), model_(&model), priors_(priors) {
  if (static_cast<std::size_t>(data.cols()) != model.sites())
    throw ValidationError("data has " + std::to_string(data.cols()) + " sites, model has " +
                          std::to_string(model.sites()));
}

std::optional<PreparedHyper> PosteriorEvaluator::prepare(const HyperParams& h) const {
  const auto& m = *model_;
  if (h.alpha_coefs.size() != m.n_alpha_slopes() + 1 || h.beta2_slopes.size() != m.n_beta2_slopes())
    throw std::invalid_argument("prepare: hyperparameter dimensions do not match the model");
  const double lp = hyper_logprior(h, m.variant, priors_);
  if (!std::isfinite(lp)) return std::nullopt;

  PreparedHyper p;
  p.natural = h;
  if (m.variant.beta1_fixed_at_one) p.natural.beta1 = 1.0;
  p.transformed = transform(p.natural, m.variant.beta1_fixed_at_one);
  try {
    fill_latent_terms(p, m);
  } catch (const NumericError&) {
    return std::nullopt;
  }
  p.log_prior = lp;
  p.log_jacobian = log_jacobian(p.transformed);
  if (!p.margin_const.allFinite() || !std::isfinite(p.log_jacobian)) return std::nullopt;
  return p;
}

PosteriorTerms PosteriorEvaluator::evaluate(const PreparedHyper& hyper, const Matrix& log_lambda,
                                            Matrix* grad, Exec exec) const {
  const ExceedanceData& data = *data_;
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (log_lambda.rows() != n || log_lambda.cols() != d)
    throw std::invalid_argument("evaluate: latent matrix shape does not match data");
  const bool want_grad = grad != nullptr;
  if (want_grad) grad->resize(n, d);

  const double beta1 = hyper.natural.beta1;
  const double lg_b1 = hyper.beta1_lgamma;
  const Vector& alpha = hyper.margins.alpha;
  const Vector& beta2 = hyper.margins.beta2;

  // z-scores are stored site-major so the triangular solves act on contiguous columns.
  Eigen::MatrixXd zt(d, n);
  Eigen::MatrixXd dz(want_grad ? d : 0, want_grad ? n : 0);
  Vector row_obs(n), row_margin(n), row_log(n), row_zz(n), row_quad(n);
  const bool par = exec == Exec::parallel;

#pragma omp parallel for schedule(static) if (par)
  for (Eigen::Index i = 0; i < n; ++i) {
    double s_obs = 0.0, s_margin = 0.0, s_log = 0.0, s_zz = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double l = log_lambda(i, j);
      const double lam = std::exp(l);
      double g = 1.0;
      switch (data.kind(i, j)) {
        case CellKind::exceed: {
          const double y = data.y()(i, j);
          s_obs += beta1 * l - lg_b1 + (beta1 - 1.0) * std::log(y) - lam * y;
          g += beta1 - lam * y;
          break;
        }
        case CellKind::censored: {
          const double x = lam * data.u()(i, j);
          const double logp = special::log_gamma_p(beta1, x);
          s_obs += logp;
          if (want_grad) g += std::exp(beta1 * std::log(x) - x - lg_b1 - logp);
          break;
        }
        case CellKind::missing:
          break;
      }
      const double b2 = beta2(j);
      const double a = alpha(j);
      const double margin = hyper.margin_const(j) + b2 * l - a * lam;  // includes the log-latent Jacobian's l
      s_margin += margin - l;
      s_log += l;
      const LatentZ z = latent_zscore(lam, a, b2);
      zt(j, i) = z.z;
      s_zz += z.z * z.z;
      if (want_grad) {
        g += b2 - 1.0 - a * lam;
        dz(j, i) = z.clamped ? 0.0 : std::exp(margin - special::norm_logpdf(z.z));
        (*grad)(i, j) = g;
      }
    }
    row_obs(i) = s_obs;
    row_margin(i) = s_margin;
    row_log(i) = s_log;
    row_zz(i) = s_zz;
  }

  const auto lower = hyper.corr.chol().triangularView<Eigen::Lower>();
  Eigen::MatrixXd v = lower.solve(zt);
  for (Eigen::Index i = 0; i < n; ++i) row_quad(i) = v.col(i).squaredNorm();
  if (want_grad) {
    lower.transpose().solveInPlace(v);  // v = Sigma^{-1} z
#pragma omp parallel for schedule(static) if (par)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) (*grad)(i, j) -= (v(j, i) - zt(j, i)) * dz(j, i);
  }

  PosteriorTerms t;
  const double half_logdet = 0.5 * hyper.corr.log_det();
  for (Eigen::Index i = 0; i < n; ++i) {
    t.obs += row_obs(i);
    t.latent += row_margin(i) - half_logdet - 0.5 * (row_quad(i) - row_zz(i));
    t.log_lambda += row_log(i);
  }
  t.prior = hyper.log_prior;
  t.jacobian = hyper.log_jacobian;
  return t;
}

double augmented_logpost(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                         const SpatialModel& model, const PriorConfig& priors) {
  PosteriorEvaluator eval(data, model, priors);
  const auto p = eval.prepare(h);
  if (!p) return kLogZero;
  return eval.evaluate(*p, l.log_lambda, nullptr, Exec::serial).total();
}

Matrix grad_logpost_latent(const HyperParams& h, const LatentMatrix& l, const ExceedanceData& data,
                           const SpatialModel& model, const PriorConfig& priors) {
  PosteriorEvaluator eval(data, model, priors);
  // The latent gradient does not involve the hyperparameter prior, so it is
  // defined even where that prior vanishes.
  auto p = eval.prepare(h);
  if (!p) p = prepare_latent_terms(h, model);
  Matrix g;
  eval.evaluate(*p, l.log_lambda, &g, Exec::serial);
  return g;
}

}  // namespace ratemix
