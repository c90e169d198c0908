#include "ratemix/simulate.hpp"

#include "ratemix/distributions.hpp"
#include "ratemix/latent_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ratemix {

void ScenarioSpec::validate() const {
  if (d < 2) throw ValidationError("scenario: d must be at least 2");
  if (n < 1) throw ValidationError("scenario: n must be positive");
  if (n_predict_sites >= d) throw ValidationError("scenario: n_predict_sites must be below d");
  if (censor_quantile && !(*censor_quantile > 0.0 && *censor_quantile < 1.0))
    throw ValidationError("scenario: censor_quantile must lie in (0, 1)");
  if (copula == CopulaKind::student_t && !(nu > 0.0)) throw ValidationError("scenario: nu must be positive");
  if (hyper.alpha_coefs.empty() || !(hyper.alpha_coefs[0] > 0.0) || !(hyper.beta1 > 0.0) ||
      !(hyper.beta2 > 0.0) || !(hyper.rho > 0.0))
    throw ValidationError("scenario: hyperparameters must be positive");
  if (!(covariate_range > 0.0)) throw ValidationError("scenario: covariate_range must be positive");
}

Vector gaussian_field_sample(const SpatialDesign& design, double range, Rng& rng) {
  const CorrelationModel corr = build_correlation(design, range);
  Vector eps(static_cast<Eigen::Index>(design.size()));
  for (Eigen::Index j = 0; j < eps.size(); ++j) eps(j) = draw_normal(rng);
  return corr.chol().triangularView<Eigen::Lower>() * eps;
}

double empirical_quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("empirical_quantile: no values");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::domain_error("empirical_quantile: prob outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double empirical_quantile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  return empirical_quantile_sorted(values, prob);
}

namespace {

enum Stream : std::uint64_t { kCoords = 0, kCovariates = 1, kLatent = 2, kObs = 3 };

std::vector<double> latent_row(const ScenarioSpec& spec, const LatentMarginal& marg,
                               const CorrelationModel& corr, Rng& rng) {
  if (spec.copula == CopulaKind::student_t) return copula_sample_row_t(marg, corr, spec.nu, rng);
  return copula_sample_row(marg, corr, rng);
}

}  // namespace

SimulatedDataset simulate_dataset(const ScenarioSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.d);
  const auto n = static_cast<Eigen::Index>(spec.n);
  SimulatedDataset out;

  Rng coord_rng = make_stream(spec.seed, kCoords);
  std::vector<Point> pts(spec.d);
  for (auto& p : pts) {
    p.x = draw_uniform(coord_rng);
    p.y = draw_uniform(coord_rng);
  }
  out.design = SpatialDesign(std::move(pts));

  Rng cov_rng = make_stream(spec.seed, kCovariates);
  const Vector z3 = gaussian_field_sample(out.design, spec.covariate_range, cov_rng);
  out.covariates.resize(d, 3);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.covariates(j, 0) = out.design.coords()[static_cast<std::size_t>(j)].x;
    out.covariates(j, 1) = out.design.coords()[static_cast<std::size_t>(j)].y;
    out.covariates(j, 2) = z3(j);
  }
  out.covariate_names = {"east", "north", "z3"};

  const std::size_t n_train = spec.d - spec.n_predict_sites;
  for (std::size_t j = 0; j < spec.d; ++j) (j < n_train ? out.training_sites : out.predict_sites).push_back(j);

  if (spec.hyper.alpha_coefs.size() != 4)
    throw ValidationError("scenario: expected alpha0 and three covariate slopes");
  const ModelVariant variant =
      ModelVariant::from_id(spec.hyper.beta2_slopes.empty() ? VariantId::D1 : VariantId::D2);
  out.model = build_model(variant, out.design, out.covariates, out.covariate_names, false);

  LatentMarginal marg;
  marg.alpha = site_alpha(spec.hyper.alpha_coefs, out.model.alpha_covariates);
  marg.beta2 = site_beta2(spec.hyper, out.model);
  const CorrelationModel corr = build_correlation(out.design, spec.hyper.rho);

  Rng lat_rng = make_stream(spec.seed, kLatent);
  Rng obs_rng = make_stream(spec.seed, kObs);
  out.true_log_lambda.resize(n, d);
  out.y.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<double> lam = latent_row(spec, marg, corr, lat_rng);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double l = lam[static_cast<std::size_t>(j)];
      out.true_log_lambda(i, j) = std::log(l);
      out.y(i, j) = gamma_sample({l, spec.hyper.beta1}, obs_rng);
    }
  }

  out.thresholds.resize(n, d);
  out.site_thresholds.assign(spec.d, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index j = 0; j < d; ++j) {
    const bool held_out = static_cast<std::size_t>(j) >= n_train;
    double u = 0.0;
    if (held_out) {
      u = kInf;
    } else if (spec.censor_quantile) {
      std::vector<double> col;
      col.reserve(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) col.push_back(out.y(i, j));
      u = empirical_quantile(std::move(col), *spec.censor_quantile);
      out.site_thresholds[static_cast<std::size_t>(j)] = u;
    } else {
      out.site_thresholds[static_cast<std::size_t>(j)] = 0.0;
    }
    out.thresholds.col(j).setConstant(u);
  }
  out.data = ExceedanceData::from_values(out.y, out.thresholds);
  return out;
}

ChiCurve chi_u_curve(const ScenarioSpec& spec, double pair_distance, std::vector<double> u_grid,
                     std::size_t n_mc, Exec exec) {
  if (!(pair_distance > 0.0)) throw ValidationError("chi: pair distance must be positive");
  if (n_mc < 2) throw ValidationError("chi: n_mc must be at least 2");
  if (u_grid.empty()) throw ValidationError("chi: empty u grid");
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    if (!(u_grid[k] > 0.0 && u_grid[k] < 1.0)) throw ValidationError("chi: u values must lie in (0, 1)");
    if (k > 0 && !(u_grid[k] > u_grid[k - 1])) throw ValidationError("chi: u grid must be strictly increasing");
  }
  if (spec.hyper.alpha_coefs.empty() || !(spec.hyper.alpha_coefs[0] > 0.0) || !(spec.hyper.beta1 > 0.0) ||
      !(spec.hyper.beta2 > 0.0) || !(spec.hyper.rho > 0.0))
    throw ValidationError("chi: hyperparameters must be positive");
  if (spec.copula == CopulaKind::student_t && !(spec.nu > 0.0)) throw ValidationError("chi: nu must be positive");

  const SpatialDesign pair({{0.0, 0.0}, {pair_distance, 0.0}});
  const CorrelationModel corr = build_correlation(pair, spec.hyper.rho);
  const LatentMarginal marg = LatentMarginal::shared_shape(Vector::Constant(2, spec.hyper.alpha_coefs[0]),
                                                           spec.hyper.beta2);
  const double beta1 = spec.hyper.beta1;

  constexpr std::size_t kBlock = 1 << 14;
  const std::size_t n_blocks = (n_mc + kBlock - 1) / kBlock;
  std::vector<double> y1(n_mc), y2(n_mc);
  const bool par = exec == Exec::parallel;

#pragma omp parallel for schedule(dynamic) if (par)
  for (std::size_t b = 0; b < n_blocks; ++b) {
    Rng rng = make_stream(spec.seed, 1000 + b);
    const std::size_t end = std::min(n_mc, (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      const std::vector<double> lam = latent_row(spec, marg, corr, rng);
      y1[r] = gamma_sample({lam[0], beta1}, rng);
      y2[r] = gamma_sample({lam[1], beta1}, rng);
    }
  }

  std::vector<double> s1 = y1, s2 = y2;
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());

  ChiCurve c;
  c.n_mc = n_mc;
  c.u_grid = std::move(u_grid);
  const double nd = static_cast<double>(n_mc);
  for (double u : c.u_grid) {
    const double q1 = empirical_quantile_sorted(s1, u);
    const double q2 = empirical_quantile_sorted(s2, u);
    std::size_t joint = 0;
    for (std::size_t r = 0; r < n_mc; ++r) joint += (y1[r] > q1 && y2[r] > q2);
    const double p = static_cast<double>(joint) / nd;
    c.chi_hat.push_back(std::clamp(p / (1.0 - u), 0.0, 1.0));
    c.mc_se.push_back(std::sqrt(p * (1.0 - p) / nd) / (1.0 - u));
    if ((1.0 - u) * nd < 100.0)
      c.warnings.push_back("chi at u = " + std::to_string(u) + " rests on fewer than 100 expected exceedances");
  }
  return c;
}

}  // namespace ratemix
