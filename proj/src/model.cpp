#include "ratemix/model.hpp"

#include "ratemix/diagnostics.hpp"
#include "ratemix/latent_field.hpp"
#include "ratemix/simulate.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ratemix {

namespace {

struct SpatialCache : HyperCache {
  PreparedHyper prepared;
};


// Coordinate-wise maximization of the censored marginal likelihood that ignores spatial
// dependence. Only the margin parameters move; rho keeps its distance-based start.
void refine_margins(HyperParams& h, const ExceedanceData& data, const SpatialModel& model) {
  const bool fit_beta1 = !model.variant.beta1_fixed_at_one;
  std::vector<double> x{std::log(h.alpha_coefs[0])};
  x.insert(x.end(), h.alpha_coefs.begin() + 1, h.alpha_coefs.end());
  const std::size_t i_beta1 = x.size();
  if (fit_beta1) x.push_back(std::log(h.beta1));
  const std::size_t i_beta2 = x.size();
  x.push_back(std::log(h.beta2));
  x.insert(x.end(), h.beta2_slopes.begin(), h.beta2_slopes.end());
  const std::size_t n_alpha = h.alpha_coefs.size();

  auto unpack = [&](const std::vector<double>& v) {
    HyperParams g = h;
    g.alpha_coefs[0] = std::exp(v[0]);
    for (std::size_t k = 1; k < n_alpha; ++k) g.alpha_coefs[k] = v[k];
    if (fit_beta1) g.beta1 = std::exp(v[i_beta1]);
    g.beta2 = std::exp(v[i_beta2]);
    for (std::size_t k = 0; k < g.beta2_slopes.size(); ++k) g.beta2_slopes[k] = v[i_beta2 + 1 + k];
    return g;
  };
  auto objective = [&](const std::vector<double>& v) {
    try {
      const HyperParams g = unpack(v);
      const Vector alpha = site_alpha(g.alpha_coefs, model.alpha_covariates);
      const Vector beta2 = site_beta2(g, model);
      double nll = 0.0;
      for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const GammaGammaParams p{alpha(j), g.beta1, beta2(j)};
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
          switch (data.kind(i, j)) {
            case CellKind::exceed: nll -= gamma_gamma_logpdf(data.y()(i, j), p); break;
            case CellKind::censored: nll -= std::log(gamma_gamma_cdf(data.u()(i, j), p)); break;
            case CellKind::missing: break;
          }
        }
      }
      return std::isfinite(nll) ? nll : std::numeric_limits<double>::max();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::max();
    }
  };

  double best = objective(x);
  if (best == std::numeric_limits<double>::max()) return;
  for (int cycle = 0; cycle < 30; ++cycle) {
    const double before = best;
    for (std::size_t k = 0; k < x.size(); ++k) {
      auto line = [&](double t) {
        std::vector<double> v = x;
        v[k] = t;
        return objective(v);
      };
      const auto [t, f] = boost::math::tools::brent_find_minima(line, x[k] - 1.5, x[k] + 1.5, 30);
      if (f < best) {
        x[k] = t;
        best = f;
      }
    }
    if (before - best < 1e-8 * (1.0 + std::abs(best))) break;
  }
  const HyperParams g = unpack(x);
  // keep the tail finite-mean so the latent field starts in a well-behaved region
  if (g.beta2 > 1.0 && g.beta1 < 1e3) h = g;
}

}  // namespace

SpatialPosteriorTarget::SpatialPosteriorTarget(const ExceedanceData& data, const SpatialModel& model,
                                               PriorConfig priors, Exec exec)
    : eval_(data, model, priors), exec_(exec) {}

std::size_t SpatialPosteriorTarget::hyper_dim() const { return eval_.model().n_hyperparams(); }

std::vector<std::string> SpatialPosteriorTarget::hyper_names() const { return eval_.model().hyperparam_names(); }

HyperParams SpatialPosteriorTarget::natural(std::span<const double> theta) const {
  const auto& m = eval_.model();
  return inverse_transform(unpack(theta, m), m.variant.beta1_fixed_at_one);
}

std::vector<double> SpatialPosteriorTarget::theta_of(const HyperParams& h) const {
  const bool fixed = eval_.model().variant.beta1_fixed_at_one;
  return pack(transform(h, fixed), fixed);
}

std::vector<double> SpatialPosteriorTarget::report(std::span<const double> theta) const {
  return natural_vector(natural(theta), eval_.model().variant.beta1_fixed_at_one);
}

std::unique_ptr<HyperCache> SpatialPosteriorTarget::prepare(std::span<const double> theta) const {
  for (double v : theta)
    if (!std::isfinite(v)) return nullptr;
  const HyperParams h = natural(theta);
  for (double v : natural_vector(h, eval_.model().variant.beta1_fixed_at_one))
    if (!std::isfinite(v)) return nullptr;
  auto p = eval_.prepare(h);
  if (!p) return nullptr;
  auto c = std::make_unique<SpatialCache>();
  c->prepared = std::move(*p);
  return c;
}

double SpatialPosteriorTarget::evaluate(const HyperCache& cache, const Matrix& latents, Matrix* grad) const {
  const auto& c = static_cast<const SpatialCache&>(cache);
  const double lp = eval_.evaluate(c.prepared, latents, grad, exec_).total();
  return std::isnan(lp) ? kLogZero : lp;
}

Matrix site_thresholds(const Matrix& y, double prob, std::span<const std::size_t> held_out) {
  if (!(prob > 0.0 && prob < 1.0)) throw ValidationError("threshold quantile must lie in (0, 1)");
  Matrix u(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const bool out = std::find(held_out.begin(), held_out.end(), static_cast<std::size_t>(j)) != held_out.end();
    if (out) {
      u.col(j).setConstant(kInf);
      continue;
    }
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      if (std::isfinite(y(i, j))) vals.push_back(y(i, j));
    if (vals.empty()) throw ValidationError("site " + std::to_string(j) + " has no observed values");
    const double q = empirical_quantile(std::move(vals), prob);
    for (Eigen::Index i = 0; i < y.rows(); ++i) u(i, j) = std::isfinite(y(i, j)) ? q : kInf;
  }
  return u;
}

HyperParams default_initial_hyper(const ExceedanceData& data, const SpatialModel& model) {
  // Under beta1 = 1, beta2 = 3 the margin is GP with quantile alpha ((1 - q)^(-1/3) - 1).
  constexpr double kBeta2 = 3.0;
  double log_sum = 0.0;
  std::size_t used = 0;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    std::size_t exceed = 0, observed = 0;
    std::vector<double> values;
    double u = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const CellKind k = data.kind(i, j);
      if (k == CellKind::missing) continue;
      ++observed;
      if (k == CellKind::exceed) {
        ++exceed;
        values.push_back(data.y()(i, j));
      }
      u = std::max(u, data.u()(i, j));
    }
    if (observed == 0 || exceed == 0) continue;
    double scale;
    if (u > 0.0 && exceed < observed) {
      const double p = static_cast<double>(exceed) / static_cast<double>(observed);
      scale = u / (std::pow(p, -1.0 / kBeta2) - 1.0);
    } else {
      scale = empirical_quantile(std::move(values), 0.5) / (std::pow(2.0, 1.0 / kBeta2) - 1.0);
    }
    if (std::isfinite(scale) && scale > 0.0) {
      log_sum += std::log(scale);
      ++used;
    }
  }
  HyperParams h;
  h.alpha_coefs.assign(model.n_alpha_slopes() + 1, 0.0);
  h.alpha_coefs[0] = used > 0 ? std::exp(log_sum / static_cast<double>(used)) : 1.0;
  h.beta1 = 1.0;
  h.beta2 = kBeta2;
  h.beta2_slopes.assign(model.n_beta2_slopes(), 0.0);

  std::vector<double> dists;
  const Matrix& dist = model.design.dist();
  for (Eigen::Index i = 0; i < dist.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) dists.push_back(dist(i, j));
  h.rho = dists.empty() ? 1.0 : 0.5 * empirical_quantile(std::move(dists), 0.5);
  refine_margins(h, data, model);
  return h;
}

Matrix init_latents(const ExceedanceData& data, const SpatialModel& model, const HyperParams& h, Rng& rng) {
  const CorrelationModel corr = build_correlation(model.design, h.rho);
  LatentMarginal marg;
  marg.alpha = site_alpha(h.alpha_coefs, model.alpha_covariates);
  marg.beta2 = site_beta2(h, model);
  Matrix l(data.rows(), data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const std::vector<double> row = copula_sample_row(marg, corr, rng);
    for (Eigen::Index j = 0; j < data.cols(); ++j) l(i, j) = std::log(row[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double a = marg.alpha(j), b2 = marg.beta2(j);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const CellKind k = data.kind(i, j);
      if (k == CellKind::exceed) {
        l(i, j) = std::log(gamma_sample({a + data.y()(i, j), h.beta1 + b2}, rng));
      } else if (k == CellKind::censored) {
        for (int tries = 0; tries < 100; ++tries) {
          const double lam = gamma_sample({a, b2}, rng);
          if (!(lam > 0.0)) continue;
          l(i, j) = std::log(lam);
          if (draw_uniform(rng) < gamma_cdf(data.u()(i, j), {lam, h.beta1})) break;
        }
      }
    }
  }
  return l;
}

std::vector<std::size_t> prediction_sites(const ExceedanceData& data) {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < data.cols(); ++j)
    if (data.site_fully_missing(j)) out.push_back(static_cast<std::size_t>(j));
  return out;
}

SamplerConfig chain_config(const FitSpec& spec, const ExceedanceData& data, std::size_t chain) {
  SamplerConfig cfg = spec.sampler;
  cfg.seed = spec.sampler.seed + chain;
  cfg.stored_columns = prediction_sites(data);
  return cfg;
}

ChainOutput fit_chain(const FitSpec& spec, const SpatialPosteriorTarget& target, const ExceedanceData& data,
                      const SpatialModel& model, std::size_t chain, const RunHooks& hooks,
                      const std::pair<ChainSnapshot, ChainOutput>* resume) {
  const SamplerConfig cfg = chain_config(spec, data, chain);
  const HyperParams base = default_initial_hyper(data, model);
  Rng init_rng = make_stream(cfg.seed, 1);
  std::vector<double> theta = target.theta_of(base);
  for (double& v : theta) v += spec.init_jitter * draw_normal(init_rng);
  if (!target.prepare(theta)) theta = target.theta_of(base);
  Matrix latents = init_latents(data, model, target.natural(theta), init_rng);
  return run_chain(cfg, target, std::move(theta), std::move(latents), hooks, resume);
}

FitResult fit(const FitSpec& spec, const ExceedanceData& data, const SpatialModel& model, const RunHooks& hooks) {
  if (spec.chains == 0) throw ValidationError("fit: need at least one chain");
  if (!(spec.variant == model.variant)) throw ValidationError("fit: model was built for a different variant");
  spec.sampler.validate();

  const SpatialPosteriorTarget target(data, model, spec.priors, spec.exec);
  FitResult res;
  res.variant = spec.variant;
  res.names = target.hyper_names();
  res.predict_sites = prediction_sites(data);
  for (std::size_t c = 0; c < spec.chains; ++c) res.chains.push_back(fit_chain(spec, target, data, model, c, hooks));
  return res;
}

Matrix pooled_predictive(const FitResult& fit, std::size_t stored_index, std::uint64_t seed) {
  std::vector<Matrix> parts;
  Eigen::Index rows = 0;
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    Rng rng = make_stream(seed, 100 + c);
    parts.push_back(predictive_draws(fit.chains[c], stored_index, rng));
    rows += parts.back().rows();
  }
  Matrix out(rows, parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

std::vector<ScoreReport> compare(const std::vector<std::string>& labels,
                                 const std::vector<std::vector<Matrix>>& draws, const Holdout& holdout,
                                 double sigma) {
  if (labels.size() != draws.size()) throw ValidationError("compare: label and draw counts differ");
  const auto k_sites = static_cast<std::size_t>(holdout.y.cols());
  if (holdout.thresholds.size() != k_sites) throw ValidationError("compare: one threshold per held-out site");
  std::vector<ScoreReport> out;
  for (std::size_t v = 0; v < draws.size(); ++v) {
    if (draws[v].size() != k_sites) throw ValidationError("compare: draws do not cover the held-out sites");
    ScoreReport r;
    r.label = labels[v];
    std::vector<double> col;
    for (std::size_t k = 0; k < k_sites; ++k) {
      const Matrix& m = draws[v][k];
      if (m.cols() != holdout.y.rows()) throw ValidationError("compare: replicate count mismatch");
      for (Eigen::Index i = 0; i < holdout.y.rows(); ++i) {
        const double obs = holdout.y(i, static_cast<Eigen::Index>(k));
        if (!std::isfinite(obs)) continue;
        col.assign(m.rows(), 0.0);
        for (Eigen::Index s = 0; s < m.rows(); ++s) col[static_cast<std::size_t>(s)] = m(s, i);
        r.crps += crps_sample(col, obs);
        r.twcrps += twcrps_sample(col, obs, holdout.thresholds[k], sigma);
        ++r.cells;
      }
    }
    if (r.cells > 0) {
      r.crps /= static_cast<double>(r.cells);
      r.twcrps /= static_cast<double>(r.cells);
    }
    out.push_back(r);
  }
  if (!out.empty()) {
    auto best_crps = std::min_element(out.begin(), out.end(), [](auto& a, auto& b) { return a.crps < b.crps; });
    auto best_tw = std::min_element(out.begin(), out.end(), [](auto& a, auto& b) { return a.twcrps < b.twcrps; });
    best_crps->best_crps = true;
    best_tw->best_twcrps = true;
  }
  return out;
}

}  // namespace ratemix
