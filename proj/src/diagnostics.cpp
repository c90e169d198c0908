#include "ratemix/diagnostics.hpp"

#include "ratemix/simulate.hpp"
#include "ratemix/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ratemix {

double ess(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 10) throw std::invalid_argument("ess: need at least 10 values");
  const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t t = 0; t < n; ++t) c[t] = trace[t] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += c[t] * c[t + lag];
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) throw std::domain_error("ess: trace has zero variance");

  double sum = 0.0;
  double prev = kInf;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (2 * m == 0 ? 1.0 : autocov(2 * m) / g0) + autocov(2 * m + 1) / g0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> halves;
  std::size_t len = 0;
  for (const auto& ch : chains) {
    if (ch.size() < 4) throw std::invalid_argument("split_rhat: need at least 4 draws per chain");
    const std::size_t h = ch.size() / 2;
    len = len == 0 ? h : std::min(len, h);
  }
  if (chains.empty()) throw std::invalid_argument("split_rhat: no chains");
  for (const auto& ch : chains) {
    const std::size_t h = ch.size() / 2;
    // drop the middle draw of odd-length chains, keep equal half lengths
    halves.emplace_back(ch.data() + (h - len), len);
    halves.emplace_back(ch.data() + ch.size() - len, len);
  }
  const double n = static_cast<double>(len);
  const double m = static_cast<double>(halves.size());
  std::vector<double> means, vars;
  for (auto hspan : halves) {
    const double mu = std::accumulate(hspan.begin(), hspan.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : hspan) ss += (v - mu) * (v - mu);
    means.push_back(mu);
    vars.push_back(ss / (n - 1.0));
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (!(w > 0.0)) return b > 0.0 ? kInf : 1.0;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

namespace {

// Energy form on values that are already mapped; pairs summed through the order statistics.
double energy_score(std::vector<double> x, double y) {
  const std::size_t m = x.size();
  if (m < 2) throw std::invalid_argument("crps: need at least 2 draws");
  double abs_obs = 0.0;
  for (double v : x) abs_obs += std::abs(v - y);
  std::sort(x.begin(), x.end());
  double pair = 0.0;
  for (std::size_t k = 0; k < m; ++k)
    pair += (2.0 * static_cast<double>(k) + 1.0 - static_cast<double>(m)) * x[k];
  const double md = static_cast<double>(m);
  // sum_{i,j} |x_i - x_j| = 2 sum_k (2k - m - 1) x_(k) with 1-based k
  return std::max(0.0, abs_obs / md - pair / (md * md));
}

}  // namespace

double crps_sample(std::span<const double> draws, double obs) {
  return energy_score(std::vector<double>(draws.begin(), draws.end()), obs);
}

double twcrps_sample(std::span<const double> draws, double obs, double threshold, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("twcrps_sample: sigma must be positive");
  if (threshold == -kInf) return crps_sample(draws, obs);
  if (threshold == kInf) {
    if (draws.size() < 2) throw std::invalid_argument("crps: need at least 2 draws");
    return 0.0;
  }
  auto chain = [&](double z) {
    const double x = (z - threshold) / sigma;
    return sigma * (x * special::norm_cdf(x) + std::exp(special::norm_logpdf(x)));
  };
  std::vector<double> v;
  v.reserve(draws.size());
  for (double z : draws) v.push_back(chain(z));
  return energy_score(std::move(v), chain(obs));
}

ParamSummary summarize(const std::string& name, const std::vector<std::vector<double>>& chains) {
  std::vector<double> pooled;
  for (const auto& ch : chains) pooled.insert(pooled.end(), ch.begin(), ch.end());
  if (pooled.empty()) throw ValidationError("summarize: no draws for " + name);
  ParamSummary s;
  s.name = name;
  s.draws = pooled.size();
  s.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(pooled.size());
  std::sort(pooled.begin(), pooled.end());
  s.lower = empirical_quantile_sorted(pooled, 0.025);
  s.upper = empirical_quantile_sorted(pooled, 0.975);
  const bool constant = pooled.front() == pooled.back();
  if (constant) {
    s.ess = static_cast<double>(s.draws);
    s.rhat = 1.0;
  } else {
    s.ess = 0.0;
    for (const auto& ch : chains) {
      const bool ch_const = std::all_of(ch.begin(), ch.end(), [&](double v) { return v == ch.front(); });
      s.ess += ch_const ? 0.0 : ess(ch);
    }
    s.rhat = split_rhat(chains);
  }
  s.flagged = s.mean < s.lower || s.mean > s.upper;
  return s;
}

std::vector<ParamSummary> posterior_summaries(const std::vector<const ChainOutput*>& chains,
                                              std::size_t burnin_drop) {
  if (chains.empty()) throw ValidationError("posterior_summaries: no chains");
  const auto& names = chains.front()->names;
  for (const auto* c : chains) {
    if (c->names != names) throw ValidationError("posterior_summaries: chains disagree on parameters");
    if (c->iterations_done() < burnin_drop + 100)
      throw ValidationError("posterior_summaries: fewer than 100 post-burn-in draws");
  }
  auto draws_of = [&](std::size_t k) {
    std::vector<std::vector<double>> per_chain;
    for (const auto* c : chains) {
      std::vector<double> v;
      for (std::size_t it = burnin_drop; it < c->iterations_done(); ++it) v.push_back(c->hyper(it, k));
      per_chain.push_back(std::move(v));
    }
    return per_chain;
  };
  std::vector<ParamSummary> out;
  for (std::size_t k = 0; k < names.size(); ++k) out.push_back(summarize(names[k], draws_of(k)));
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] != "beta2" && names[k] != "beta2_0") continue;
    auto per_chain = draws_of(k);
    for (auto& v : per_chain)
      for (double& x : v) x = 1.0 / x;
    out.push_back(summarize("xi", per_chain));
  }
  return out;
}

Matrix predictive_draws(const ChainOutput& output, std::size_t stored_index, Rng& rng) {
  if (stored_index >= output.stored_columns.size())
    throw ValidationError("predictive_draws: site was not stored by the chain (not censored at +inf)");
  const auto it = std::find(output.names.begin(), output.names.end(), "beta1");
  const std::size_t b1k = static_cast<std::size_t>(it - output.names.begin());
  const std::size_t s = output.stored_latents.size();
  if (s == 0) throw ValidationError("predictive_draws: chain stored no post-burn-in latents");
  const Eigen::Index n = output.stored_latents.front().rows();
  Matrix out(static_cast<Eigen::Index>(s), n);
  for (std::size_t r = 0; r < s; ++r) {
    const double beta1 = it == output.names.end() ? 1.0 : output.hyper(output.stored_iters[r], b1k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lam = std::exp(output.stored_latents[r](i, static_cast<Eigen::Index>(stored_index)));
      out(static_cast<Eigen::Index>(r), i) = gamma_sample({lam, beta1}, rng);
    }
  }
  return out;
}

namespace {

double conditional_quantile(double p, const GammaGammaParams& fitted, double threshold) {
  if (threshold <= 0.0) return gamma_gamma_quantile(p, fitted);
  const double fu = gamma_gamma_cdf(threshold, fitted);
  return gamma_gamma_quantile(fu + p * (1.0 - fu), fitted);
}

}  // namespace

std::vector<QQPoint> qq_data(std::vector<double> obs, const GammaGammaParams& fitted, double threshold) {
  if (obs.size() < 10) throw std::invalid_argument("qq_data: need at least 10 observations");
  std::sort(obs.begin(), obs.end());
  const double m = static_cast<double>(obs.size());
  std::vector<QQPoint> out;
  out.reserve(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const double p = static_cast<double>(k + 1) / (m + 1.0);
    out.push_back({p, obs[k], conditional_quantile(p, fitted, threshold)});
  }
  return out;
}

QQBand qq_bands(std::size_t m, const GammaGammaParams& fitted, double threshold, std::size_t B, Rng& rng) {
  if (m == 0 || B < 2) throw std::invalid_argument("qq_bands: need m >= 1 and B >= 2");
  const double fu = threshold > 0.0 ? gamma_gamma_cdf(threshold, fitted) : 0.0;
  std::vector<std::vector<double>> per_rank(m, std::vector<double>(B));
  std::vector<double> sample(m);
  for (std::size_t b = 0; b < B; ++b) {
    for (double& v : sample) v = gamma_gamma_quantile(fu + draw_uniform(rng) * (1.0 - fu), fitted);
    std::sort(sample.begin(), sample.end());
    for (std::size_t k = 0; k < m; ++k) per_rank[k][b] = sample[k];
  }
  QQBand band;
  for (auto& r : per_rank) {
    std::sort(r.begin(), r.end());
    band.lower.push_back(empirical_quantile_sorted(r, 0.025));
    band.upper.push_back(empirical_quantile_sorted(r, 0.975));
  }
  return band;
}

}  // namespace ratemix
