#include "ratemix/sampler.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ratemix {

void SamplerConfig::validate() const {
  if (n_iter == 0) throw ValidationError("sampler: n_iter must be positive");
  if (burnin1 + burnin2 >= n_iter) throw ValidationError("sampler: burnin1 + burnin2 must be below n_iter");
  if (adapt_interval == 0) throw ValidationError("sampler: adapt_interval must be positive");
  if (thin == 0) throw ValidationError("sampler: thin must be positive");
  if (!(omega > 0.0)) throw ValidationError("sampler: omega must be positive");
  if (!(tau_theta0 > 0.0) || !(tau_lambda0 > 0.0))
    throw ValidationError("sampler: initial step sizes must be positive");
  if (!(p_tar_mala > 0.0 && p_tar_mala < 1.0) || !(p_tar_rw > 0.0 && p_tar_rw < 1.0))
    throw ValidationError("sampler: target acceptance rates must lie in (0, 1)");
  if (!mala_band.contains(p_tar_mala) || !rw_band.contains(p_tar_rw))
    throw ValidationError("sampler: acceptance bands must contain their targets");
  if (audit_interval == 0 || checkpoint_interval == 0)
    throw ValidationError("sampler: audit and checkpoint intervals must be positive");
}

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::adapt1: return "adapt1";
    case Phase::adapt2: return "adapt2";
    case Phase::sampling: return "sampling";
  }
  return "?";
}

std::vector<double> rw_propose(std::span<const double> theta, double tau_theta, Rng& rng) {
  const double sd = std::sqrt(tau_theta);
  std::vector<double> out(theta.begin(), theta.end());
  for (double& v : out) v += sd * draw_normal(rng);
  return out;
}

Matrix mala_propose(const Matrix& latents, const Matrix& grad, double tau_lambda, Rng& rng) {
  const double sd = std::sqrt(2.0 * tau_lambda);
  Matrix out(latents.rows(), latents.cols());
  for (Eigen::Index i = 0; i < latents.rows(); ++i)
    for (Eigen::Index j = 0; j < latents.cols(); ++j)
      out(i, j) = latents(i, j) + tau_lambda * grad(i, j) + sd * draw_normal(rng);
  return out;
}

double mala_logq(const Matrix& to, const Matrix& from, const Matrix& grad_from, double tau_lambda) {
  const double var = 2.0 * tau_lambda;
  const double sq = (to - from - tau_lambda * grad_from).squaredNorm();
  return -0.5 * static_cast<double>(to.size()) * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
}

bool mh_accept(double current_lp, double proposed_lp, double logq_fwd, double logq_rev, Rng& rng) {
  const double log_u = std::log(draw_uniform(rng));
  if (!std::isfinite(proposed_lp)) return false;
  const double log_r = proposed_lp - current_lp + logq_rev - logq_fwd;
  return log_u < log_r;
}

double adapt_step(double tau_cur, double p_acc, double p_tar, double omega) {
  return std::exp((p_acc - p_tar) / omega) * tau_cur;
}

std::vector<double> ChainOutput::post_burnin(std::size_t k) const {
  std::vector<double> out;
  const std::size_t done = iterations_done();
  for (std::size_t it = burnin; it < done; ++it) out.push_back(hyper(it, k));
  return out;
}

namespace {

Phase phase_at(const SamplerConfig& c, std::size_t iter) {
  if (iter < c.burnin1) return Phase::adapt1;
  if (iter < c.burnin()) return Phase::adapt2;
  return Phase::sampling;
}

struct Live {
  std::vector<double> theta;
  Matrix latents;
  std::unique_ptr<HyperCache> cache;
  double logpost = 0.0;
  Matrix grad;
};

Live rebuild(const Target& target, std::vector<double> theta, Matrix latents) {
  Live s;
  s.theta = std::move(theta);
  s.latents = std::move(latents);
  s.cache = target.prepare(s.theta);
  if (!s.cache) throw NumericError("sampler: initial hyperparameters are outside the support");
  s.logpost = target.evaluate(*s.cache, s.latents, &s.grad);
  if (!std::isfinite(s.logpost) || !s.grad.allFinite())
    throw NumericError("sampler: initial log posterior or gradient is not finite");
  return s;
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw ValidationError("checkpoint: corrupt rng state");
  return rng;
}

}  // namespace

ChainOutput run_chain(const SamplerConfig& config, const Target& target, std::vector<double> theta0,
                      Matrix latents0, const RunHooks& hooks,
                      const std::pair<ChainSnapshot, ChainOutput>* resume) {
  config.validate();
  const std::size_t p = target.hyper_dim();

  ChainOutput out;
  ChainSnapshot snap;
  Rng rng;
  if (resume) {
    snap = resume->first;
    out = resume->second;
    if (out.n_iter != config.n_iter || out.burnin != config.burnin() || out.thin != config.thin)
      throw ValidationError("resume: checkpoint was written with a different sampler configuration");
    rng = rng_from_string(snap.rng_state);
  } else {
    if (theta0.size() != p) throw ValidationError("sampler: initial theta has wrong dimension");
    snap.theta = std::move(theta0);
    snap.latents = std::move(latents0);
    snap.tuning.tau_theta = config.tau_theta0;
    snap.tuning.tau_lambda = config.tau_lambda0;
    rng = make_stream(config.seed, 0);
    out.names = target.hyper_names();
    out.n_iter = config.n_iter;
    out.burnin = config.burnin();
    out.thin = config.thin;
    out.traced_cells = config.traced_cells;
    out.stored_columns = config.stored_columns;
    out.hyper_trace.reserve(config.n_iter * p);
  }
  for (const auto& [r, c] : config.traced_cells)
    if (r >= static_cast<std::size_t>(snap.latents.rows()) || c >= static_cast<std::size_t>(snap.latents.cols()))
      throw ValidationError("sampler: traced cell out of range");
  for (auto c : config.stored_columns)
    if (c >= static_cast<std::size_t>(snap.latents.cols()))
      throw ValidationError("sampler: stored column out of range");

  Live s = rebuild(target, snap.theta, snap.latents);
  TuningState tune = snap.tuning;
  const Eigen::Index n = s.latents.rows();

  for (std::size_t iter = snap.next_iter; iter < config.n_iter; ++iter) {
    tune.phase = phase_at(config, iter);
    bool rw_ok = false, mala_ok = false;

    if (config.update_hyper) {
      std::vector<double> prop = rw_propose(s.theta, tune.tau_theta, rng);
      auto cache = target.prepare(prop);
      double lp = kLogZero;
      Matrix grad;
      if (cache) lp = target.evaluate(*cache, s.latents, &grad);
      if (cache && !grad.allFinite()) lp = kLogZero;
      rw_ok = mh_accept(s.logpost, lp, 0.0, 0.0, rng);
      if (rw_ok) {
        s.theta = std::move(prop);
        s.cache = std::move(cache);
        s.logpost = lp;
        s.grad = std::move(grad);
      }
    }

    if (config.update_latent) {
      Matrix prop = mala_propose(s.latents, s.grad, tune.tau_lambda, rng);
      Matrix grad;
      double lp = prop.allFinite() ? target.evaluate(*s.cache, prop, &grad) : kLogZero;
      double fwd = 0.0, rev = 0.0;
      if (std::isfinite(lp) && grad.allFinite()) {
        fwd = mala_logq(prop, s.latents, s.grad, tune.tau_lambda);
        rev = mala_logq(s.latents, prop, grad, tune.tau_lambda);
      } else {
        lp = kLogZero;
      }
      mala_ok = mh_accept(s.logpost, lp, fwd, rev, rng);
      if (mala_ok) {
        s.latents = std::move(prop);
        s.logpost = lp;
        s.grad = std::move(grad);
      }
    }

    tune.window_rw_accepts += rw_ok;
    tune.window_mala_accepts += mala_ok;
    ++tune.window_iters;
    if (tune.phase == Phase::sampling) {
      snap.sampling_rw_accepts += rw_ok;
      snap.sampling_mala_accepts += mala_ok;
      ++snap.sampling_iters;
    }

    const std::vector<double> rep = target.report(s.theta);
    out.hyper_trace.insert(out.hyper_trace.end(), rep.begin(), rep.end());

    if ((iter + 1) % config.thin == 0) {
      out.thinned_iters.push_back(iter);
      for (const auto& [r, c] : config.traced_cells)
        out.latent_trace.push_back(s.latents(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      if (tune.phase == Phase::sampling && !config.stored_columns.empty()) {
        Matrix block(n, static_cast<Eigen::Index>(config.stored_columns.size()));
        for (std::size_t k = 0; k < config.stored_columns.size(); ++k)
          block.col(static_cast<Eigen::Index>(k)) = s.latents.col(static_cast<Eigen::Index>(config.stored_columns[k]));
        out.stored_iters.push_back(iter);
        out.stored_latents.push_back(std::move(block));
      }
    }

    if (tune.window_iters == config.adapt_interval) {
      const double w = static_cast<double>(tune.window_iters);
      const double rw_rate = static_cast<double>(tune.window_rw_accepts) / w;
      const double mala_rate = static_cast<double>(tune.window_mala_accepts) / w;
      const bool adapt1 = tune.phase == Phase::adapt1;
      const bool adapt2 = tune.phase == Phase::adapt2;
      if (config.update_hyper && (adapt1 || (adapt2 && !config.rw_band.contains(rw_rate))))
        tune.tau_theta = adapt_step(tune.tau_theta, rw_rate, config.p_tar_rw, config.omega);
      if (config.update_latent && (adapt1 || (adapt2 && !config.mala_band.contains(mala_rate))))
        tune.tau_lambda = adapt_step(tune.tau_lambda, mala_rate, config.p_tar_mala, config.omega);
      out.history.push_back({iter + 1, tune.phase, rw_rate, mala_rate, tune.tau_theta, tune.tau_lambda});
      if (hooks.progress) hooks.progress({iter + 1, config.n_iter, tune.phase, rw_rate, mala_rate, s.logpost});
      tune.window_rw_accepts = tune.window_mala_accepts = tune.window_iters = 0;
    }

    if ((iter + 1) % config.audit_interval == 0) {
      auto fresh = target.prepare(s.theta);
      const double lp = fresh ? target.evaluate(*fresh, s.latents, nullptr) : kLogZero;
      const double diff = std::abs(lp - s.logpost);
      out.audit_max_diff = std::max(out.audit_max_diff, std::isfinite(diff) ? diff : kInf);
      if (!(diff < config.audit_tol))
        throw NumericError("sampler: cached log posterior drifted from recomputation at iteration " +
                           std::to_string(iter + 1));
    }

    if (hooks.checkpoint && (iter + 1) % config.checkpoint_interval == 0 && iter + 1 < config.n_iter) {
      snap.next_iter = iter + 1;
      snap.theta = s.theta;
      snap.latents = s.latents;
      snap.tuning = tune;
      snap.rng_state = rng_to_string(rng);
      if (!hooks.checkpoint(snap, out)) {
        out.final_state = snap;
        return out;
      }
    }
  }

  snap.next_iter = config.n_iter;
  snap.theta = s.theta;
  snap.latents = s.latents;
  snap.tuning = tune;
  snap.rng_state = rng_to_string(rng);
  if (snap.sampling_iters > 0) {
    out.sampling_rw_rate = static_cast<double>(snap.sampling_rw_accepts) / static_cast<double>(snap.sampling_iters);
    out.sampling_mala_rate =
        static_cast<double>(snap.sampling_mala_accepts) / static_cast<double>(snap.sampling_iters);
  }
  out.final_state = std::move(snap);
  return out;
}

}  // namespace ratemix
