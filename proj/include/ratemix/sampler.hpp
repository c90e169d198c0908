#ifndef RATEMIX_SAMPLER_HPP
#define RATEMIX_SAMPLER_HPP

#include "ratemix/common.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ratemix {

struct Band {
  double lo;
  double hi;
  bool contains(double p) const { return p >= lo && p <= hi; }
};

struct SamplerConfig {
  std::size_t n_iter = 200000;
  std::size_t burnin1 = 35000;
  std::size_t burnin2 = 65000;
  std::size_t adapt_interval = 500;
  double omega = 0.4;
  double p_tar_mala = 0.57;
  double p_tar_rw = 0.23;
  Band mala_band{0.50, 0.65};
  Band rw_band{0.15, 0.30};
  std::uint64_t seed = 1;
  std::size_t thin = 50;
  double tau_theta0 = 1e-3;
  double tau_lambda0 = 1e-2;
  std::size_t audit_interval = 10000;
  double audit_tol = 1e-8;
  std::size_t checkpoint_interval = 50000;
  bool update_hyper = true;
  bool update_latent = true;
  /// (row, column) latent cells whose log values are traced at every thinned iteration.
  std::vector<std::pair<std::size_t, std::size_t>> traced_cells;
  /// Latent columns saved at every thinned iteration of the sampling phase.
  std::vector<std::size_t> stored_columns;

  std::size_t burnin() const { return burnin1 + burnin2; }
  /// Throws ValidationError on inconsistent settings.
  void validate() const;
};

enum class Phase { adapt1, adapt2, sampling };
std::string phase_name(Phase p);

struct TuningState {
  double tau_theta = 1e-3;
  double tau_lambda = 1e-2;
  std::size_t window_rw_accepts = 0;
  std::size_t window_mala_accepts = 0;
  std::size_t window_iters = 0;
  Phase phase = Phase::adapt1;
};

/// Hyperparameter-dependent state built once per hyperparameter value.
class HyperCache {
 public:
  virtual ~HyperCache() = default;
};

/// Posterior over (theta, latents): theta is the unconstrained hyperparameter vector,
/// latents an n x d matrix on the log scale.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::size_t hyper_dim() const = 0;
  virtual std::vector<std::string> hyper_names() const = 0;
  /// Reported trace values for theta (usually the natural scale).
  virtual std::vector<double> report(std::span<const double> theta) const = 0;
  /// Null when theta is outside the support.
  virtual std::unique_ptr<HyperCache> prepare(std::span<const double> theta) const = 0;
  /// Full log posterior; fills `grad` (d/d latents) when non-null.
  virtual double evaluate(const HyperCache& cache, const Matrix& latents, Matrix* grad) const = 0;
};

std::vector<double> rw_propose(std::span<const double> theta, double tau_theta, Rng& rng);
/// Langevin proposal with mean latents + tau grad and covariance 2 tau I.
Matrix mala_propose(const Matrix& latents, const Matrix& grad, double tau_lambda, Rng& rng);
/// log q(to | from) for the Langevin proposal, normalizing constant included.
double mala_logq(const Matrix& to, const Matrix& from, const Matrix& grad_from, double tau_lambda);
/// Always consumes one uniform so rng consumption does not depend on the outcome.
bool mh_accept(double current_lp, double proposed_lp, double logq_fwd, double logq_rev, Rng& rng);
double adapt_step(double tau_cur, double p_acc, double p_tar, double omega);

/// Serializable chain position; cached posterior terms are rebuilt on resume.
struct ChainSnapshot {
  std::size_t next_iter = 0;
  std::vector<double> theta;
  Matrix latents;
  TuningState tuning;
  std::string rng_state;
  std::size_t sampling_rw_accepts = 0;
  std::size_t sampling_mala_accepts = 0;
  std::size_t sampling_iters = 0;
};

struct WindowRecord {
  std::size_t iter_end;
  Phase phase;
  double rw_rate;
  double mala_rate;
  double tau_theta;
  double tau_lambda;
};

struct ChainOutput {
  std::vector<std::string> names;
  std::size_t n_iter = 0;
  std::size_t burnin = 0;
  std::size_t thin = 1;
  /// Unthinned reported hyperparameters, row-major iterations x names.size().
  std::vector<double> hyper_trace;
  std::vector<std::size_t> thinned_iters;
  /// thinned_iters.size() x traced_cells.size(), log latents.
  std::vector<double> latent_trace;
  std::vector<std::pair<std::size_t, std::size_t>> traced_cells;
  std::vector<std::size_t> stored_columns;
  std::vector<std::size_t> stored_iters;
  /// One n x stored_columns.size() block of log latents per stored iteration.
  std::vector<Matrix> stored_latents;
  std::vector<WindowRecord> history;
  double sampling_rw_rate = 0.0;
  double sampling_mala_rate = 0.0;
  double audit_max_diff = 0.0;
  ChainSnapshot final_state;

  std::size_t iterations_done() const { return names.empty() ? 0 : hyper_trace.size() / names.size(); }
  double hyper(std::size_t iter, std::size_t k) const { return hyper_trace[iter * names.size() + k]; }
  /// Post-burn-in draws of parameter k.
  std::vector<double> post_burnin(std::size_t k) const;
};

struct Progress {
  std::size_t iter;
  std::size_t n_iter;
  Phase phase;
  double rw_rate;
  double mala_rate;
  double logpost;
};

struct RunHooks {
  std::function<void(const Progress&)> progress;
  /// Called every checkpoint_interval iterations; returning false stops the run there.
  std::function<bool(const ChainSnapshot&, const ChainOutput&)> checkpoint;
};

/// Runs (or resumes) one chain. Per iteration the hyperparameter random-walk block
/// runs before the latent MALA block. Deterministic given config and starting state.
/// `resume` continues from a snapshot and its partial output.
ChainOutput run_chain(const SamplerConfig& config, const Target& target, std::vector<double> theta0,
                      Matrix latents0, const RunHooks& hooks = {},
                      const std::pair<ChainSnapshot, ChainOutput>* resume = nullptr);

}  // namespace ratemix

#endif
