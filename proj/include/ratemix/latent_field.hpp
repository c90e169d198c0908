#ifndef RATEMIX_LATENT_FIELD_HPP
#define RATEMIX_LATENT_FIELD_HPP

#include "ratemix/common.hpp"

#include <span>
#include <vector>

namespace ratemix {

struct Point {
  double x;
  double y;
};

/// Planar site coordinates and their Euclidean distance matrix.
class SpatialDesign {
 public:
  SpatialDesign() = default;
  /// Throws std::invalid_argument on coincident sites.
  explicit SpatialDesign(std::vector<Point> coords);

  std::size_t size() const { return coords_.size(); }
  const std::vector<Point>& coords() const { return coords_; }
  const Matrix& dist() const { return dist_; }

  /// Design restricted to the given sites, in the given order.
  SpatialDesign subset(std::span<const std::size_t> sites) const;

 private:
  std::vector<Point> coords_;
  Matrix dist_;
};

/// Exponential correlation exp(-h / rho) with its Cholesky factor. Immutable
/// after construction and safe to share between threads.
class CorrelationModel {
 public:
  double rho() const { return rho_; }
  std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// Lower-triangular L with L L^T = Sigma (jitter included if it was needed).
  const Eigen::MatrixXd& chol() const { return chol_; }
  double log_det() const { return log_det_; }
  bool jittered() const { return jittered_; }

  /// Sigma^{-1} rhs through two triangular solves.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  friend CorrelationModel build_correlation(const SpatialDesign& design, double rho);

 private:
  double rho_ = 0.0;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
  bool jittered_ = false;
};

/// Jitter added to the diagonal on a failed factorization before one retry.
inline constexpr double kCholeskyJitter = 1e-10;

/// Throws FactorizationError when Sigma is numerically singular even after jitter.
CorrelationModel build_correlation(const SpatialDesign& design, double rho);

/// Gamma(alpha_j, beta2_j) margins of the latent rates, one entry per site.
struct LatentMarginal {
  Vector alpha;
  Vector beta2;

  static LatentMarginal shared_shape(Vector alpha, double beta2);
};

/// The argument of Phi^{-1} is clipped to [kZClip, 1 - kZClip].
inline constexpr double kZClip = 1e-15;

/// z = Phi^{-1}{Gamma(lambda; alpha, beta2)} evaluated from the nearer tail.
struct LatentZ {
  double z;
  bool clamped;
};
LatentZ latent_zscore(double lambda, double alpha, double beta2);

/// Log density of one replicate of the latent vector under the Gaussian copula
/// with gamma margins.
double copula_loglik_row(std::span<const double> lambda_row, const LatentMarginal& marg,
                         const CorrelationModel& corr);

std::vector<double> copula_sample_row(const LatentMarginal& marg, const CorrelationModel& corr,
                                      Rng& rng);
/// Student-t copula with `nu` degrees of freedom; nu = inf gives the Gaussian copula.
std::vector<double> copula_sample_row_t(const LatentMarginal& marg, const CorrelationModel& corr,
                                        double nu, Rng& rng);

/// Log-linear site scale: coefs[0] * exp(sum_k coefs[k] x_k(s)). `covariates` is d x p.
Vector site_alpha(std::span<const double> coefs, const Matrix& covariates);

}  // namespace ratemix

#endif
