#ifndef RATEMIX_COMMON_HPP
#define RATEMIX_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace ratemix {

/// Dense row-major matrix. Rows are time replicates, columns are sites.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Engine used by every sampler in the library. Distributions are always
/// constructed fresh from boost::random so draws are platform independent.
using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Bad input detected before numeric work (CLI exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric breakdown during evaluation (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization of a correlation matrix failed even after jitter.
class FactorizationError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Independent substream `stream` of a base seed.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

double draw_normal(Rng& rng);
double draw_uniform(Rng& rng);  // open interval (0, 1)

}  // namespace ratemix

#endif
