#include "ratemix/special.hpp"

#include "ratemix/common.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cmath>
#include <numbers>

namespace ratemix {

namespace {
using namespace boost::math::policies;
using Policy = policy<promote_double<false>, promote_float<false>>;
constexpr Policy kPolicy{};
}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

double draw_normal(Rng& rng) { return boost::random::normal_distribution<double>{}(rng); }

double draw_uniform(Rng& rng) {
  double u;
  do {
    u = boost::random::uniform_01<double>{}(rng);
  } while (u <= 0.0);
  return u;
}

namespace special {

double lgamma(double x) { return boost::math::lgamma(x, kPolicy); }
double digamma(double x) { return boost::math::digamma(x, kPolicy); }
double trigamma(double x) { return boost::math::trigamma(x, kPolicy); }
double polygamma(int n, double x) { return boost::math::polygamma(n, x, kPolicy); }

double gamma_p(double a, double x) { return boost::math::gamma_p(a, x, kPolicy); }
double gamma_q(double a, double x) { return boost::math::gamma_q(a, x, kPolicy); }
double gamma_p_inv(double a, double p) { return boost::math::gamma_p_inv(a, p, kPolicy); }
double gamma_q_inv(double a, double q) { return boost::math::gamma_q_inv(a, q, kPolicy); }
double gamma_p_derivative(double a, double x) {
  return boost::math::gamma_p_derivative(a, x, kPolicy);
}

double log_gamma_p(double a, double x) {
  if (x <= 0.0) return kLogZero;
  const double p = gamma_p(a, x);
  if (p > 1e-280) return std::log(p);
  // P(a,x) = x^a e^-x / Gamma(a+1) * sum_k x^k / ((a+1)...(a+k))
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 10000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return a * std::log(x) - x - lgamma(a + 1.0) + std::log(sum);
}

double ibeta(double a, double b, double x) { return boost::math::ibeta(a, b, x, kPolicy); }
double ibetac(double a, double b, double x) { return boost::math::ibetac(a, b, x, kPolicy); }
double ibeta_inv(double a, double b, double p) {
  return boost::math::ibeta_inv(a, b, p, kPolicy);
}
double ibetac_inv(double a, double b, double q) {
  return boost::math::ibetac_inv(a, b, q, kPolicy);
}

double norm_cdf(double z) { return 0.5 * boost::math::erfc(-z / std::numbers::sqrt2, kPolicy); }

double norm_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p, kPolicy);
}

double norm_quantile_upper(double q) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q, kPolicy);
}

double norm_logpdf(double z) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  return -kHalfLog2Pi - 0.5 * z * z;
}

double bessel_k(double order, double x) { return boost::math::cyl_bessel_k(order, x, kPolicy); }

}  // namespace special
}  // namespace ratemix
