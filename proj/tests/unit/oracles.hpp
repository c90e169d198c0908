#ifndef RATEMIX_TESTS_ORACLES_HPP
#define RATEMIX_TESTS_ORACLES_HPP

// Independent numerical references used by the unit and acceptance tests.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// Adaptive Gauss-Kronrod on [a, b]; either end may be infinite.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol, &err);
}

/// Tanh-sinh on a finite interval; copes with integrable endpoint singularities.
inline double integrate_singular(const std::function<double(double)>& f, double a, double b, double tol = 1e-10) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b, tol);
}

/// Integral over (0, inf) for integrands with an endpoint singularity at 0 or a slowly
/// decaying tail: tanh-sinh on (0, 1] plus exp-sinh on [1, inf).
inline double integrate_half_line(const std::function<double(double)>& f, double tol = 1e-12) {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  return ts.integrate(f, 0.0, 1.0, tol) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity(), tol);
}

/// Central difference with step h.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous cdf.
inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Mean and standard error.
struct MeanSe {
  double mean;
  double se;
};
inline MeanSe mean_se(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

}  // namespace oracle

#endif
