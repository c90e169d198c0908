#include "doctest.h"
#include "oracles.hpp"

#include "ratemix/common.hpp"
#include "ratemix/priors.hpp"
#include "ratemix/special.hpp"

#include <boost/math/distributions/gamma.hpp>

#include <cmath>

using namespace ratemix;

namespace {

// KLD of Gamma(shape b, rate 1) from Exp(1) as an explicit integral of f log(f/g).
double kld_by_quadrature(double b) {
  auto f = [&](double y) {
    if (y <= 0) return 0.0;
    const double lf = (b - 1.0) * std::log(y) - y - std::lgamma(b);
    const double lg = -y;
    return std::exp(lf) * (lf - lg);
  };
  return oracle::integrate_half_line(f);
}

}  // namespace

TEST_CASE("KLD of gamma from exponential matches direct integration") {
  for (double b : {0.5, 0.9, 1.3, 4.0, 20.0}) {
    CAPTURE(b);
    CHECK(kld_gamma_vs_exp(b) == doctest::Approx(kld_by_quadrature(b)).epsilon(1e-8));
  }
  CHECK(kld_gamma_vs_exp(1.0) == 0.0);
}

TEST_CASE("KLD derivative matches finite differences") {
  for (double b : {0.3, 0.99, 1.5, 7.0}) {
    const double fd = oracle::central_diff(kld_gamma_vs_exp, b, 1e-5);
    CHECK(kld_gamma_vs_exp_derivative(b) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("beta1 PC prior integrates to one and is continuous through beta1 = 1") {
  for (double kappa : {1.0, 2.0, 3.0}) {
    auto f = [&](double b) { return b > 0 ? std::exp(pc_logprior_beta1(b, kappa)) : 0.0; };
    const double total = oracle::integrate(f, 0.0, 1.0, 1e-12) +
                         oracle::integrate(f, 1.0, std::numeric_limits<double>::infinity(), 1e-12);
    CAPTURE(kappa);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    const double at1 = pc_logprior_beta1(1.0, kappa);
    for (double h : {1e-3, 1e-4, 1e-5, 1e-7}) {
      CHECK(pc_logprior_beta1(1.0 + h, kappa) == doctest::Approx(at1).epsilon(5 * h + 1e-12));
      CHECK(pc_logprior_beta1(1.0 - h, kappa) == doctest::Approx(at1).epsilon(5 * h + 1e-12));
    }
  }
}

TEST_CASE("tail-index PC prior integrates to one on (0, 1) in both parametrizations") {
  for (double kappa : {1.0, 2.0, 3.0}) {
    const double xi_total = oracle::integrate_singular([&](double x) { return std::exp(pc_logprior_xi(x, kappa)); }, 0.0, 1.0);
    CHECK(xi_total == doctest::Approx(1.0).epsilon(1e-8));
    const double b_total = oracle::integrate([&](double b) { return b > 1 ? std::exp(pc_logprior_beta2(b, kappa)) : 0.0; },
                                             1.0, std::numeric_limits<double>::infinity(), 1e-12);
    CHECK(b_total == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(pc_logprior_xi(0.0, 1.0) == kLogZero);
  CHECK(pc_logprior_xi(1.0, 1.0) == kLogZero);
  CHECK(pc_logprior_beta2(0.9, 1.0) == kLogZero);
  for (double b : {1.2, 2.0, 5.0, 30.0})
    CHECK(pc_logprior_beta2(b, 2.0) == doctest::Approx(pc_logprior_xi(1.0 / b, 2.0) - 2.0 * std::log(b)).epsilon(1e-12));
}

TEST_CASE("tail-index PC prior is the exponential law of the distance") {
  // d(xi) = sqrt(2 KLD) = xi / sqrt(1 - xi) for the GP family; the prior is lambda e^{-lambda d} |d'|.
  const double kappa = 1.7, lambda = std::sqrt(2.0) * kappa;
  for (double xi : {0.05, 0.3, 0.8}) {
    const double d = xi / std::sqrt(1.0 - xi);
    const double dd = oracle::central_diff([](double x) { return x / std::sqrt(1.0 - x); }, xi, 1e-6);
    CHECK(pc_logprior_xi(xi, kappa) == doctest::Approx(std::log(lambda) - lambda * d + std::log(dd)).epsilon(1e-8));
  }
}

TEST_CASE("vague priors") {
  const boost::math::gamma_distribution<double> g(0.01, 100.0);
  for (double r : {0.1, 1.0, 50.0}) CHECK(vague_logprior_range(r) == doctest::Approx(std::log(boost::math::pdf(g, r))).epsilon(1e-12));
  CHECK(vague_logprior_coef(0.0) == doctest::Approx(-0.5 * std::log(2 * M_PI * 100.0)));
  CHECK(vague_logprior_coef(10.0) - vague_logprior_coef(0.0) == doctest::Approx(-0.5));
}
