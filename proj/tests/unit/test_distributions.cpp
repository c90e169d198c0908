#include "doctest.h"
#include "oracles.hpp"

#include "ratemix/distributions.hpp"
#include "ratemix/special.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

using namespace ratemix;

namespace {

// Y | Lambda ~ Gamma(Lambda, beta1), Lambda ~ Gamma(alpha, beta2), integrated over Lambda.
double mixture_pdf(double y, const GammaGammaParams& p) {
  auto integrand = [&](double lam) {
    if (lam <= 0.0) return 0.0;
    return std::exp(gamma_logpdf(y, {lam, p.beta1}) + gamma_logpdf(lam, {p.alpha, p.beta2}));
  };
  return oracle::integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
}

}  // namespace

TEST_CASE("gamma-gamma density equals the integrated gamma mixture") {
  for (const GammaGammaParams p : {GammaGammaParams{1.0, 5.0, 5.0}, GammaGammaParams{2.5, 0.7, 3.0},
                                   GammaGammaParams{0.3, 2.0, 1.5}}) {
    for (double y : {0.05, 0.4, 1.0, 3.0, 12.0}) {
      CAPTURE(y);
      CHECK(gamma_gamma_pdf(y, p) == doctest::Approx(mixture_pdf(y, p)).epsilon(1e-9));
    }
  }
}

TEST_CASE("gamma-gamma cdf matches the scaled F law") {
  const GammaGammaParams p{1.7, 2.3, 4.1};
  const boost::math::fisher_f_distribution<double> f(2.0 * p.beta1, 2.0 * p.beta2);
  const double scale = p.alpha * p.beta1 / p.beta2;
  for (double y : {0.01, 0.3, 1.0, 2.0, 7.5, 40.0}) {
    CHECK(gamma_gamma_cdf(y, p) == doctest::Approx(boost::math::cdf(f, y / scale)).epsilon(1e-12));
    CHECK(gamma_gamma_sf(y, p) == doctest::Approx(boost::math::cdf(boost::math::complement(f, y / scale))).epsilon(1e-12));
  }
}

TEST_CASE("gamma-gamma cdf integrates the density") {
  const GammaGammaParams p{1.0, 5.0, 5.0};
  for (double y : {0.2, 1.0, 4.0}) {
    const double area = oracle::integrate([&](double t) { return gamma_gamma_pdf(t, p); }, 0.0, y);
    CHECK(gamma_gamma_cdf(y, p) == doctest::Approx(area).epsilon(1e-10));
  }
}

TEST_CASE("gamma-gamma quantile inverts the cdf in both tails") {
  const GammaGammaParams p{1.3, 0.8, 2.2};
  for (double q : {1e-10, 1e-4, 0.1, 0.5, 0.9, 0.999, 1 - 1e-9}) {
    const double y = gamma_gamma_quantile(q, p);
    if (q > 0.5) CHECK(gamma_gamma_sf(y, p) == doctest::Approx(1.0 - q).epsilon(1e-8));
    else CHECK(gamma_gamma_cdf(y, p) == doctest::Approx(q).epsilon(1e-8));
  }
}

TEST_CASE("gamma-gamma with beta1 = 1 is generalized Pareto") {
  for (const GammaGammaParams p : {GammaGammaParams{1.0, 1.0, 5.0}, GammaGammaParams{3.0, 1.0, 0.8}}) {
    const GpParams gp{p.alpha / p.beta2, 1.0 / p.beta2};
    for (double y : {0.0, 0.1, 1.0, 5.0, 100.0})
      CHECK(std::abs(gamma_gamma_cdf(y, p) - gp_cdf(y, gp)) < 1e-13);
  }
}

TEST_CASE("gamma-gamma moments equal numerical integrals") {
  const GammaGammaParams p{1.5, 2.0, 4.0};
  for (double r : {0.5, 1.0, 2.0, 3.5}) {
    const double m = oracle::integrate_half_line([&](double y) { return std::exp(r * std::log(y) + gamma_gamma_logpdf(y, p)); });
    CHECK(gamma_gamma_moment(r, p) == doctest::Approx(m).epsilon(1e-7));
  }
  CHECK_THROWS(gamma_gamma_moment(4.0, p));
}

TEST_CASE("gamma-gamma sampler passes a KS test") {
  const GammaGammaParams p{1.0, 5.0, 5.0};
  Rng rng = make_stream(42, 0);
  std::vector<double> x(20000);
  for (double& v : x) v = gamma_gamma_sample(p, rng);
  const double d = oracle::ks_statistic(x, [&](double y) { return gamma_gamma_cdf(y, p); });
  CHECK(d < 1.63 / std::sqrt(20000.0));  // 1% level
}

TEST_CASE("gamma sampler, cdf and quantile agree") {
  const GammaParams p{2.0, 0.6};
  Rng rng = make_stream(3, 0);
  std::vector<double> x(20000);
  for (double& v : x) v = gamma_sample(p, rng);
  CHECK(oracle::ks_statistic(x, [&](double y) { return gamma_cdf(y, p); }) < 1.63 / std::sqrt(20000.0));
  for (double q : {0.01, 0.5, 0.99}) CHECK(gamma_cdf(gamma_quantile(q, p), p) == doctest::Approx(q).epsilon(1e-10));
  CHECK(gamma_logpdf(1.3, p) ==
        doctest::Approx(std::log(boost::math::gamma_p_derivative(0.6, 2.0 * 1.3) * 2.0)).epsilon(1e-12));
}

TEST_CASE("GP helpers") {
  const GpParams p{2.0, 0.25};
  for (double q : {0.1, 0.5, 0.99}) CHECK(gp_cdf(gp_quantile(q, p), p) == doctest::Approx(q).epsilon(1e-12));
  const double area = oracle::integrate([&](double t) { return std::exp(gp_logpdf(t, p)); }, 0.0, 3.0);
  CHECK(gp_cdf(3.0, p) == doctest::Approx(area).epsilon(1e-10));
  const GpParams e{2.0, 0.0};
  CHECK(gp_cdf(1.0, e) == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-14));
  const GpParams neg{1.0, -0.5};
  CHECK_THROWS(gp_cdf(2.5, neg));
  CHECK(gp_cdf(2.0, neg) == doctest::Approx(1.0));
}

TEST_CASE("GIG density is normalized and reduces to the gamma law at b = 0") {
  for (const GigParams p : {GigParams{2.0, 1.0, 0.5}, GigParams{0.5, 3.0, -1.2}, GigParams{4.0, 0.01, 2.5}}) {
    const double total = oracle::integrate([&](double y) { return y > 0 ? std::exp(gig_logpdf(y, p)) : 0.0; }, 0.0,
                                           std::numeric_limits<double>::infinity(), 1e-12);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
  const GigParams g = gamma_gig_latent(1.5, 0.0, 3.0);
  for (double y : {0.2, 1.0, 4.0}) CHECK(gig_logpdf(y, g) == doctest::Approx(gamma_logpdf(y, {1.5, 3.0})).epsilon(1e-13));
}

TEST_CASE("GIG sampler matches the Bessel-ratio mean") {
  for (const GigParams p : {GigParams{2.0, 1.0, 0.5}, GigParams{0.5, 3.0, -1.2}, GigParams{1.0, 1.0, 4.0},
                            GigParams{0.02, 0.02, 0.1}}) {
    const double w = std::sqrt(p.a * p.b);
    const double mean = std::sqrt(p.b / p.a) * boost::math::cyl_bessel_k(p.beta + 1.0, w) /
                        boost::math::cyl_bessel_k(p.beta, w);
    Rng rng = make_stream(9, 0);
    std::vector<double> x(40000);
    for (double& v : x) v = gig_sample(p, rng);
    const auto ms = oracle::mean_se(x);
    CAPTURE(p.beta);
    CHECK(std::abs(ms.mean - mean) < 4.0 * ms.se);
    const double d = oracle::ks_statistic(x, [&](double y) {
      return oracle::integrate([&](double t) { return t > 0 ? std::exp(gig_logpdf(t, p)) : 0.0; }, 0.0, y, 1e-10);
    });
    CHECK(d < 1.95 / std::sqrt(40000.0));
  }
}

TEST_CASE("product of Weibull-type tails") {
  // X, Z exact Weibull survivals exp(-r x^a); P(XZ > y) by quadrature.
  const WeibullTail x{1.0, 2.0}, z{0.5, 1.0};
  const WeibullTail c = weibull_tail_combine(x, z);
  CHECK(c.index == doctest::Approx(2.0 / 3.0));
  // integrate over t = log v around the saddle point, scaled by the peak of the log integrand
  auto log_sf = [&](double y) {
    auto g = [&](double t) {
      const double v = std::exp(t);
      return std::log(z.rate * z.index) + z.index * t - z.rate * std::pow(v, z.index) - x.rate * std::pow(y / v, x.index);
    };
    double t_max = 0.0, g_max = -std::numeric_limits<double>::infinity();
    for (double t = -5.0; t < 20.0; t += 1e-3)
      if (g(t) > g_max) {
        g_max = g(t);
        t_max = t;
      }
    const double mass = oracle::integrate([&](double t) { return std::exp(g(t) - g_max); }, t_max - 3.0, t_max + 3.0, 1e-12);
    return g_max + std::log(mass);
  };
  // -log P / y^index tends to the rate; the polynomial prefactor decays like log(y) / y^index.
  const double y = 1e4;
  CHECK(-log_sf(y) / std::pow(y, c.index) == doctest::Approx(c.rate).epsilon(0.03));
}
