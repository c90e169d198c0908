// Generalized inverse Gaussian density and sampling.
//
// Sampling follows Hoermann & Leydold (2014), "Generating generalized inverse
// Gaussian random variates": the two-parameter form x^(l-1) exp{-w (x + 1/x) / 2}
// is drawn by one of three rejection schemes depending on (l, w), then scaled
// by sqrt(b / a). Negative l is handled through the reciprocal.

#include "ratemix/distributions.hpp"

#include "ratemix/special.hpp"

#include <cmath>
#include <numbers>

namespace ratemix {

namespace {

double log_bessel_k(double order, double x) {
  if (x < 600.0) return std::log(special::bessel_k(order, x));
  const double mu = 4.0 * order * order;
  return 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x +
         std::log1p((mu - 1.0) / (8.0 * x) + (mu - 1.0) * (mu - 9.0) / (128.0 * x * x));
}

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0)
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms without mode shift.
double rou_noshift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * draw_uniform(rng);
    const double v = draw_uniform(rng);
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms with mode shift; the bounding rectangle comes from the
// roots of a depressed cubic.
double rou_shift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;

  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);
  for (;;) {
    const double u = uminus + draw_uniform(rng) * (uplus - uminus);
    const double v = draw_uniform(rng);
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a three-piece dominating density; for 0 <= l < 1 and small w.
double rejection_small(double lambda, double omega, Rng& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  double k1, k2;
  area[0] = k0 * x0;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                            : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];

  for (;;) {
    double v = total * draw_uniform(rng);
    double x, hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double lo = x0 > 2.0 / omega ? x0 : 2.0 / omega;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = draw_uniform(rng) * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

bool in_gig_domain(const GigParams& p) {
  if (!(std::isfinite(p.a) && std::isfinite(p.b) && std::isfinite(p.beta))) return false;
  if (p.a < 0.0 || p.b < 0.0) return false;
  if (p.a > 0.0 && p.b > 0.0) return true;
  if (p.b == 0.0 && p.a > 0.0) return p.beta > 0.0;
  // a = 0 needs b > 0 for a proper (inverse gamma) law
  return p.a == 0.0 && p.b > 0.0 && p.beta < 0.0;
}

double gig_logpdf(double y, const GigParams& p) {
  if (!in_gig_domain(p)) throw std::domain_error("gig_logpdf: parameters outside the GIG domain");
  if (!(y > 0.0)) throw std::domain_error("gig_logpdf: y must be positive");
  if (p.b == 0.0) return gamma_logpdf(y, {p.a / 2.0, p.beta});
  if (p.a == 0.0) {
    const double shape = -p.beta;
    const double scale = p.b / 2.0;
    return shape * std::log(scale) - special::lgamma(shape) + (p.beta - 1.0) * std::log(y) -
           scale / y;
  }
  const double omega = std::sqrt(p.a * p.b);
  return 0.5 * p.beta * std::log(p.a / p.b) - std::log(2.0) - log_bessel_k(p.beta, omega) +
         (p.beta - 1.0) * std::log(y) - 0.5 * (p.a * y + p.b / y);
}

double gig_sample(const GigParams& p, Rng& rng) {
  if (!in_gig_domain(p)) throw std::domain_error("gig_sample: parameters outside the GIG domain");
  if (p.b == 0.0) return gamma_sample({p.a / 2.0, p.beta}, rng);
  if (p.a == 0.0) return 1.0 / gamma_sample({p.b / 2.0, -p.beta}, rng);

  const double omega = std::sqrt(p.a * p.b);
  const double scale = std::sqrt(p.b / p.a);
  const double lambda = std::abs(p.beta);
  double x;
  if (lambda > 2.0 || omega > 3.0) {
    x = rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = rou_noshift(lambda, omega, rng);
  } else {
    x = rejection_small(lambda, omega, rng);
  }
  return p.beta < 0.0 ? scale / x : scale * x;
}

}  // namespace ratemix
