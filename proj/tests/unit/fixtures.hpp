#ifndef RATEMIX_TESTS_FIXTURES_HPP
#define RATEMIX_TESTS_FIXTURES_HPP

#include "ratemix/distributions.hpp"
#include "ratemix/likelihood.hpp"
#include "ratemix/spatial_model.hpp"

#include <cmath>

namespace fixture {

using namespace ratemix;

/// Small random problem with exceeding, censored and missing cells.
struct Problem {
  SpatialModel model;
  ExceedanceData data;
  HyperParams h;
  Matrix log_lambda;
};

inline Problem make_problem(std::uint64_t seed, std::size_t d, std::size_t n, VariantId id = VariantId::D1) {
  Rng rng = make_stream(seed, 0);
  std::vector<Point> pts;
  for (std::size_t s = 0; s < d; ++s) pts.push_back({draw_uniform(rng), draw_uniform(rng)});
  Matrix cov(static_cast<Eigen::Index>(d), 2);
  for (Eigen::Index s = 0; s < cov.rows(); ++s) cov.row(s) << pts[s].x, draw_normal(rng);
  Problem p;
  p.model = build_model(ModelVariant::from_id(id), SpatialDesign(pts), cov, {"c1", "c2"}, false);

  p.h.alpha_coefs = {0.5 + 2.0 * draw_uniform(rng), 0.5 * draw_normal(rng), 0.5 * draw_normal(rng)};
  p.h.beta1 = 0.5 + 4.0 * draw_uniform(rng);
  p.h.beta2 = 1.5 + 5.0 * draw_uniform(rng);
  if (p.model.variant.covariates_in_beta2) p.h.beta2_slopes = {0.3 * draw_normal(rng), 0.3 * draw_normal(rng)};
  p.h.rho = 0.2 + draw_uniform(rng);
  if (p.model.variant.beta1_fixed_at_one) p.h.beta1 = 1.0;

  Matrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Matrix u(y.rows(), y.cols());
  p.log_lambda.resize(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      p.log_lambda(i, j) = std::log(p.h.beta2) - std::log(p.h.alpha_coefs[0]) + 0.7 * draw_normal(rng);
      y(i, j) = gamma_sample({std::exp(p.log_lambda(i, j)), p.h.beta1}, rng);
      const double r = draw_uniform(rng);
      if (r < 0.2) u(i, j) = kInf;
      else if (r < 0.35) u(i, j) = 0.0;
      else u(i, j) = y(i, j) * (0.3 + 1.4 * draw_uniform(rng));
    }
  }
  p.data = ExceedanceData::from_values(y, u);
  return p;
}

}  // namespace fixture

#endif
