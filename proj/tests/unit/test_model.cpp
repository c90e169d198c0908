#include "doctest.h"
#include "fixtures.hpp"

#include "ratemix/model.hpp"
#include "ratemix/simulate.hpp"

#include <cmath>

using namespace ratemix;

TEST_CASE("variant parsing and hyperparameter names") {
  for (const char* name : {"D1", "D2", "D3", "D4"}) CHECK(ModelVariant::parse(name).name() == name);
  CHECK_THROWS_AS(ModelVariant::parse("D5"), ValidationError);

  const SpatialDesign design({{0, 0}, {1, 0}, {0, 1}});
  Matrix cov(3, 3);
  cov << 1, 2, 3, 4, 5, 6, 7, 8, 10;
  const std::vector<std::string> names{"lat", "long", "alt"};
  const auto d1 = build_model(ModelVariant::parse("D1"), design, cov, names);
  CHECK(d1.hyperparam_names() ==
        std::vector<std::string>{"alpha0", "alpha_lat", "alpha_long", "alpha_alt", "beta1", "beta2", "rho"});
  const auto d4 = build_model(ModelVariant::parse("D4"), design, cov, names);
  CHECK(d4.hyperparam_names() == std::vector<std::string>{"alpha0", "alpha_lat", "alpha_long", "alpha_alt", "beta2_0",
                                                          "beta2_lat", "beta2_long", "beta2_alt", "rho"});
  CHECK(d4.n_hyperparams() == 9);
}

TEST_CASE("standardization constants come from the training sites") {
  const SpatialDesign design({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  Matrix cov(4, 1);
  cov << 1.0, 3.0, 5.0, 100.0;
  const std::vector<std::size_t> train{0, 1, 2};
  const auto m = build_model(ModelVariant::parse("D1"), design, cov, {"c"}, true, train);
  CHECK(m.alpha_standardization.mean(0) == doctest::Approx(3.0));
  CHECK(m.alpha_standardization.sd(0) == doctest::Approx(2.0));
  CHECK(m.alpha_covariates(1, 0) == doctest::Approx(0.0));
  CHECK(m.alpha_covariates(3, 0) == doctest::Approx(48.5));
  const auto raw = build_model(ModelVariant::parse("D1"), design, cov, {"c"}, false);
  CHECK(raw.alpha_covariates == cov);
}

TEST_CASE("site thresholds") {
  Matrix y(4, 3);
  y << 1, 10, 5, 2, 20, 5, 3, std::nan(""), 5, 4, 40, 5;
  const std::vector<std::size_t> held{2};
  const Matrix u = site_thresholds(y, 0.5, held);
  CHECK(u(0, 0) == doctest::Approx(2.5));
  CHECK(u(0, 1) == doctest::Approx(20.0));
  CHECK(std::isinf(u(2, 1)));  // missing value
  CHECK(std::isinf(u(0, 2)));
  CHECK_THROWS_AS(site_thresholds(y, 1.0, held), ValidationError);
}

TEST_CASE("initial values and latents are inside the support") {
  const auto p = fixture::make_problem(12, 8, 6);
  const auto h = default_initial_hyper(p.data, p.model);
  CHECK(h.alpha_coefs[0] > 0.0);
  CHECK(h.beta2 > 1.0);
  CHECK(h.rho > 0.0);
  Rng rng = make_stream(1, 0);
  const Matrix l = init_latents(p.data, p.model, h, rng);
  CHECK(l.allFinite());
  const SpatialPosteriorTarget target(p.data, p.model, PriorConfig{});
  CHECK(target.prepare(target.theta_of(h)) != nullptr);
  const auto back = target.natural(target.theta_of(h));
  CHECK(back.alpha_coefs[0] == doctest::Approx(h.alpha_coefs[0]));
}

TEST_CASE("short fit produces consistent chains") {
  ScenarioSpec spec;
  spec.d = 8;
  spec.n = 10;
  spec.n_predict_sites = 2;
  const auto ds = simulate_dataset(spec);
  FitSpec fs;
  fs.sampler.n_iter = 1500;
  fs.sampler.burnin1 = 500;
  fs.sampler.burnin2 = 500;
  fs.sampler.thin = 10;
  fs.sampler.audit_interval = 500;
  const auto res = fit(fs, ds.data, ds.model);
  REQUIRE(res.chains.size() == 2);
  CHECK(res.predict_sites == std::vector<std::size_t>{6, 7});
  CHECK(res.chains[0].stored_latents.size() == 50);
  CHECK(res.chains[0].hyper_trace != res.chains[1].hyper_trace);
  const Matrix pred = pooled_predictive(res, 1, 3);
  CHECK(pred.rows() == 100);
  CHECK(pred.cols() == 10);
  CHECK((pred.array() > 0).all());
  const auto again = fit(fs, ds.data, ds.model);
  CHECK(again.chains[1].hyper_trace == res.chains[1].hyper_trace);
}

TEST_CASE("comparison averages over held-out cells and flags the best") {
  Holdout h;
  h.y.resize(2, 1);
  h.y << 1.0, std::nan("");
  h.thresholds = {0.5};
  Matrix good(3, 2), bad(3, 2);
  good << 1.0, 0.0, 1.1, 0.0, 0.9, 0.0;
  bad << 5.0, 0.0, 6.0, 0.0, 7.0, 0.0;
  const auto r = compare({"good", "bad"}, {{good}, {bad}}, h);
  REQUIRE(r.size() == 2);
  CHECK(r[0].cells == 1);
  CHECK(r[0].best_crps);
  CHECK(r[0].best_twcrps);
  CHECK_FALSE(r[1].best_crps);
  CHECK(r[1].crps > r[0].crps);
  CHECK_THROWS_AS(compare({"a"}, {{good}, {bad}}, h), ValidationError);
}
