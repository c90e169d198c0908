#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "ratemix/likelihood.hpp"

#include <cmath>

using namespace ratemix;

TEST_CASE("exceedance data classification and validation") {
  Matrix y(1, 4), u(1, 4);
  y << 2.0, 0.5, 3.0, 1.0;
  u << 1.0, 1.0, kInf, 0.0;
  const auto d = ExceedanceData::from_values(y, u);
  CHECK(d.kind(0, 0) == CellKind::exceed);
  CHECK(d.kind(0, 1) == CellKind::censored);
  CHECK(d.kind(0, 2) == CellKind::missing);
  CHECK(d.kind(0, 3) == CellKind::exceed);
  CHECK(d.site_fully_missing(2));
  CHECK_FALSE(d.site_fully_missing(0));

  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> e(1, 4);
  e << 1, 0, 0, 1;
  CHECK_NOTHROW(ExceedanceData::from_indicators(y, u, e));
  e(0, 1) = 1;  // claims an exceedance below the threshold
  CHECK_THROWS_AS(ExceedanceData::from_indicators(y, u, e), ValidationError);

  Matrix bad = y;
  bad(0, 3) = 0.0;  // u = 0 needs a positive value
  CHECK_THROWS_AS(ExceedanceData::from_values(bad, u), ValidationError);
  bad = y;
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(ExceedanceData::from_values(bad, u), ValidationError);
  Matrix badu = u;
  badu(0, 0) = -0.5;
  CHECK_THROWS_AS(ExceedanceData::from_values(y, badu), ValidationError);
  CHECK_THROWS_AS(ExceedanceData::from_values(y, Matrix(2, 4)), ValidationError);
}

TEST_CASE("hyperparameter transform round trip and Jacobian") {
  for (VariantId id : {VariantId::D1, VariantId::D2, VariantId::D3, VariantId::D4}) {
    const auto p = fixture::make_problem(11, 5, 2, id);
    const bool fixed = p.model.variant.beta1_fixed_at_one;
    const auto t = transform(p.h, fixed);
    const auto back = inverse_transform(t, fixed);
    CHECK(back.alpha_coefs[0] == doctest::Approx(p.h.alpha_coefs[0]).epsilon(1e-13));
    CHECK(back.beta1 == doctest::Approx(p.h.beta1).epsilon(1e-13));
    CHECK(back.beta2 == doctest::Approx(p.h.beta2).epsilon(1e-13));
    CHECK(back.rho == doctest::Approx(p.h.rho).epsilon(1e-13));

    const auto v = pack(t, fixed);
    REQUIRE(v.size() == p.model.n_hyperparams());
    CHECK(pack(unpack(v, p.model), fixed) == v);

    // log |det d natural / d packed| by central differences
    const std::size_t k = v.size();
    Eigen::MatrixXd J(k, k);
    for (std::size_t c = 0; c < k; ++c) {
      auto vp = v, vm = v;
      vp[c] += 1e-6;
      vm[c] -= 1e-6;
      const auto np = natural_vector(inverse_transform(unpack(vp, p.model), fixed), fixed);
      const auto nm = natural_vector(inverse_transform(unpack(vm, p.model), fixed), fixed);
      for (std::size_t r = 0; r < k; ++r) J(r, c) = (np[r] - nm[r]) / 2e-6;
    }
    CAPTURE(p.model.variant.name());
    CHECK(log_jacobian(t) == doctest::Approx(std::log(std::abs(J.determinant()))).epsilon(1e-7));
  }
}

TEST_CASE("observation terms") {
  const double beta1 = 2.5, lam = 0.8;
  CHECK(obs_logcontrib(1.3, 1.0, true, lam, beta1) == doctest::Approx(gamma_logpdf(1.3, {lam, beta1})));
  const double u = 2.0;
  const double mass = oracle::integrate([&](double t) { return t > 0 ? std::exp(gamma_logpdf(t, {lam, beta1})) : 0.0; }, 0.0, u);
  CHECK(obs_logcontrib(0.4, u, false, lam, beta1) == doctest::Approx(std::log(mass)).epsilon(1e-10));
  CHECK(obs_logcontrib(0.4, kInf, false, lam, beta1) == 0.0);
  for (auto [y, uu, e] : {std::tuple{1.3, 1.0, true}, std::tuple{0.4, 2.0, false}, std::tuple{0.1, 50.0, false}}) {
    auto f = [&](double l) { return obs_logcontrib(y, uu, e, std::exp(l), beta1); };
    CHECK(obs_logcontrib_dlog(y, uu, e, lam, beta1) ==
          doctest::Approx(oracle::central_diff(f, std::log(lam), 1e-5)).epsilon(1e-7));
  }
}

TEST_CASE("fast kernel agrees with the serial reference") {
  for (VariantId id : {VariantId::D1, VariantId::D2, VariantId::D3, VariantId::D4}) {
    const auto p = fixture::make_problem(21, 12, 9, id);
    const PriorConfig priors;
    const LatentMatrix l{p.log_lambda};
    const double fast = augmented_logpost(p.h, l, p.data, p.model, priors);
    const double ref = reference::augmented_logpost(p.h, l, p.data, p.model, priors);
    CAPTURE(p.model.variant.name());
    REQUIRE(std::isfinite(ref));
    CHECK(fast == doctest::Approx(ref).epsilon(1e-12));
    const Matrix gf = grad_logpost_latent(p.h, l, p.data, p.model, priors);
    const Matrix gr = reference::grad_logpost_latent(p.h, l, p.data, p.model, priors);
    CHECK((gf - gr).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + gr.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("serial and parallel evaluation are bit-identical") {
  const auto p = fixture::make_problem(5, 30, 40);
  const PosteriorEvaluator eval(p.data, p.model, PriorConfig{});
  const auto prep = eval.prepare(p.h);
  REQUIRE(prep);
  Matrix g1, g2;
  const double a = eval.evaluate(*prep, p.log_lambda, &g1, Exec::serial).total();
  const double b = eval.evaluate(*prep, p.log_lambda, &g2, Exec::parallel).total();
  CHECK(a == b);
  CHECK(g1 == g2);
  CHECK(eval.evaluate(*prep, p.log_lambda, nullptr, Exec::parallel).total() == a);
}

TEST_CASE("latent gradient matches finite differences") {
  const auto p = fixture::make_problem(8, 6, 5);
  const PriorConfig priors;
  const Matrix g = grad_logpost_latent(p.h, {p.log_lambda}, p.data, p.model, priors);
  for (Eigen::Index i = 0; i < p.log_lambda.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.log_lambda.cols(); ++j) {
      auto f = [&](double x) {
        Matrix l = p.log_lambda;
        l(i, j) = x;
        return reference::augmented_logpost(p.h, {l}, p.data, p.model, priors);
      };
      const double fd = oracle::central_diff(f, p.log_lambda(i, j), 1e-5);
      CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("hyperparameter prior support and pinned beta1") {
  const auto p = fixture::make_problem(3, 4, 2, VariantId::D3);
  const PriorConfig priors;
  HyperParams h = p.h;
  const double base = hyper_logprior(h, p.model.variant, priors);
  h.beta1 = 7.0;  // ignored when pinned
  CHECK(hyper_logprior(h, p.model.variant, priors) == base);
  h.rho = -1.0;
  CHECK(hyper_logprior(h, p.model.variant, priors) == kLogZero);
  h = p.h;
  h.beta2 = 0.9;  // tail index above one
  CHECK(hyper_logprior(h, p.model.variant, priors) == kLogZero);
  const PosteriorEvaluator eval(p.data, p.model, priors);
  CHECK_FALSE(eval.prepare(h).has_value());
}

TEST_CASE("site-level latent shapes") {
  const auto p = fixture::make_problem(4, 5, 2, VariantId::D2);
  const Vector b = site_beta2(p.h, p.model);
  for (Eigen::Index s = 0; s < b.size(); ++s) {
    const double eta = p.h.beta2_slopes[0] * p.model.beta2_covariates(s, 0) + p.h.beta2_slopes[1] * p.model.beta2_covariates(s, 1);
    CHECK(b(s) == doctest::Approx(p.h.beta2 * std::exp(eta)));
  }
}
