// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include <cmath>

#include <doctest.h>

#include "markovbsde/generator.hpp"
#include "markovbsde/grid.hpp"
#include "markovbsde/models.hpp"

using namespace mbsde;

namespace {

double ncdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

MultiAssetSLV basket_model() {
  Matrix cs(2, 2), csv(2, 2), cv(2, 2);
  cs << 1, .5, .5, 1;
  csv << .65, .3, -.1, .05;
  cv << 1, .7, .7, 1;
  return MultiAssetSLV({heston_sabr(0.01, 0.6, 0.9, 0.02, 0.65, 0.0), heston_sabr(0.01, 0.07, 0.2, 0.3, 0.3, 0.0)},
                       cs, csv, cv);
}

}  // namespace

TEST_CASE("HypHyp local and stochastic factors") {
  for (double beta : {0.07, 0.3, 1.0}) CHECK(hyphyp_f(1.0, beta) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(hyphyp_f(2.5, 1.0) == doctest::Approx(2.5));
  CHECK(hyphyp_g(0.0) == 1.0);
  CHECK(hyphyp_g(0.75) == doctest::Approx(2.0));
  const SLVModel m = hyphyp(0.01, 0.5, 0.2, 0.3, 0.3, 0.0);
  CHECK(m.m(0.0) == doctest::Approx(0.3));
  CHECK(m.sigma_v(1.7) == doctest::Approx(0.3 * std::sqrt(0.4)));
  CHECK(m.mu_v(2.0) == doctest::Approx(-0.4));
  CHECK_THROWS_AS(hyphyp(0.01, 0.0, 0.2, 0.3, 0.3, 0.0), ArgumentError);
  CHECK_THROWS_AS(heston_sabr(0.01, 0.5, 0.2, 0.3, 0.3, 1.0), ArgumentError);
}

TEST_CASE("SLV diffusion is diag(m Gamma, sigma_v) times the Cholesky factor") {
  const SLVModel m = heston_sabr(0.0, 0.5, 1.0, 0.04, 0.3, -0.4);
  const auto [drift, diff] = slv_assemble(m);
  Vector x(2);
  x << 81.0, 0.09;
  const Matrix s = diff(x);
  const Matrix cov = s * s.transpose();
  const double a = 0.3 * 9.0, b = 0.3 * 0.3;
  CHECK(cov(0, 0) == doctest::Approx(a * a));
  CHECK(cov(1, 1) == doctest::Approx(b * b));
  CHECK(cov(0, 1) == doctest::Approx(-0.4 * a * b));
  CHECK(drift(x)[1] == doctest::Approx(1.0 * (0.04 - 0.09)));
}

TEST_CASE("multi-asset correlation and Cholesky gate") {
  const MultiAssetSLV m = basket_model();
  CHECK((m.cholesky() * m.cholesky().transpose() - m.correlation()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(m.dim() == 4);
  Matrix bad(2, 2);
  bad << 1, 1.2, 1.2, 1;
  const Matrix z = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(MultiAssetSLV({sabr(.4, .9, 0), sabr(.4, .9, 0)}, bad, z, Matrix::Identity(2, 2)),
                  ArgumentError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.2;
  CHECK_THROWS_AS(MultiAssetSLV({sabr(.4, .9, 0), sabr(.4, .9, 0)}, asym, z, Matrix::Identity(2, 2)),
                  ArgumentError);
}

TEST_CASE("sigma^{-T} solve agrees with a dense inverse") {
  const MultiAssetSLV m = basket_model();
  const FactoredDiffusion fd = factored(m);
  const double x[4] = {90.0, 110.0, 0.3, 0.2};
  const double z[4] = {0.4, -1.2, 0.7, 2.0};
  double w[4];
  solve_sigma_transpose(fd, x, z, w);
  const Matrix s = m.diffusion(Eigen::Map<const Vector>(x, 4));
  const Vector ref = s.transpose().inverse() * Eigen::Map<const Vector>(z, 4);
  for (int i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  const double x0[4] = {0.0, 110.0, 0.3, 0.2};
  CHECK_THROWS(solve_sigma_transpose(fd, x0, z, w));
}

TEST_CASE("equal rates reduce the drivers to linear ones") {
  const DriverSpec lin = linear_driver(0.04);
  const DriverSpec nl = nonlinear_rates_driver(0.04, 0.25, 0.04, 0.04);
  const double x = 100.0;
  for (double y : {-3.0, 0.5, 7.0}) {
    for (double z : {-2.0, 0.0, 4.0}) {
      CHECK(nl.f(0.3, &x, y, &z) == doctest::Approx(lin.f(0.3, &x, y, &z)));
    }
  }
  // Two rates: f = -min(r a, R a) - (mu / sigma) z with a = y - z / sigma.
  const DriverSpec two = nonlinear_rates_driver(0.03, 0.2, 0.01, 0.3);
  for (double y : {10.0, -4.0}) {
    const double z = 1.0, a = y - z / 0.2;
    CHECK(two.f(0.0, &x, y, &z) == doctest::Approx(-std::min(0.01 * a, 0.3 * a) - 0.15 * z));
  }
  // SLV: with R = r, f = -r y + w.(r x - mu(x)).
  const SLVModel m = heston_sabr(0.01, 0.6, 0.9, 0.02, 0.65, 0.3);
  const DriverSpec slv = slv_driver(m, 0.05, 0.05);
  const FactoredDiffusion fd = factored(m);
  const double xs[2] = {95.0, 0.03}, zs[2] = {0.8, -0.3};
  double w[2], mu[2];
  solve_sigma_transpose(fd, xs, zs, w);
  fd.drift(xs, mu);
  const double y = 3.0;
  const double expect = -0.05 * y + w[0] * (0.05 * xs[0] - mu[0]) + w[1] * (0.05 * xs[1] - mu[1]);
  CHECK(slv.f(0.0, xs, y, zs) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("Black-Scholes closed form") {
  const double s = 100, K = 100, r = 0.03, sig = 0.2, T = 1.0, t = 0.25;
  const double tau = T - t;
  const double d1 = (std::log(s / K) + (r + 0.5 * sig * sig) * tau) / (sig * std::sqrt(tau));
  const double d2 = d1 - sig * std::sqrt(tau);
  const BSPrice p = bs_analytic_price(s, t, K, r, sig, T);
  CHECK(p.price == doctest::Approx(s * ncdf(d1) - K * std::exp(-r * tau) * ncdf(d2)).epsilon(1e-12));
  CHECK(p.delta_term == doctest::Approx(s * ncdf(d1) * sig).epsilon(1e-12));
  CHECK(bs_analytic_price(120, T, K, r, sig, T).price == doctest::Approx(20.0));
  CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("Hagan implied volatility limits") {
  // beta = 1 and vanishing vol of vol: lognormal with volatility v.
  CHECK(hagan_implied_vol(100, 0.25, 0, 120, 1, 1e-8, 1.0, 0.0) == doctest::Approx(0.25).epsilon(1e-7));
  // Continuous through the money.
  const double atm = hagan_implied_vol(100, 0.4, 0, 100, 1, 0.4, 0.9, 0.3);
  CHECK(hagan_implied_vol(100, 0.4, 0, 100 * (1 + 1e-7), 1, 0.4, 0.9, 0.3) == doctest::Approx(atm).epsilon(1e-6));
  CHECK(hagan_implied_vol(100, 0.4, 0, 100 * (1 - 1e-7), 1, 0.4, 0.9, 0.3) == doctest::Approx(atm).epsilon(1e-6));
  // ATM expansion.
  const double beta = 0.9, rho = 0.3, a = 0.4, v = 0.4, f = 100;
  const double fb = std::pow(f, 1 - beta);
  const double expect = v / fb *
                        (1 + ((1 - beta) * (1 - beta) / 24 * v * v / (fb * fb) +
                              0.25 * rho * beta * a * v / fb + (2 - 3 * rho * rho) / 24 * a * a));
  CHECK(atm == doctest::Approx(expect).epsilon(1e-12));
  // Price is Black-Scholes with the implied vol and zero rate in d.
  const double pr = hagan_sabr_price(100, 0.4, 0, 100, 1, 0.05, 0.4, 0.9, 0.3);
  const double d1 = 0.5 * atm, d2 = -0.5 * atm;
  CHECK(pr == doctest::Approx(std::exp(-0.05) * 100 * (ncdf(d1) - ncdf(d2))).epsilon(1e-12));
}

TEST_CASE("basket transform") {
  const BasketTransform t = basket_transform(0.5, 0.5);
  CHECK((t.b * t.inverse - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);
  Vector x(4);
  x << 90, 110, 0.3, 0.2;
  const Vector xh = t.b * x;
  CHECK(xh[0] == doctest::Approx(100.0));
  CHECK(xh[1] == doctest::Approx(10.0));
  CHECK_THROWS_AS(basket_transform(0.0, 1.0), ArgumentError);
  const MultiAssetSLV m = basket_model();
  const auto [drift, diff] = transformed_coefficients(m, t);
  CHECK((diff(xh) - t.b * m.diffusion(x)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((drift(xh) - t.b * m.drift(x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("payoffs") {
  CHECK(call_payoff(110, 100) == 10);
  CHECK(put_payoff(110, 100) == 0);
  CHECK(put_payoff(90, 100) == 10);
  CHECK(call_combination_payoff(100, 95, 105) == 5);
  CHECK(call_combination_payoff(110, 95, 105) == 5);
  CHECK(call_combination_payoff(120, 95, 105) == -5);
}

TEST_CASE("assembled nonlinearity feeds sigma^T grad u to the driver") {
  const Grid1D g = uniform_grid(0, 1, 2, 10);
  const Generator gen = build_generator_1d(g, [](double) { return 0.0; }, [](double x) { return 0.5 * x; });
  DriverSpec spec;
  spec.f = [](double, const double* x, double y, const double* z) { return x[0] + 10 * y + 100 * z[0]; };
  const Nonlinearity F = assemble_F(gen.grid(), gen.differences, [](const Vector& x) {
    return Matrix::Constant(1, 1, 0.5 * x[0]);
  }, spec);
  Vector u(21);
  for (int i = 0; i < 21; ++i) u[i] = 3.0 * g[i];
  const Vector out = F(0.0, u);
  for (int i = 1; i < 20; ++i) CHECK(out[i] == doctest::Approx(g[i] + 30 * g[i] + 100 * 0.5 * g[i] * 3.0));
  CHECK(out[0] == doctest::Approx(g[0] + 30 * g[0]));
  CHECK_THROWS_AS(assemble_F(gen.grid(), gen.differences, [](const Vector&) { return Matrix::Ones(1, 1); },
                             linear_driver(0.1, 2)),
                  ArgumentError);
}
