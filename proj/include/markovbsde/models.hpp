// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_MODELS_HPP_
#define MARKOVBSDE_MODELS_HPP_

#include <functional>
#include <utility>
#include <vector>

#include "markovbsde/common.hpp"
#include "markovbsde/generator.hpp"
#include "markovbsde/integrators.hpp"

namespace mbsde {

// Driver in PDE convention: the term f in du/dt + L u + f(t, x, u, sigma^* grad u) = 0.
// A BSDE written Y = xi - int g ds - int Z dW has f = -g.
struct DriverSpec {
  int dim = 1;
  std::function<double(double t, const double* x, double y, const double* z)> f;
};

// Scalar model dX = mu(X) dt + sigma(X) dW.
struct Model1D {
  ScalarFn mu;
  ScalarFn sigma;
};

Model1D black_scholes_model(double mu, double sigma);

// dS = omega(S, v) dt + m(v) Gamma(S) dW1, dv = mu_v(v) dt + sigma_v(v) dW2,
// d<W1, W2> = rho dt.
struct SLVModel {
  std::function<double(double, double)> omega;
  ScalarFn m;
  ScalarFn gamma;
  ScalarFn mu_v;
  ScalarFn sigma_v;
  double rho = 0.0;
};

SLVModel heston_sabr(double b, double beta, double eta, double theta,
                     double alpha, double rho);
SLVModel hyphyp(double b, double beta, double kappa, double sigma0,
                double alpha, double rho);
SLVModel sabr(double alpha, double beta, double rho);

double hyphyp_f(double x, double beta);
double hyphyp_g(double v);

// d assets with states ordered (S_1..S_d, v_1..v_d); the correlation of the
// 2d Brownian drivers is [[C_S, C_Sv], [C_Sv^*, C_v]].
class MultiAssetSLV {
 public:
  MultiAssetSLV(std::vector<SLVModel> components, const Matrix& c_s,
                const Matrix& c_sv, const Matrix& c_v);

  int assets() const { return static_cast<int>(components_.size()); }
  int dim() const { return 2 * assets(); }
  const Matrix& correlation() const { return corr_; }
  const Matrix& cholesky() const { return chol_; }

  void drift(const double* x, double* out) const;
  // Diagonal factor of sigma(x) = diag(...) L.
  void scale(const double* x, double* out) const;
  Vector drift(const Vector& x) const;
  Matrix diffusion(const Vector& x) const;

 private:
  std::vector<SLVModel> components_;
  Matrix corr_;
  Matrix chol_;
};

// Drift and diffusion of the 2-D state (S, v); diffusion = diag(m Gamma, sigma_v) L.
std::pair<DriftFn, DiffusionFn> slv_assemble(const SLVModel& model);

// sigma(x) = diag(scale(x)) * chol; drift mu(x). Generic form shared by the
// single- and multi-asset rate drivers.
struct FactoredDiffusion {
  int dim = 0;
  std::function<void(const double* x, double* out)> drift;
  std::function<void(const double* x, double* out)> scale;
  Matrix chol;
};

FactoredDiffusion factored(const SLVModel& model);
FactoredDiffusion factored(const MultiAssetSLV& model);

// w = sigma(x)^{-*} z, via L^* y = z then w = y / diag. Throws on a zero
// diagonal entry.
void solve_sigma_transpose(const FactoredDiffusion& fd, const double* x,
                           const double* z, double* w);

// -[ r (y - w.x)^+ - R (y - w.x)^- + w.mu(x) ] with w = sigma^{-*} z and
// a^- = max(-a, 0).
DriverSpec slv_driver(const FactoredDiffusion& fd, double r, double R);
DriverSpec slv_driver(const SLVModel& model, double r, double R);
DriverSpec slv_driver(const MultiAssetSLV& model, double r, double R);

DriverSpec linear_driver(double r, int dim = 1);
// -[ r (y - z/sigma)^+ - R (y - z/sigma)^- + (mu/sigma) z ].
DriverSpec nonlinear_rates_driver(double mu, double sigma, double r, double R);

// F(t, z)_i = f(t, x_i, z_i, sigma^*(x_i) (D1 z)_i).
Nonlinearity assemble_F(const TensorGrid& grid, const DifferenceSet& diffs,
                        const DiffusionFn& model_sigma,
                        const DriverSpec& driver);

double normal_cdf(double x);

struct BSPrice {
  double price = 0.0;
  double delta_term = 0.0;  // s * Psi(d1) * sigma
};

BSPrice bs_analytic_price(double s, double t, double K, double r,
                          double sigma, double T);

struct HaganOptions {
  // Exponent of F K in z: (1 - beta) / 2, or (1 - beta^2) / 2 when set.
  bool beta_squared_z_exponent = false;
  // Multiply (2 - 3 rho^2) / 24 by alpha^2.
  bool alpha_squared_term = true;
  // Add r (T - t) to the numerators of d1, d2.
  bool rate_in_d = false;
};

double hagan_implied_vol(double f, double v, double t, double K, double T,
                         double alpha, double beta, double rho,
                         const HaganOptions& opt = {});
double hagan_sabr_price(double f, double v, double t, double K, double T,
                        double r, double alpha, double beta, double rho,
                        const HaganOptions& opt = {});

struct BasketTransform {
  Matrix b;
  Matrix inverse;
};

BasketTransform basket_transform(double lambda1, double lambda2);

// x^ = B x coordinates: drift B mu(B^-1 x^), diffusion B sigma(B^-1 x^).
std::pair<DriftFn, DiffusionFn> transformed_coefficients(
    const MultiAssetSLV& model, const BasketTransform& t);
// f(t, B^-1 x^, y, z) with the untransformed sigma.
DriverSpec transformed_driver(const DriverSpec& driver, const BasketTransform& t);

double call_payoff(double s, double K);
double put_payoff(double s, double K);
// (s - lower)^+ - 2 (s - upper)^+
double call_combination_payoff(double s, double lower, double upper);

}  // namespace mbsde

#endif  // MARKOVBSDE_MODELS_HPP_
