// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/models.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <sstream>

namespace mbsde {
namespace {

constexpr int kMaxDim = 8;

void check_rho(double rho) {
  if (!(std::abs(rho) < 1.0)) throw ArgumentError("correlation must satisfy |rho| < 1");
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw ArgumentError(std::string(name) + " must be positive");
}

double pos(double a) { return a > 0.0 ? a : 0.0; }
double neg(double a) { return a < 0.0 ? -a : 0.0; }

std::string format_point(const double* x, int d) {
  std::ostringstream os;
  os << '(';
  for (int p = 0; p < d; ++p) os << (p ? ", " : "") << x[p];
  os << ')';
  return os.str();
}

}  // namespace

Model1D black_scholes_model(double mu, double sigma) {
  return {[mu](double x) { return mu * x; },
          [sigma](double x) { return sigma * x; }};
}

SLVModel heston_sabr(double b, double beta, double eta, double theta,
                     double alpha, double rho) {
  check_positive(eta, "eta");
  check_positive(theta, "theta");
  check_positive(alpha, "alpha");
  if (!(beta > 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in (0, 1]");
  check_rho(rho);
  SLVModel m;
  m.omega = [b](double s, double) { return b * s; };
  m.m = [](double v) { return std::sqrt(std::abs(v)); };
  m.gamma = [beta](double s) { return std::pow(std::abs(s), beta); };
  m.mu_v = [eta, theta](double v) { return eta * (theta - v); };
  m.sigma_v = [alpha](double v) { return alpha * std::sqrt(std::abs(v)); };
  m.rho = rho;
  return m;
}

double hyphyp_f(double x, double beta) {
  return ((1.0 - beta + beta * beta) * x +
          (beta - 1.0) *
              (std::sqrt(x * x + beta * beta * (1.0 - x) * (1.0 - x)) - beta)) /
         beta;
}

double hyphyp_g(double v) { return v + std::sqrt(v * v + 1.0); }

SLVModel hyphyp(double b, double beta, double kappa, double sigma0,
                double alpha, double rho) {
  check_positive(kappa, "kappa");
  check_positive(sigma0, "sigma0");
  check_positive(alpha, "alpha");
  if (!(beta > 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in (0, 1]");
  check_rho(rho);
  SLVModel m;
  m.omega = [b](double s, double) { return b * s; };
  m.m = [sigma0](double v) { return sigma0 * hyphyp_g(v); };
  m.gamma = [beta](double s) { return hyphyp_f(s, beta); };
  m.mu_v = [kappa](double v) { return -kappa * v; };
  const double sv = alpha * std::sqrt(2.0 * kappa);
  m.sigma_v = [sv](double) { return sv; };
  m.rho = rho;
  return m;
}

SLVModel sabr(double alpha, double beta, double rho) {
  check_positive(alpha, "alpha");
  if (!(beta > 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in (0, 1]");
  check_rho(rho);
  SLVModel m;
  m.omega = [](double, double) { return 0.0; };
  m.m = [](double v) { return v; };
  m.gamma = [beta](double f) { return std::pow(std::abs(f), beta); };
  m.mu_v = [](double) { return 0.0; };
  m.sigma_v = [alpha](double v) { return alpha * v; };
  m.rho = rho;
  return m;
}

MultiAssetSLV::MultiAssetSLV(std::vector<SLVModel> components,
                             const Matrix& c_s, const Matrix& c_sv,
                             const Matrix& c_v)
    : components_(std::move(components)) {
  const Eigen::Index d = static_cast<Eigen::Index>(components_.size());
  if (d < 1 || 2 * d > kMaxDim) throw ArgumentError("unsupported number of assets");
  if (c_s.rows() != d || c_s.cols() != d || c_sv.rows() != d ||
      c_sv.cols() != d || c_v.rows() != d || c_v.cols() != d) {
    throw ArgumentError("correlation blocks must be d x d");
  }
  corr_.resize(2 * d, 2 * d);
  corr_ << c_s, c_sv, c_sv.transpose(), c_v;
  if (!corr_.isApprox(corr_.transpose(), 0.0)) {
    throw ArgumentError("correlation matrix is not symmetric");
  }
  Eigen::LLT<Matrix> llt(corr_);
  if (llt.info() != Eigen::Success) {
    throw ArgumentError("correlation matrix is not positive definite");
  }
  chol_ = llt.matrixL();
}

void MultiAssetSLV::drift(const double* x, double* out) const {
  const int d = assets();
  for (int i = 0; i < d; ++i) {
    out[i] = components_[i].omega(x[i], x[d + i]);
    out[d + i] = components_[i].mu_v(x[d + i]);
  }
}

void MultiAssetSLV::scale(const double* x, double* out) const {
  const int d = assets();
  for (int i = 0; i < d; ++i) {
    out[i] = components_[i].m(x[d + i]) * components_[i].gamma(x[i]);
    out[d + i] = components_[i].sigma_v(x[d + i]);
  }
}

Vector MultiAssetSLV::drift(const Vector& x) const {
  Vector out(dim());
  drift(x.data(), out.data());
  return out;
}

Matrix MultiAssetSLV::diffusion(const Vector& x) const {
  Vector s(dim());
  scale(x.data(), s.data());
  return s.asDiagonal() * chol_;
}

std::pair<DriftFn, DiffusionFn> slv_assemble(const SLVModel& model) {
  check_rho(model.rho);
  Matrix l(2, 2);
  l << 1.0, 0.0, model.rho, std::sqrt(1.0 - model.rho * model.rho);
  DriftFn drift = [model](const Vector& x) {
    Vector out(2);
    out << model.omega(x[0], x[1]), model.mu_v(x[1]);
    return out;
  };
  DiffusionFn diffusion = [model, l](const Vector& x) {
    Vector s(2);
    s << model.m(x[1]) * model.gamma(x[0]), model.sigma_v(x[1]);
    return Matrix(s.asDiagonal() * l);
  };
  return {drift, diffusion};
}

FactoredDiffusion factored(const SLVModel& model) {
  check_rho(model.rho);
  FactoredDiffusion fd;
  fd.dim = 2;
  fd.chol.resize(2, 2);
  fd.chol << 1.0, 0.0, model.rho, std::sqrt(1.0 - model.rho * model.rho);
  fd.drift = [model](const double* x, double* out) {
    out[0] = model.omega(x[0], x[1]);
    out[1] = model.mu_v(x[1]);
  };
  fd.scale = [model](const double* x, double* out) {
    out[0] = model.m(x[1]) * model.gamma(x[0]);
    out[1] = model.sigma_v(x[1]);
  };
  return fd;
}

FactoredDiffusion factored(const MultiAssetSLV& model) {
  FactoredDiffusion fd;
  fd.dim = model.dim();
  fd.chol = model.cholesky();
  fd.drift = [model](const double* x, double* out) { model.drift(x, out); };
  fd.scale = [model](const double* x, double* out) { model.scale(x, out); };
  return fd;
}

void solve_sigma_transpose(const FactoredDiffusion& fd, const double* x,
                           const double* z, double* w) {
  const int d = fd.dim;
  std::array<double, kMaxDim> s{};
  fd.scale(x, s.data());
  // L^* is upper triangular: back substitution.
  for (int i = d - 1; i >= 0; --i) {
    double acc = z[i];
    for (int k = i + 1; k < d; ++k) acc -= fd.chol(k, i) * w[k];
    w[i] = acc / fd.chol(i, i);
  }
  for (int i = 0; i < d; ++i) {
    if (s[i] == 0.0 || !std::isfinite(s[i])) {
      throw NumericError("singular diffusion at state " + format_point(x, d));
    }
    w[i] /= s[i];
  }
}

DriverSpec slv_driver(const FactoredDiffusion& fd, double r, double R) {
  if (fd.dim > kMaxDim) throw ArgumentError("state dimension too large");
  DriverSpec spec;
  spec.dim = fd.dim;
  spec.f = [fd, r, R](double, const double* x, double y, const double* z) {
    const int d = fd.dim;
    std::array<double, kMaxDim> w{};
    std::array<double, kMaxDim> mu{};
    solve_sigma_transpose(fd, x, z, w.data());
    fd.drift(x, mu.data());
    double held = 0.0;
    double carry = 0.0;
    for (int i = 0; i < d; ++i) {
      held += w[i] * x[i];
      carry += w[i] * mu[i];
    }
    const double a = y - held;
    return -(r * pos(a) - R * neg(a) + carry);
  };
  return spec;
}

DriverSpec slv_driver(const SLVModel& model, double r, double R) {
  return slv_driver(factored(model), r, R);
}

DriverSpec slv_driver(const MultiAssetSLV& model, double r, double R) {
  return slv_driver(factored(model), r, R);
}

DriverSpec linear_driver(double r, int dim) {
  DriverSpec spec;
  spec.dim = dim;
  spec.f = [r](double, const double*, double y, const double*) { return -r * y; };
  return spec;
}

DriverSpec nonlinear_rates_driver(double mu, double sigma, double r, double R) {
  check_positive(sigma, "sigma");
  DriverSpec spec;
  spec.dim = 1;
  spec.f = [mu, sigma, r, R](double, const double*, double y, const double* z) {
    const double a = y - z[0] / sigma;
    return -(r * pos(a) - R * neg(a) + (mu / sigma) * z[0]);
  };
  return spec;
}

Nonlinearity assemble_F(const TensorGrid& grid, const DifferenceSet& diffs,
                        const DiffusionFn& model_sigma,
                        const DriverSpec& driver) {
  const std::size_t n = grid.total_size();
  const int d = static_cast<int>(grid.dim());
  if (driver.dim != d || static_cast<int>(diffs.d1.size()) != d) {
    throw ArgumentError("driver / difference dimensions do not match the grid");
  }
  if (d > kMaxDim) throw ArgumentError("state dimension too large");
  // Node coordinates and sigma^* per node, row-major d x d blocks.
  auto coords = std::make_shared<std::vector<double>>(n * d);
  auto sigt = std::make_shared<std::vector<double>>(n * d * d);
  Vector x(d);
  for (std::size_t i = 0; i < n; ++i) {
    grid.point(i, coords->data() + i * d);
    for (int p = 0; p < d; ++p) x[p] = (*coords)[i * d + p];
    const Matrix s = model_sigma(x);
    if (s.rows() != d || s.cols() != d) {
      throw ArgumentError("diffusion has wrong shape");
    }
    for (int p = 0; p < d; ++p) {
      for (int q = 0; q < d; ++q) (*sigt)[i * d * d + p * d + q] = s(q, p);
    }
  }
  auto d1 = std::make_shared<const std::vector<SparseMatrix>>(diffs.d1);
  auto f = driver.f;
  return [n, d, coords, sigt, d1, f](double t, const Vector& z) {
    std::vector<Vector> grads(d);
    for (int p = 0; p < d; ++p) grads[p].noalias() = (*d1)[p] * z;
    Vector out(n);
    std::array<double, kMaxDim> g{};
    std::array<double, kMaxDim> zz{};
    for (std::size_t i = 0; i < n; ++i) {
      for (int p = 0; p < d; ++p) g[p] = grads[p][i];
      const double* st = sigt->data() + i * d * d;
      for (int p = 0; p < d; ++p) {
        double acc = 0.0;
        for (int q = 0; q < d; ++q) acc += st[p * d + q] * g[q];
        zz[p] = acc;
      }
      const double v = f(t, coords->data() + i * d, z[i], zz.data());
      if (!std::isfinite(v)) {
        throw NumericError("driver returned non-finite value at node " +
                           std::to_string(i));
      }
      out[i] = v;
    }
    return out;
  };
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

BSPrice bs_analytic_price(double s, double t, double K, double r,
                          double sigma, double T) {
  if (t >= T) {
    return {call_payoff(s, K), s > K ? s * sigma : 0.0};
  }
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
  if (s <= 0.0) return {0.0, 0.0};
  const double tau = T - t;
  const double sq = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / K) + (r + 0.5 * sigma * sigma) * tau) / sq;
  const double d2 = d1 - sq;
  const double nd1 = normal_cdf(d1);
  return {s * nd1 - K * std::exp(-r * tau) * normal_cdf(d2), s * nd1 * sigma};
}

double hagan_implied_vol(double f, double v, double t, double K, double T,
                         double alpha, double beta, double rho,
                         const HaganOptions& opt) {
  if (!(f > 0.0 && K > 0.0 && v > 0.0)) {
    throw ArgumentError("Hagan formula needs f, K, v > 0");
  }
  const double tau = T - t;
  const double fk = f * K;
  const double lg = std::log(f / K);
  const double omb = 1.0 - beta;
  const double z_exp = opt.beta_squared_z_exponent ? 0.5 * (1.0 - beta * beta) : 0.5 * omb;
  const double z = alpha / v * std::pow(fk, z_exp) * lg;
  double zchi;
  if (std::abs(z) < 1e-8) {
    zchi = 1.0 - 0.5 * rho * z;
  } else {
    const double chi =
        std::log((std::sqrt(1.0 - 2.0 * rho * z + z * z) + z - rho) / (1.0 - rho));
    zchi = z / chi;
  }
  const double last = (2.0 - 3.0 * rho * rho) / 24.0 *
                      (opt.alpha_squared_term ? alpha * alpha : 1.0);
  const double num =
      v * (1.0 + (omb * omb / 24.0 * v * v / std::pow(fk, omb) +
                  0.25 * rho * beta * alpha * v / std::pow(fk, 0.5 * omb) + last) *
                     tau);
  const double den = std::pow(fk, 0.5 * omb) *
                     (1.0 + omb * omb / 24.0 * lg * lg +
                      std::pow(omb, 4) / 1920.0 * lg * lg * lg * lg);
  return num / den * zchi;
}

double hagan_sabr_price(double f, double v, double t, double K, double T,
                        double r, double alpha, double beta, double rho,
                        const HaganOptions& opt) {
  const double tau = T - t;
  if (tau <= 0.0) return call_payoff(f, K);
  if (f <= 0.0) return 0.0;
  const double sb = hagan_implied_vol(f, v, t, K, T, alpha, beta, rho, opt);
  const double rd = opt.rate_in_d ? r : 0.0;
  const double sq = sb * std::sqrt(tau);
  const double d1 = (std::log(f / K) + (rd + 0.5 * sb * sb) * tau) / sq;
  const double d2 = (std::log(f / K) + (rd - 0.5 * sb * sb) * tau) / sq;
  return std::exp(-r * tau) * (f * normal_cdf(d1) - K * normal_cdf(d2));
}

BasketTransform basket_transform(double lambda1, double lambda2) {
  if (lambda1 == 0.0 || lambda2 == 0.0) {
    throw ArgumentError("basket weights must be non-zero");
  }
  BasketTransform t;
  t.b = Matrix::Identity(4, 4);
  t.b(0, 0) = lambda1;
  t.b(0, 1) = lambda2;
  t.b(1, 0) = -lambda1;
  t.b(1, 1) = lambda2;
  t.inverse = Matrix::Identity(4, 4);
  t.inverse(0, 0) = 0.5 / lambda1;
  t.inverse(0, 1) = -0.5 / lambda1;
  t.inverse(1, 0) = 0.5 / lambda2;
  t.inverse(1, 1) = 0.5 / lambda2;
  return t;
}

std::pair<DriftFn, DiffusionFn> transformed_coefficients(
    const MultiAssetSLV& model, const BasketTransform& t) {
  if (model.dim() != 4) throw ArgumentError("basket transform needs two assets");
  DriftFn drift = [model, t](const Vector& xh) {
    return Vector(t.b * model.drift(Vector(t.inverse * xh)));
  };
  DiffusionFn diffusion = [model, t](const Vector& xh) {
    return Matrix(t.b * model.diffusion(Vector(t.inverse * xh)));
  };
  return {drift, diffusion};
}

DriverSpec transformed_driver(const DriverSpec& driver, const BasketTransform& t) {
  if (driver.dim != t.b.rows()) throw ArgumentError("driver dimension mismatch");
  DriverSpec spec;
  spec.dim = driver.dim;
  auto f = driver.f;
  const Matrix inv = t.inverse;
  spec.f = [f, inv](double time, const double* xh, double y, const double* z) {
    std::array<double, kMaxDim> x{};
    const int d = static_cast<int>(inv.rows());
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += inv(i, k) * xh[k];
      x[i] = acc;
    }
    return f(time, x.data(), y, z);
  };
  return spec;
}

double call_payoff(double s, double K) { return s > K ? s - K : 0.0; }

double put_payoff(double s, double K) { return K > s ? K - s : 0.0; }

double call_combination_payoff(double s, double lower, double upper) {
  return call_payoff(s, lower) - 2.0 * call_payoff(s, upper);
}

}  // namespace mbsde
