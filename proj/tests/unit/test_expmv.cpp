// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include <cmath>
#include <random>

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "markovbsde/common.hpp"
#include "markovbsde/expmv.hpp"

using namespace mbsde;

namespace {

Matrix random_matrix(int n, double scale, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = scale * u(gen);
  }
  return a;
}

// Sparse generator-like test matrix: tridiagonal rates with zero row sums.
SparseMatrix random_generator(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    if (i > 0) {
      const double r = u(gen);
      t.emplace_back(i, i - 1, r);
      diag -= r;
    }
    if (i + 1 < n) {
      const double r = u(gen);
      t.emplace_back(i, i + 1, r);
      diag -= r;
    }
    t.emplace_back(i, i, diag);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace

TEST_CASE("phi functions of zero") {
  for (int l = 0; l <= 3; ++l) {
    const Matrix p = phi_dense(l, Matrix::Zero(3, 3));
    CHECK((p - Matrix::Identity(3, 3) / factorial(l)).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK_THROWS_AS(phi_dense(-1, Matrix::Zero(2, 2)), ArgumentError);
}

TEST_CASE("scalar phi values") {
  const Matrix one = Matrix::Constant(1, 1, 1.0);
  const double e = std::exp(1.0);
  CHECK(phi_dense(0, one)(0, 0) == doctest::Approx(e).epsilon(1e-14));
  CHECK(phi_dense(1, one)(0, 0) == doctest::Approx(e - 1.0).epsilon(1e-14));
  CHECK(phi_dense(2, one)(0, 0) == doctest::Approx(e - 2.0).epsilon(1e-14));
}

TEST_CASE("phi recurrence on scalars and matrices") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 40; ++trial) {
    const double z = u(gen);
    const std::vector<Matrix> p = phi_dense_all(6, Matrix::Constant(1, 1, z));
    for (int l = 0; l < 6; ++l) {
      const double lhs = p[l + 1](0, 0) * z + 1.0 / factorial(l) - p[l](0, 0);
      CHECK(std::abs(lhs) < 1e-12 * std::max(1.0, std::abs(p[l](0, 0))));
    }
  }
  const Matrix a = random_matrix(5, 0.8, 11);
  const std::vector<Matrix> p = phi_dense_all(5, a);
  for (int l = 0; l < 5; ++l) {
    const Matrix r = p[l + 1] * a + Matrix::Identity(5, 5) / factorial(l) - p[l];
    CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("matrix exponential against independent oracles") {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const Matrix a = random_matrix(6, 0.15, seed);  // ||A|| <= 1
    Matrix taylor = Matrix::Identity(6, 6), term = Matrix::Identity(6, 6);
    for (int k = 1; k < 30; ++k) {
      term = term * a / k;
      taylor += term;
    }
    CHECK((expm(a) - taylor).cwiseAbs().maxCoeff() < 1e-12);
  }
  for (unsigned seed = 10; seed <= 14; ++seed) {
    const Matrix a = random_matrix(8, 3.0, seed);
    const Matrix ref = a.exp();
    CHECK((expm(a) - ref).norm() / ref.norm() < 1e-11);
  }
}

TEST_CASE("Arnoldi on the identity breaks down at once") {
  SparseMatrix id(6, 6);
  id.setIdentity();
  const KrylovWorkspace ws = arnoldi(id, Vector::Ones(6), 4);
  CHECK(ws.breakdown);
  CHECK(ws.dim == 1);
  CHECK(ws.hessenberg(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(arnoldi(id, Vector::Zero(6), 3), ArgumentError);
}

TEST_CASE("Arnoldi on a nilpotent shift spans everything") {
  SparseMatrix s(5, 5);
  for (int i = 0; i + 1 < 5; ++i) s.insert(i + 1, i) = 1.0;
  Vector e1 = Vector::Zero(5);
  e1[0] = 1.0;
  const KrylovWorkspace ws = arnoldi(s, e1, 8);
  CHECK(ws.breakdown);
  CHECK(ws.dim == 5);
}

TEST_CASE("Arnoldi residual identity and orthonormality") {
  const Matrix a = random_matrix(50, 1.0, 3);
  const SparseMatrix as = a.sparseView();
  const Vector v = random_matrix(50, 1.0, 4).col(0);
  const KrylovWorkspace ws = arnoldi(as, v, 10);
  REQUIRE(ws.dim == 10);
  const Matrix vm = ws.basis.leftCols(10);
  const Matrix vm1 = ws.basis.leftCols(11);
  CHECK((a * vm - vm1 * ws.hessenberg).norm() < 1e-8 * a.norm());
  CHECK((vm1.transpose() * vm1 - Matrix::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("phi action on a diagonal matrix") {
  Vector d(4), v(4);
  d << -3.0, -1.0, 0.0, 0.5;
  v << 1.0, -2.0, 0.5, 3.0;
  const SparseMatrix a = Matrix(d.asDiagonal()).sparseView();
  const double dt = 0.7;
  const Vector got = phi_combination_action(PhiCombination{{{1.0, 0, 1.0}}}, a, dt, v, 4);
  for (int i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(std::exp(dt * d[i]) * v[i]).epsilon(1e-12));
}

TEST_CASE("Krylov action agrees with the dense evaluation") {
  for (int n : {40, 120, 200}) {
    const SparseMatrix a = random_generator(n, static_cast<unsigned>(n));
    const Vector v = random_matrix(n, 1.0, 99).col(0);
    const double dt = 0.05;
    const PhiCombination comb{{{1.0, 1, 1.0}, {-3.0, 2, 1.0}, {4.0, 3, 0.5}, {0.25, 0, 0.5}}};
    const Matrix ad = Matrix(a);
    const Vector ref = phi_dense(1, dt * ad) * v - 3.0 * (phi_dense(2, dt * ad) * v) +
                       4.0 * (phi_dense(3, 0.5 * dt * ad) * v) +
                       0.25 * (phi_dense(0, 0.5 * dt * ad) * v);
    const Vector got = phi_combination_action(comb, a, dt, v, 100);
    CHECK(rel_err(got, ref) < 1e-10);
  }
}

TEST_CASE("Krylov error does not grow with the subspace") {
  const int n = 150;
  Matrix b = random_matrix(n, 1.0, 5);
  const Matrix spd = -(b * b.transpose() / n + Matrix::Identity(n, n));
  const SparseMatrix a = spd.sparseView();
  const Vector v = random_matrix(n, 1.0, 6).col(0);
  const Vector ref = spd.exp() * v;
  double last = 1e300;
  for (int m : {2, 4, 8, 16, 32}) {
    const double err = rel_err(phi_combination_action(PhiCombination{{{1.0, 0, 1.0}}}, a, 1.0, v, m), ref);
    CHECK(err <= last * (1.0 + 1e-6) + 1e-14);
    last = err;
  }
  CHECK(last < 1e-10);
}

TEST_CASE("phi action is linear in the vector") {
  const SparseMatrix a = random_generator(30, 8);
  const Vector u = random_matrix(30, 1.0, 1).col(0);
  const Vector w = random_matrix(30, 1.0, 2).col(0);
  const PhiCombination comb{{{1.0, 1, 1.0}, {0.5, 2, 0.5}}};
  const double alpha = 1.7, beta = -0.4;
  // m >= N takes the dense path, where linearity is exact.
  const Vector lhs = phi_combination_action(comb, a, 0.3, alpha * u + beta * w, 30);
  const Vector rhs = alpha * phi_combination_action(comb, a, 0.3, u, 30) +
                     beta * phi_combination_action(comb, a, 0.3, w, 30);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("phi action of the zero vector and non-finite input") {
  const SparseMatrix a = random_generator(20, 2);
  const Vector z = phi_combination_action(PhiCombination{{{1.0, 1, 1.0}}}, a, 0.1, Vector::Zero(20), 5);
  CHECK(z.isZero());
  SparseMatrix bad = a;
  bad.coeffRef(3, 3) = std::nan("");
  CHECK_THROWS_AS(phi_combination_action(PhiCombination{{{1.0, 1, 1.0}}}, bad, 0.1, Vector::Ones(20), 5),
                  NumericError);
}
