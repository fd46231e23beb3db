// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_EXPMV_HPP_
#define MARKOVBSDE_EXPMV_HPP_

#include <map>
#include <vector>

#include "markovbsde/common.hpp"

namespace mbsde {

// weight * phi_l(gamma * A). gamma = 0 denotes phi_l(0) = I / l!.
struct PhiTerm {
  double weight = 1.0;
  int l = 0;
  double gamma = 1.0;
};

struct PhiCombination {
  std::vector<PhiTerm> terms;
  bool empty() const { return terms.empty(); }
};

double factorial(int n);

// Matrix exponential by Pade scaling and squaring.
Matrix expm(const Matrix& a);

// phi_l(a); l = 0 is the exponential.
Matrix phi_dense(int l, const Matrix& a);
// phi_0(a), ..., phi_l(a) from one augmented exponential.
std::vector<Matrix> phi_dense_all(int l, const Matrix& a);

struct KrylovWorkspace {
  Matrix basis;       // N x (m+1); first dim+1 columns are meaningful
  Matrix hessenberg;  // (m+1) x m
  int dim = 0;        // subspace dimension actually built
  bool breakdown = false;
  double beta = 0.0;  // norm of the seed vector
  int reorthogonalizations = 0;
};

KrylovWorkspace arnoldi(const SparseMatrix& a, const Vector& v, int m);
// Same, reusing the storage of ws.
void arnoldi(const SparseMatrix& a, const Vector& v, int m,
             KrylovWorkspace& ws);

// sum_k w_k phi_{l_k}(gamma_k dt a) v.
Vector phi_combination_action(const PhiCombination& comb,
                              const SparseMatrix& a, double dt,
                              const Vector& v, int m);

// Applies several combinations to one vector with a single Arnoldi
// decomposition. Dense phi matrices are cached when m >= N.
class PhiEvaluator {
 public:
  PhiEvaluator(const SparseMatrix& a, double dt, int m);

  std::vector<Vector> apply(const Vector& v,
                            const std::vector<const PhiCombination*>& combos);

  bool dense() const { return dense_; }
  int last_krylov_dim() const { return ws_.dim; }

 private:
  const std::vector<Matrix>& dense_phis(double gamma, int lmax);

  const SparseMatrix& a_;
  double dt_;
  int m_;
  bool dense_;
  Matrix a_dense_;
  std::map<double, std::vector<Matrix>> cache_;
  KrylovWorkspace ws_;
};

}  // namespace mbsde

#endif  // MARKOVBSDE_EXPMV_HPP_
