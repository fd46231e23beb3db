// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/expmv.hpp"

#include <algorithm>
#include <cmath>

namespace mbsde {
namespace {

// Pade approximant of order 2k+1 terms; returns (U, V) with exp ~ (V-U)^-1 (V+U).
void pade_uv(const Matrix& a, int order, Matrix& u, Matrix& v) {
  static const double b3[] = {120.0, 60.0, 12.0, 1.0};
  static const double b5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static const double b7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                              25200.0,    1512.0,    56.0,      1.0};
  static const double b9[] = {17643225600.0, 8821612800.0, 2075673600.0,
                              302702400.0,   30270240.0,   2162160.0,
                              110880.0,      3960.0,       90.0,
                              1.0};
  static const double b13[] = {64764752532480000.0, 32382376266240000.0,
                               7771770303897600.0,  1187353796428800.0,
                               129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,
                               1323241920.0,        40840800.0,
                               960960.0,            16380.0,
                               182.0,               1.0};
  const Eigen::Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  if (order == 13) {
    const double* b = b13;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    Matrix inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
    u = a * (a6 * inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
    v = a6 * inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    return;
  }
  const double* b = order == 3 ? b3 : order == 5 ? b5 : order == 7 ? b7 : b9;
  Matrix upow = id;
  Matrix usum = b[1] * id;
  Matrix vsum = b[0] * id;
  for (int k = 1; 2 * k <= order; ++k) {
    upow = upow * a2;
    usum += b[2 * k + 1] * upow;
    vsum += b[2 * k] * upow;
  }
  u = a * usum;
  v = vsum;
}

}  // namespace

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw ArgumentError("expm needs a square matrix");
  if (!a.allFinite()) throw NumericError("expm: non-finite matrix entry");
  if (a.rows() == 0) return a;
  static const double theta[] = {1.495585217958292e-2, 2.539398330063230e-1,
                                 9.504178996162932e-1, 2.097847961257068e0,
                                 5.371920351148152e0};
  static const int orders[] = {3, 5, 7, 9, 13};
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  Matrix u, v;
  for (int k = 0; k < 4; ++k) {
    if (norm1 <= theta[k]) {
      pade_uv(a, orders[k], u, v);
      return (v - u).partialPivLu().solve(v + u);
    }
  }
  int s = 0;
  if (norm1 > theta[4]) {
    s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta[4]))));
  }
  const Matrix as = a / std::ldexp(1.0, s);
  pade_uv(as, 13, u, v);
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

std::vector<Matrix> phi_dense_all(int l, const Matrix& a) {
  if (l < 0) throw ArgumentError("phi index must be >= 0");
  if (a.rows() != a.cols()) throw ArgumentError("phi needs a square matrix");
  const Eigen::Index n = a.rows();
  if (l == 0) return {expm(a)};
  Matrix aug = Matrix::Zero((l + 1) * n, (l + 1) * n);
  aug.topLeftCorner(n, n) = a;
  for (int k = 0; k < l; ++k) {
    aug.block(k * n, (k + 1) * n, n, n).setIdentity();
  }
  const Matrix e = expm(aug);
  std::vector<Matrix> out;
  out.reserve(l + 1);
  for (int k = 0; k <= l; ++k) out.push_back(e.block(0, k * n, n, n));
  return out;
}

Matrix phi_dense(int l, const Matrix& a) { return phi_dense_all(l, a).back(); }

void arnoldi(const SparseMatrix& a, const Vector& v, int m,
             KrylovWorkspace& ws) {
  if (m < 1) throw ArgumentError("Krylov dimension must be >= 1");
  if (v.size() != a.rows() || a.rows() != a.cols()) {
    throw ArgumentError("Arnoldi: dimension mismatch");
  }
  const double beta = v.norm();
  if (!(beta > 0.0)) throw ArgumentError("Arnoldi seed vector is zero");
  if (!std::isfinite(beta)) throw NumericError("Arnoldi: non-finite seed");
  const Eigen::Index n = a.rows();
  if (ws.basis.rows() != n || ws.basis.cols() != m + 1) {
    ws.basis.resize(n, m + 1);
  }
  ws.hessenberg.setZero(m + 1, m);
  ws.beta = beta;
  ws.breakdown = false;
  ws.reorthogonalizations = 0;
  ws.dim = m;
  ws.basis.col(0) = v / beta;
  Vector w(n);
  Vector h, c;
  for (int j = 0; j < m; ++j) {
    w.noalias() = a * ws.basis.col(j);
    const double wnorm = w.norm();
    if (!std::isfinite(wnorm)) throw NumericError("Arnoldi: non-finite matrix");
    auto vj = ws.basis.leftCols(j + 1);
    h.noalias() = vj.transpose() * w;
    w.noalias() -= vj * h;
    c.noalias() = vj.transpose() * w;
    const double wn = w.norm();
    if (c.cwiseAbs().maxCoeff() > 1e-8 * std::max(wn, 1e-300)) {
      w.noalias() -= vj * c;
      h += c;
      ++ws.reorthogonalizations;
    }
    ws.hessenberg.col(j).head(j + 1) = h;
    const double hn = w.norm();
    ws.hessenberg(j + 1, j) = hn;
    if (hn <= 1e-14 * wnorm) {
      ws.dim = j + 1;
      ws.breakdown = true;
      return;
    }
    ws.basis.col(j + 1) = w / hn;
  }
}

KrylovWorkspace arnoldi(const SparseMatrix& a, const Vector& v, int m) {
  KrylovWorkspace ws;
  arnoldi(a, v, m, ws);
  return ws;
}

PhiEvaluator::PhiEvaluator(const SparseMatrix& a, double dt, int m)
    : a_(a), dt_(dt), m_(m) {
  if (m < 1) throw ArgumentError("Krylov dimension must be >= 1");
  if (!(dt > 0.0)) throw ArgumentError("time step must be positive");
  dense_ = m >= a.rows();
  if (dense_) a_dense_ = Matrix(a);
}

const std::vector<Matrix>& PhiEvaluator::dense_phis(double gamma, int lmax) {
  auto it = cache_.find(gamma);
  if (it != cache_.end() &&
      static_cast<int>(it->second.size()) > lmax) {
    return it->second;
  }
  std::vector<Matrix> phis = phi_dense_all(std::max(lmax, 1), gamma * dt_ * a_dense_);
  for (const Matrix& p : phis) {
    if (!p.allFinite()) throw NumericError("phi evaluation produced non-finite values");
  }
  return cache_[gamma] = std::move(phis);
}

std::vector<Vector> PhiEvaluator::apply(
    const Vector& v, const std::vector<const PhiCombination*>& combos) {
  const Eigen::Index n = a_.rows();
  if (v.size() != n) throw ArgumentError("phi action: dimension mismatch");
  std::vector<Vector> out(combos.size(), Vector::Zero(n));
  if (!v.allFinite()) throw NumericError("phi action: non-finite input vector");
  if ((v.array() == 0.0).all()) return out;

  std::map<double, int> lmax;
  for (const PhiCombination* c : combos) {
    for (const PhiTerm& t : c->terms) {
      if (t.l < 0) throw ArgumentError("phi index must be >= 0");
      if (t.gamma < 0.0) throw ArgumentError("node scale must be >= 0");
      if (t.gamma == 0.0) continue;
      auto [it, fresh] = lmax.emplace(t.gamma, t.l);
      if (!fresh) it->second = std::max(it->second, t.l);
    }
  }

  if (dense_) {
    for (std::size_t k = 0; k < combos.size(); ++k) {
      for (const PhiTerm& t : combos[k]->terms) {
        if (t.gamma == 0.0) {
          out[k] += (t.weight / factorial(t.l)) * v;
        } else {
          out[k].noalias() += t.weight * (dense_phis(t.gamma, lmax[t.gamma])[t.l] * v);
        }
      }
    }
    return out;
  }

  arnoldi(a_, v, m_, ws_);
  const int kdim = ws_.dim;
  const Matrix hk = ws_.hessenberg.topLeftCorner(kdim, kdim);
  std::vector<Vector> small(combos.size(), Vector::Zero(kdim));
  for (const auto& [gamma, lm] : lmax) {
    const int p = std::max(lm, 1);
    Matrix aug = Matrix::Zero(kdim + p, kdim + p);
    aug.topLeftCorner(kdim, kdim) = (gamma * dt_) * hk;
    aug(0, kdim) = 1.0;
    for (int i = 0; i + 1 < p; ++i) aug(kdim + i, kdim + i + 1) = 1.0;
    const Matrix e = expm(aug);
    for (std::size_t k = 0; k < combos.size(); ++k) {
      for (const PhiTerm& t : combos[k]->terms) {
        if (t.gamma != gamma) continue;
        const Eigen::Index col = t.l == 0 ? 0 : kdim + t.l - 1;
        small[k] += t.weight * e.col(col).head(kdim);
      }
    }
  }
  for (std::size_t k = 0; k < combos.size(); ++k) {
    for (const PhiTerm& t : combos[k]->terms) {
      if (t.gamma == 0.0) small[k](0) += t.weight / factorial(t.l);
    }
    out[k].noalias() = ws_.beta * (ws_.basis.leftCols(kdim) * small[k]);
    if (!out[k].allFinite()) {
      throw NumericError("phi action produced non-finite values");
    }
  }
  return out;
}

Vector phi_combination_action(const PhiCombination& comb,
                              const SparseMatrix& a, double dt,
                              const Vector& v, int m) {
  PhiEvaluator ev(a, dt, m);
  return ev.apply(v, {&comb}).front();
}

}  // namespace mbsde
