// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/generator.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace mbsde {
namespace {

using Triplet = Eigen::Triplet<double>;

struct Stencil {
  double lo = 0.0;
  double mid = 0.0;
  double hi = 0.0;
};

Stencil d1_stencil(const Grid1D& g, std::size_t k) {
  const double dm = g[k] - g[k - 1];
  const double dp = g[k + 1] - g[k];
  return {-dp / (dm * (dm + dp)), (dp - dm) / (dp * dm), dm / (dp * (dm + dp))};
}

Stencil d2_stencil(const Grid1D& g, std::size_t k) {
  const double dm = g[k] - g[k - 1];
  const double dp = g[k + 1] - g[k];
  return {2.0 / (dm * (dm + dp)), -2.0 / (dp * dm), 2.0 / (dp * (dm + dp))};
}

bool interior(const Grid1D& g, std::size_t k) {
  return k > 0 && k + 1 < g.size();
}

SparseMatrix build_1d(const Grid1D& grid, Stencil (*stencil)(const Grid1D&,
                                                            std::size_t)) {
  const std::size_t n = grid.size();
  std::vector<Triplet> t;
  t.reserve(3 * n);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    Stencil s = stencil(grid, k);
    t.emplace_back(k, k - 1, s.lo);
    t.emplace_back(k, k, s.mid);
    t.emplace_back(k, k + 1, s.hi);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// 1-D operator along axis p placed into the flattened space.
SparseMatrix place(const TensorGrid& grid, std::size_t p,
                   Stencil (*stencil)(const Grid1D&, std::size_t)) {
  const std::size_t n = grid.total_size();
  const std::size_t stride = grid.stride(p);
  const Grid1D& ax = grid.axis(p);
  std::vector<Triplet> t;
  t.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = (i / stride) % ax.size();
    if (!interior(ax, k)) continue;
    Stencil s = stencil(ax, k);
    t.emplace_back(i, i - stride, s.lo);
    t.emplace_back(i, i, s.mid);
    t.emplace_back(i, i + stride, s.hi);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

SparseMatrix build_d1(const Grid1D& grid) { return build_1d(grid, d1_stencil); }

SparseMatrix build_d2(const Grid1D& grid) { return build_1d(grid, d2_stencil); }

DifferenceSet build_differences(const TensorGrid& grid, bool with_cross) {
  DifferenceSet ds{grid, {}, {}, {}};
  const std::size_t d = grid.dim();
  for (std::size_t p = 0; p < d; ++p) {
    ds.d1.push_back(place(grid, p, d1_stencil));
    ds.d2.push_back(place(grid, p, d2_stencil));
  }
  if (with_cross) {
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        SparseMatrix c = ds.d1[p] * ds.d1[q];
        c.makeCompressed();
        ds.cross.emplace(std::make_pair(static_cast<int>(p),
                                        static_cast<int>(q)),
                         std::move(c));
      }
    }
  }
  return ds;
}

Generator build_generator_1d(const Grid1D& grid, const ScalarFn& mu,
                             const ScalarFn& sigma) {
  return build_generator_nd(
      TensorGrid({grid}),
      [&mu](const Vector& x) { return Vector::Constant(1, mu(x[0])); },
      [&sigma](const Vector& x) { return Matrix::Constant(1, 1, sigma(x[0])); });
}

Generator build_generator_nd(const TensorGrid& grid, const DriftFn& drift,
                             const DiffusionFn& diffusion) {
  const std::size_t n = grid.total_size();
  const std::size_t d = grid.dim();
  Generator gen{SparseMatrix(), build_differences(grid, d > 1), Matrix(),
                Matrix()};
  gen.drift_at_nodes.resize(n, d);
  gen.variance_at_nodes.resize(n, d);

  std::vector<Triplet> t;
  t.reserve(n * (3 * d + 9 * d * (d - 1) / 2));
  std::vector<std::size_t> k(d);
  Vector x(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rem = i;
    for (std::size_t p = 0; p < d; ++p) {
      k[p] = rem / grid.stride(p);
      rem %= grid.stride(p);
      x[p] = grid.axis(p)[k[p]];
    }
    const Vector mu = drift(x);
    const Matrix sig = diffusion(x);
    if (static_cast<std::size_t>(mu.size()) != d ||
        static_cast<std::size_t>(sig.rows()) != d) {
      throw ArgumentError("coefficient dimension does not match grid");
    }
    const Matrix a = sig * sig.transpose();
    gen.drift_at_nodes.row(i) = mu.transpose();
    gen.variance_at_nodes.row(i) = a.diagonal().transpose();

    for (std::size_t p = 0; p < d; ++p) {
      const Grid1D& ax = grid.axis(p);
      if (!interior(ax, k[p])) continue;
      const std::size_t s = grid.stride(p);
      const Stencil s1 = d1_stencil(ax, k[p]);
      const Stencil s2 = d2_stencil(ax, k[p]);
      const double m = mu[p];
      const double h = 0.5 * a(p, p);
      t.emplace_back(i, i - s, m * s1.lo + h * s2.lo);
      t.emplace_back(i, i, m * s1.mid + h * s2.mid);
      t.emplace_back(i, i + s, m * s1.hi + h * s2.hi);
    }
    for (std::size_t p = 0; p < d; ++p) {
      if (!interior(grid.axis(p), k[p])) continue;
      for (std::size_t q = p + 1; q < d; ++q) {
        if (!interior(grid.axis(q), k[q]) || a(p, q) == 0.0) continue;
        const Stencil sp = d1_stencil(grid.axis(p), k[p]);
        const Stencil sq = d1_stencil(grid.axis(q), k[q]);
        const double wp[3] = {sp.lo, sp.mid, sp.hi};
        const double wq[3] = {sq.lo, sq.mid, sq.hi};
        const std::size_t stp = grid.stride(p);
        const std::size_t stq = grid.stride(q);
        for (int u = 0; u < 3; ++u) {
          for (int v = 0; v < 3; ++v) {
            const std::size_t col = i + (u - 1) * static_cast<long>(stp) +
                                    (v - 1) * static_cast<long>(stq);
            t.emplace_back(i, col, a(p, q) * wp[u] * wq[v]);
          }
        }
      }
    }
  }
  gen.q.resize(n, n);
  gen.q.setFromTriplets(t.begin(), t.end());
  gen.q.makeCompressed();
  return gen;
}

ValidityReport check_validity(const SparseMatrix& q, double tol,
                              double row_tol) {
  ValidityReport rep;
  for (Eigen::Index r = 0; r < q.outerSize(); ++r) {
    double sum = 0.0;
    double maxabs = 0.0;
    for (SparseMatrix::InnerIterator it(q, r); it; ++it) {
      sum += it.value();
      maxabs = std::max(maxabs, std::abs(it.value()));
      if (it.col() != r && it.value() < -tol) {
        rep.violations.push_back({static_cast<std::size_t>(r),
                                  static_cast<std::size_t>(it.col()),
                                  it.value(), "negative_offdiagonal"});
      }
    }
    if (std::abs(sum) > row_tol * std::max(maxabs, 1.0)) {
      rep.violations.push_back({static_cast<std::size_t>(r),
                                static_cast<std::size_t>(r), sum, "row_sum"});
    }
  }
  rep.valid = rep.violations.empty();
  return rep;
}

ValidityReport check_validity(const Generator& gen, double tol,
                              double row_tol) {
  ValidityReport rep = check_validity(gen.q, tol, row_tol);
  if (gen.grid().dim() == 1 && gen.drift_at_nodes.rows() > 0) {
    const Grid1D& g = gen.grid().axis(0);
    rep.step_condition_checked = true;
    double max_dx = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      max_dx = std::max(max_dx, g.spacing(i));
    }
    double bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < gen.drift_at_nodes.rows(); ++i) {
      const double m = gen.drift_at_nodes(i, 0);
      if (m != 0.0) {
        bound = std::min(bound, gen.variance_at_nodes(i, 0) / std::abs(m));
      }
    }
    rep.max_spacing = max_dx;
    rep.step_bound = bound;
    rep.step_condition_holds = max_dx <= bound;
  }
  return rep;
}

bool check_structural_condition(const Generator& gen,
                                std::vector<Violation>* offending) {
  bool ok = true;
  const auto report = [&](std::size_t r, std::size_t c, double v,
                          const char* kind) {
    ok = false;
    if (offending) offending->push_back({r, c, v, kind});
  };
  for (const SparseMatrix& d1 : gen.differences.d1) {
    for (Eigen::Index r = 0; r < d1.outerSize(); ++r) {
      double sum = 0.0;
      double maxabs = 0.0;
      for (SparseMatrix::InnerIterator it(d1, r); it; ++it) {
        sum += it.value();
        maxabs = std::max(maxabs, std::abs(it.value()));
        if (it.value() != 0.0 && gen.q.coeff(r, it.col()) == 0.0) {
          report(r, it.col(), it.value(), "sparsity");
        }
      }
      if (std::abs(sum) > 1e-12 * std::max(maxabs, 1.0)) {
        report(r, r, sum, "d1_row_sum");
      }
    }
  }
  return ok;
}

void write_coordinate(std::ostream& os, const SparseMatrix& m) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace mbsde
