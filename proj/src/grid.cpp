// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "markovbsde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "markovbsde/common.hpp"

namespace mbsde {

Grid1D::Grid1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 3 || nodes_.size() % 2 == 0) {
    throw ArgumentError("grid needs an odd number (>= 3) of nodes, got " +
                        std::to_string(nodes_.size()));
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) throw ArgumentError("non-finite grid node");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1])) {
      throw ArgumentError("grid nodes must be strictly increasing at index " +
                          std::to_string(i));
    }
  }
}

double Grid1D::at_signed(long k) const { return nodes_[from_signed(k)]; }

long Grid1D::to_signed(std::size_t i) const {
  if (i >= nodes_.size()) throw ArgumentError("grid index out of range");
  return static_cast<long>(i) - static_cast<long>(half_count());
}

std::size_t Grid1D::from_signed(long k) const {
  const long n0 = static_cast<long>(half_count());
  if (k < -n0 || k > n0) throw ArgumentError("signed grid index out of range");
  return static_cast<std::size_t>(k + n0);
}

double Grid1D::spacing(std::size_t i) const {
  if (i + 1 >= nodes_.size()) throw ArgumentError("spacing index out of range");
  return nodes_[i + 1] - nodes_[i];
}

std::size_t Grid1D::nearest(double x) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
  if (it == nodes_.begin()) return 0;
  if (it == nodes_.end()) return nodes_.size() - 1;
  std::size_t hi = static_cast<std::size_t>(it - nodes_.begin());
  return (x - nodes_[hi - 1] <= nodes_[hi] - x) ? hi - 1 : hi;
}

std::size_t Grid1D::locate(double x, double tol) const {
  std::size_t i = nearest(x);
  if (std::abs(nodes_[i] - x) > tol * std::max(1.0, std::abs(x))) {
    std::ostringstream msg;
    msg << "point " << x << " is not a grid node (nearest " << nodes_[i] << ")";
    throw ArgumentError(msg.str());
  }
  return i;
}

Grid1D uniform_grid(double left, double center, double right, int half_count) {
  if (!(left < center && center < right)) {
    throw ArgumentError("uniform grid requires left < center < right");
  }
  if (half_count < 1) throw ArgumentError("half_count must be >= 1");
  const int n0 = half_count;
  std::vector<double> x(2 * n0 + 1);
  const double hl = (center - left) / n0;
  const double hr = (right - center) / n0;
  for (int k = -n0; k <= n0; ++k) {
    double v;
    if (k == -n0) {
      v = left;
    } else if (k == n0) {
      v = right;
    } else if (k <= 0) {
      v = center + hl * k;
    } else {
      v = center + hr * k;
    }
    x[k + n0] = v;
  }
  return Grid1D(std::move(x));
}

Grid1D tavella_randall_grid(double left, double center, double right,
                            int half_count, double g1, double g2) {
  if (!(left < center && center < right)) {
    throw ArgumentError("Tavella-Randall grid requires left < center < right");
  }
  if (!(g1 > 0.0) || !(g2 > 0.0)) {
    throw ArgumentError("Tavella-Randall stretch parameters must be positive");
  }
  if (half_count < 1) throw ArgumentError("half_count must be >= 1");
  const int n0 = half_count;
  const double al = std::asinh((center - left) / g1);
  const double ar = std::asinh((right - center) / g2);
  std::vector<double> x(2 * n0 + 1);
  for (int k = -n0; k <= n0; ++k) {
    double v;
    if (k == -n0) {
      v = left;
    } else if (k == n0) {
      v = right;
    } else if (k <= 0) {
      v = center + g1 * std::sinh(al * k / n0);
    } else {
      v = center + g2 * std::sinh(ar * k / n0);
    }
    x[k + n0] = v;
  }
  return Grid1D(std::move(x));
}

Grid1D concat_grids(const Grid1D& a, const Grid1D& b) {
  if (a.back() != b.front()) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "cannot concatenate grids: junction "
        << a.back() << " vs " << b.front();
    throw ArgumentError(msg.str());
  }
  std::vector<double> x = a.nodes();
  x.insert(x.end(), b.nodes().begin() + 1, b.nodes().end());
  return Grid1D(std::move(x));
}

void write_grid(std::ostream& os, const Grid1D& grid) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double x : grid.nodes()) os << x << '\n';
}

Grid1D read_grid(std::istream& is) {
  std::vector<double> x;
  double v;
  while (is >> v) x.push_back(v);
  if (!is.eof()) throw ArgumentError("malformed grid text");
  return Grid1D(std::move(x));
}

TensorGrid::TensorGrid(std::vector<Grid1D> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw ArgumentError("tensor grid needs at least one axis");
  strides_.assign(axes_.size(), 1);
  for (std::size_t p = axes_.size(); p-- > 0;) {
    strides_[p] = total_;
    total_ *= axes_[p].size();
  }
}

std::size_t TensorGrid::flatten(const std::vector<std::size_t>& multi) const {
  if (multi.size() != axes_.size()) {
    throw ArgumentError("multi-index has wrong dimension");
  }
  std::size_t i = 0;
  for (std::size_t p = 0; p < axes_.size(); ++p) {
    if (multi[p] >= axes_[p].size()) {
      throw ArgumentError("multi-index out of range on axis " +
                          std::to_string(p));
    }
    i += multi[p] * strides_[p];
  }
  return i;
}

std::vector<std::size_t> TensorGrid::unflatten(std::size_t i) const {
  if (i >= total_) throw ArgumentError("flat index out of range");
  std::vector<std::size_t> multi(axes_.size());
  for (std::size_t p = 0; p < axes_.size(); ++p) {
    multi[p] = i / strides_[p];
    i %= strides_[p];
  }
  return multi;
}

std::vector<double> TensorGrid::point(std::size_t i) const {
  std::vector<double> x(axes_.size());
  point(i, x.data());
  return x;
}

void TensorGrid::point(std::size_t i, double* out) const {
  if (i >= total_) throw ArgumentError("flat index out of range");
  for (std::size_t p = 0; p < axes_.size(); ++p) {
    out[p] = axes_[p][i / strides_[p]];
    i %= strides_[p];
  }
}

}  // namespace mbsde
