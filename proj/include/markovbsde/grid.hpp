// Copyright 2026 The markovbsde Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     https://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#ifndef MARKOVBSDE_GRID_HPP_
#define MARKOVBSDE_GRID_HPP_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace mbsde {

// Strictly increasing node set with 2*N0+1 points. Nodes are addressed by
// 0-based offsets; signed() maps to the centered convention -N0..N0.
class Grid1D {
 public:
  explicit Grid1D(std::vector<double> nodes);

  std::size_t size() const { return nodes_.size(); }
  std::size_t half_count() const { return (nodes_.size() - 1) / 2; }
  double operator[](std::size_t i) const { return nodes_[i]; }
  double at_signed(long k) const;
  long to_signed(std::size_t i) const;
  std::size_t from_signed(long k) const;
  double spacing(std::size_t i) const;  // nodes[i+1] - nodes[i]
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

  // Index of the node nearest to x.
  std::size_t nearest(double x) const;
  // Index of the node equal to x within tol, or throws.
  std::size_t locate(double x, double tol = 1e-9) const;

 private:
  std::vector<double> nodes_;
};

Grid1D uniform_grid(double left, double center, double right, int half_count);
Grid1D tavella_randall_grid(double left, double center, double right,
                            int half_count, double g1, double g2);
Grid1D concat_grids(const Grid1D& a, const Grid1D& b);

void write_grid(std::ostream& os, const Grid1D& grid);
Grid1D read_grid(std::istream& is);

// Tensor product of 1-D grids, flattened lexicographically with the last
// axis varying fastest.
class TensorGrid {
 public:
  explicit TensorGrid(std::vector<Grid1D> axes);

  std::size_t dim() const { return axes_.size(); }
  std::size_t total_size() const { return total_; }
  const Grid1D& axis(std::size_t p) const { return axes_[p]; }
  const std::vector<Grid1D>& axes() const { return axes_; }
  std::size_t stride(std::size_t p) const { return strides_[p]; }

  std::size_t flatten(const std::vector<std::size_t>& multi) const;
  std::vector<std::size_t> unflatten(std::size_t i) const;
  // Coordinates of flat node i.
  std::vector<double> point(std::size_t i) const;
  void point(std::size_t i, double* out) const;

 private:
  std::vector<Grid1D> axes_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 1;
};

}  // namespace mbsde

#endif  // MARKOVBSDE_GRID_HPP_
