#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vmreg/errors.hpp"

namespace vmreg {

/// Dense row-major matrix of doubles. Rank-2 covers everything the library
/// computes; a row vector is (1, c), a scalar is (1, 1).
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> vals) : rows(r), cols(c), v(std::move(vals)) {
    if (v.size() != static_cast<std::size_t>(r) * c) {
      throw ShapeMismatch("Tensor: value count does not match extents");
    }
  }

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double x) {
    for (double& e : v) e = x;
  }

  bool all_finite() const {
    for (double e : v)
      if (!std::isfinite(e)) return false;
    return true;
  }
};

}  // namespace vmreg
