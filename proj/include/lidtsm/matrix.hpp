// lidtsm/matrix.hpp

// Copyright 2026  The lidtsm Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lidtsm/error.hpp"

namespace lidtsm {

/// Dense row-major matrix.
template <typename T>
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

  T &operator()(size_t r, size_t c) { return data[r * cols + c]; }
  const T &operator()(size_t r, size_t c) const { return data[r * cols + c]; }

  std::span<T> row(size_t r) { return std::span<T>(data).subspan(r * cols, cols); }
  std::span<const T> row(size_t r) const { return std::span<const T>(data).subspan(r * cols, cols); }

  bool empty() const { return data.empty(); }
  size_t size() const { return data.size(); }
  bool same_shape(const Matrix &o) const { return rows == o.rows && cols == o.cols; }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix &, const Matrix &) = default;
};

}  // namespace lidtsm
