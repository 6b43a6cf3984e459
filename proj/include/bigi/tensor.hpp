/*
 * Copyright 2026 the bigi authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "bigi/common.hpp"

namespace bigi {

// std::allocator that default-initializes on resize. Op outputs that every
// kernel fully overwrites skip the value-initialization pass this way.
template <class T>
struct uninit_allocator : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = uninit_allocator<U>;
  };
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    if constexpr (sizeof...(Args) == 0)
      ::new (static_cast<void*>(p)) U;
    else
      ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xn.
// Everything the model touches is rank <= 2, so two dims cover the shapes.
// The (r, c) constructor zero-fills; uninit() leaves the payload untouched
// for outputs a kernel overwrites completely.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double, uninit_allocator<double>> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  static Tensor uninit(int r, int c) {
    Tensor t;
    t.rows = r;
    t.cols = c;
    t.data.resize(static_cast<std::size_t>(r) * c);
    return t;
  }

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }

  std::size_t size() const { return data.size(); }
  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_shape(const Tensor& t, int r, int c, const char* where) {
  if (t.rows != r || t.cols != c)
    throw ConfigError(std::string(where) + ": expected shape " + std::to_string(r) + "x" +
                      std::to_string(c) + ", got " + std::to_string(t.rows) + "x" +
                      std::to_string(t.cols));
}

}  // namespace bigi
