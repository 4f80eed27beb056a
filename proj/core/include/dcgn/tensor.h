// Copyright 2026 The DCGN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DCGN_TENSOR_H_
#define DCGN_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dcgn {

// Dense row-major matrix of doubles.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Nested-list literal, e.g. Tensor{{1, 2}, {3, 4}}. Rows must be equal length.
  Tensor(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const;

  void fill(double v);
  bool all_finite() const;

  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor& operator*=(double s);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);

// a · b. Throws DimensionError if a.cols != b.rows.
Tensor matmul(const Tensor& a, const Tensor& b);
// aᵀ · b.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// a · bᵀ.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Softmax over each row, max-subtracted.
Tensor row_softmax(const Tensor& x);

// Gradient of row_softmax: given y = row_softmax(x) and dL/dy, returns dL/dx.
Tensor row_softmax_backward(const Tensor& y, const Tensor& dy);

enum class Activation { kSigmoid, kRelu, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

double sigmoid(double x);
Tensor activate(const Tensor& x, Activation kind);
// dL/dx from the activation output y = activate(x) and dL/dy. For relu the
// derivative at 0 is taken as 0.
Tensor activate_backward(const Tensor& y, const Tensor& dy, Activation kind);

// Largest relative difference |a-b| / max(|a|, |b|, floor) over all entries.
double max_relative_difference(const Tensor& a, const Tensor& b, double floor = 1e-300);

// Trainable tensor: a value and the accumulated gradient of the loss w.r.t. it.
struct ParamTensor {
  ParamTensor() = default;
  ParamTensor(std::string name, Tensor value)
      : name(std::move(name)),
        value(std::move(value)),
        grad(this->value.rows(), this->value.cols()) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

}  // namespace dcgn

#endif  // DCGN_TENSOR_H_
