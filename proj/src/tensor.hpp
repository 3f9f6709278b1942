// Copyright 2026 The promptcgl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense/sparse numerics for the fixed GNN computation graph: products,
// activations, the masked cross-entropy loss, Adam and a finite-difference
// gradient checker. Everything is double precision and single-threaded so
// that a fixed seed reproduces results bit for bit.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pcgl {

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Compressed sparse row matrix. Column indices are sorted within each row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets;  // rows + 1 entries
  std::vector<std::size_t> col_indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }
  /// Stored value at (r, c), or 0 when the pair is not stored.
  double at(std::size_t r, std::size_t c) const;
  Matrix to_dense() const;
};

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b)
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// s * x
Matrix spmm(const CsrMatrix& s, const Matrix& x);
// transpose(s) * x
Matrix spmm_transposed(const CsrMatrix& s, const Matrix& x);

Matrix transpose(const Matrix& a);
void add_inplace(Matrix& dst, const Matrix& src);
/// Column-wise concatenation [a | b].
Matrix hconcat(const Matrix& a, const Matrix& b);
/// Splits columns [0, left_cols) and [left_cols, cols).
std::pair<Matrix, Matrix> hsplit(const Matrix& m, std::size_t left_cols);

Matrix relu_forward(const Matrix& x);
/// Gradient of ReLU: dy where x > 0, zero elsewhere.
Matrix relu_backward(const Matrix& x, const Matrix& dy);
/// Numerically stable softmax of every row; -inf entries get probability 0.
Matrix row_softmax(const Matrix& x);

struct LossResult {
  double loss = 0.0;
  Matrix dlogits;
};

/// Mean negative log-likelihood over the rows listed in `mask`. Columns holding
/// -inf (see mask_logits) are excluded from the softmax and receive zero
/// gradient. Rows outside the mask get zero gradient.
LossResult cross_entropy(const Matrix& logits, std::span<const int> labels,
                         std::span<const std::size_t> mask);

struct ParamTensor {
  Matrix value;
  Matrix grad;
  bool frozen = false;

  ParamTensor() = default;
  explicit ParamTensor(Matrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  Matrix m;
  Matrix v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double weight_decay = 0.0;

  AdamState() = default;
  AdamState(const ParamTensor& p, double lr_, double weight_decay_)
      : m(p.value.rows(), p.value.cols()),
        v(p.value.rows(), p.value.cols()),
        lr(lr_),
        weight_decay(weight_decay_) {}
};

/// One Adam step with L2-coupled weight decay (g <- g + wd * theta), bias
/// correction, then clears the gradient. Stepping a frozen parameter is a
/// programming error and throws.
void adam_step(ParamTensor& param, AdamState& state);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t frozen_coords_excluded = 0;
  /// True when every frozen coordinate carried an analytic gradient of exactly 0.
  bool frozen_grads_zero = true;
};

/// `loss(true)` must evaluate the loss and leave analytic gradients in every
/// param's `grad`; `loss(false)` only evaluates. Compares against central
/// differences, relative error |a - n| / max(1, |a|).
GradCheckReport finite_diff_check(const std::function<double(bool)>& loss,
                                  std::span<ParamTensor* const> params, double eps = 1e-5);

/// FNV-1a over the raw bytes of the values; used for bitwise freeze checks.
std::uint64_t hash_values(const Matrix& m, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace pcgl
