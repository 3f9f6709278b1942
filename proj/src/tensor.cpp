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

#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "error.hpp"

namespace pcgl {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  require(data_.size() == rows * cols, "matrix value count does not match shape");
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  auto begin = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r]);
  auto end = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r + 1]);
  auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_indices.begin())];
}

Matrix CsrMatrix::to_dense() const {
  Matrix d(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t e = row_offsets[r]; e < row_offsets[r + 1]; ++e)
      d(r, col_indices[e]) = values[e];
  return d;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: " + shape_str(a) + " * " + shape_str(b));
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.values().data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.values().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* bk = b.values().data() + k * n;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* ci = c.values().data() + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  Matrix c(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.values().data() + i * inner;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.values().data() + j * inner;
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += ai[k] * bj[k];
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix spmm(const CsrMatrix& s, const Matrix& x) {
  require(s.cols == x.rows(), "spmm: sparse " + std::to_string(s.rows) + "x" +
                                  std::to_string(s.cols) + " * " + shape_str(x));
  Matrix y(s.rows, x.cols());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < s.rows; ++r) {
    double* yr = y.values().data() + r * n;
    for (std::size_t e = s.row_offsets[r]; e < s.row_offsets[r + 1]; ++e) {
      const double w = s.values[e];
      const double* xc = x.values().data() + s.col_indices[e] * n;
      for (std::size_t j = 0; j < n; ++j) yr[j] += w * xc[j];
    }
  }
  return y;
}

Matrix spmm_transposed(const CsrMatrix& s, const Matrix& x) {
  require(s.rows == x.rows(), "spmm_transposed: sparse " + std::to_string(s.rows) + "x" +
                                  std::to_string(s.cols) + "^T * " + shape_str(x));
  Matrix y(s.cols, x.cols());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < s.rows; ++r) {
    const double* xr = x.values().data() + r * n;
    for (std::size_t e = s.row_offsets[r]; e < s.row_offsets[r + 1]; ++e) {
      const double w = s.values[e];
      double* yc = y.values().data() + s.col_indices[e] * n;
      for (std::size_t j = 0; j < n; ++j) yc[j] += w * xr[j];
    }
  }
  return y;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void add_inplace(Matrix& dst, const Matrix& src) {
  require(dst.same_shape(src), "add: " + shape_str(dst) + " + " + shape_str(src));
  auto& d = dst.values();
  const auto& s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "hconcat: " + shape_str(a) + " | " + shape_str(b));
  Matrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), out.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), out.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return c;
}

std::pair<Matrix, Matrix> hsplit(const Matrix& m, std::size_t left_cols) {
  require(left_cols <= m.cols(), "hsplit: column index out of range");
  Matrix l(m.rows(), left_cols), r(m.rows(), m.cols() - left_cols);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(left_cols), l.row(i).begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(left_cols), src.end(), r.row(i).begin());
  }
  return {std::move(l), std::move(r)};
}

Matrix relu_forward(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  const auto& xs = x.values();
  auto& ys = y.values();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = xs[i] > 0.0 ? xs[i] : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& dy) {
  require(x.same_shape(dy), "relu_backward: shape mismatch");
  Matrix dx(x.rows(), x.cols());
  const auto& xs = x.values();
  const auto& ds = dy.values();
  auto& out = dx.values();
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] > 0.0 ? ds[i] : 0.0;
  return dx;
}

Matrix row_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto out = y.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (double& v : out) v /= sum;
  }
  return y;
}

LossResult cross_entropy(const Matrix& logits, std::span<const int> labels,
                         std::span<const std::size_t> mask) {
  if (mask.empty()) fail(ErrorCode::kInvalidArgument, "cross_entropy: empty mask");
  require(labels.size() == logits.rows(), "cross_entropy: label count does not match logits rows");
  LossResult out{0.0, Matrix(logits.rows(), logits.cols())};
  const double inv = 1.0 / static_cast<double>(mask.size());
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  for (std::size_t r : mask) {
    require(r < logits.rows(), "cross_entropy: mask index out of range");
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < logits.cols(),
            "cross_entropy: label outside logit columns");
    auto z = logits.row(r);
    for (double x : z)
      if (std::isnan(x) || x == -kNegInf) fail(ErrorCode::kNumeric, "cross_entropy: non-finite logit");
    require(z[static_cast<std::size_t>(y)] != kNegInf, "cross_entropy: label column is masked");
    std::size_t arg = 0;
    for (std::size_t j = 1; j < z.size(); ++j)
      if (z[j] > z[arg]) arg = j;
    const double mx = z[arg];
    // log-sum-exp as mx + log1p(sum over the non-max terms) keeps the loss
    // resolvable far below machine epsilon for saturated rows.
    double rest = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j)
      if (j != arg) rest += std::exp(z[j] - mx);
    const double lse = mx + std::log1p(rest);
    out.loss += (lse - z[static_cast<std::size_t>(y)]) * inv;
    auto g = out.dlogits.row(r);
    for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - lse) * inv;
    g[static_cast<std::size_t>(y)] -= inv;
  }
  return out;
}

void adam_step(ParamTensor& param, AdamState& state) {
  if (param.frozen) fail(ErrorCode::kState, "adam_step on a frozen parameter");
  require(state.m.same_shape(param.value) && state.v.same_shape(param.value),
          "adam_step: optimizer state shape does not match parameter");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
  auto& w = param.value.values();
  auto& g = param.grad.values();
  auto& m = state.m.values();
  auto& v = state.v.values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = g[i] + state.weight_decay * w[i];
    m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * gi;
    v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * gi * gi;
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    w[i] -= state.lr * mhat / (std::sqrt(vhat) + AdamState::kEpsilon);
  }
  param.zero_grad();
}

GradCheckReport finite_diff_check(const std::function<double(bool)>& loss,
                                  std::span<ParamTensor* const> params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4))
    fail(ErrorCode::kInvalidArgument, "finite_diff_check: eps must lie in [1e-7, 1e-4]");
  for (ParamTensor* p : params) p->zero_grad();
  const double base = loss(true);
  if (!std::isfinite(base)) fail(ErrorCode::kNumeric, "finite_diff_check: non-finite loss");
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (ParamTensor* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ParamTensor& p = *params[pi];
    auto& w = p.value.values();
    const auto& a = analytic[pi].values();
    if (p.frozen) {
      report.frozen_coords_excluded += w.size();
      for (double g : a)
        if (g != 0.0) report.frozen_grads_zero = false;
      continue;
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + eps;
      const double up = loss(false);
      w[i] = orig - eps;
      const double down = loss(false);
      w[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down))
        fail(ErrorCode::kNumeric, "finite_diff_check: non-finite loss");
      const double numeric = (up - down) / (2.0 * eps);
      const double rel = std::abs(a[i] - numeric) / std::max(1.0, std::abs(a[i]));
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.coords_checked;
    }
  }
  return report;
}

std::uint64_t hash_values(const Matrix& m, std::uint64_t seed) {
  std::uint64_t h = seed;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const std::uint64_t shape[2] = {m.rows(), m.cols()};
  mix(shape, sizeof(shape));
  mix(m.values().data(), m.values().size() * sizeof(double));
  return h;
}

}  // namespace pcgl
