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

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "error.hpp"
#include "graph.hpp"
#include "support/oracles.hpp"
#include "tensor.hpp"

using pcgl::Matrix;

TEST_CASE("matmul variants agree with the dense oracle") {
  std::mt19937_64 rng(7);
  const Matrix a = oracle::random_matrix(5, 4, rng);
  const Matrix b = oracle::random_matrix(4, 3, rng);
  CHECK(oracle::max_abs_diff(pcgl::matmul(a, b), oracle::dense_matmul(a, b)) < 1e-12);
  CHECK(oracle::max_abs_diff(pcgl::matmul_tn(pcgl::transpose(a), b), oracle::dense_matmul(a, b)) < 1e-12);
  CHECK(oracle::max_abs_diff(pcgl::matmul_nt(a, pcgl::transpose(b)), oracle::dense_matmul(a, b)) < 1e-12);
  CHECK_THROWS_AS(pcgl::matmul(a, a), pcgl::Error);
}

TEST_CASE("spmm on identity and averaging operators") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(3, 2, rng);
  const pcgl::CsrMatrix eye = pcgl::normalize_adjacency(3, {});
  CHECK(pcgl::spmm(eye, x) == x);

  const std::vector<pcgl::Edge> one{{0, 1}};
  const pcgl::CsrMatrix half = pcgl::normalize_adjacency(2, one);
  const Matrix x2 = oracle::random_matrix(2, 3, rng);
  const Matrix y = pcgl::spmm(half, x2);
  for (std::size_t c = 0; c < 3; ++c) {
    const double mean = 0.5 * (x2(0, c) + x2(1, c));
    CHECK(y(0, c) == doctest::Approx(mean).epsilon(1e-15));
    CHECK(y(1, c) == doctest::Approx(mean).epsilon(1e-15));
  }
}

TEST_CASE("spmm and its transpose match dense expansion on random sparse graphs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 8 + seed % 40;
    std::vector<pcgl::Edge> edges;
    std::bernoulli_distribution coin(0.2);
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        if (coin(rng)) edges.emplace_back(i, j);
    const pcgl::CsrMatrix s = pcgl::mean_adjacency(n, edges);  // not symmetric
    const Matrix x = oracle::random_matrix(n, 3, rng);
    const Matrix dense = oracle::dense_mean_adjacency(n, edges);
    CHECK(oracle::max_abs_diff(pcgl::spmm(s, x), oracle::dense_matmul(dense, x)) < 1e-12);
    CHECK(oracle::max_abs_diff(pcgl::spmm_transposed(s, x),
                               oracle::dense_matmul(pcgl::transpose(dense), x)) < 1e-12);
    CHECK(oracle::max_abs_diff(s.to_dense(), dense) < 1e-12);
  }
}

TEST_CASE("relu and softmax") {
  const Matrix x(1, 2, {-1.0, 2.0});
  const Matrix dy(1, 2, {5.0, 5.0});
  CHECK(pcgl::relu_backward(x, dy) == Matrix(1, 2, {0.0, 5.0}));
  CHECK(pcgl::relu_forward(x) == Matrix(1, 2, {0.0, 2.0}));

  const Matrix zero(1, 4, 0.0);
  const Matrix flat = pcgl::row_softmax(zero);
  for (double p : flat.values()) CHECK(p == doctest::Approx(0.25));

  const Matrix big = pcgl::row_softmax(Matrix(1, 2, {1000.0, 0.0}));
  CHECK(big.all_finite());
  CHECK(big(0, 0) == doctest::Approx(1.0));
  CHECK(big(0, 1) < 1e-300);

  std::mt19937_64 rng(3);
  const Matrix r = pcgl::row_softmax(oracle::random_matrix(10, 6, rng, -30, 30));
  for (std::size_t i = 0; i < r.rows(); ++i) {
    double s = 0.0;
    for (double p : r.row(i)) {
      CHECK(p > 0.0);
      s += p;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("cross entropy values") {
  const std::vector<int> labels{0};
  const std::vector<std::size_t> mask{0};
  const auto uniform = pcgl::cross_entropy(Matrix(1, 2, 0.0), labels, mask);
  CHECK(uniform.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const auto sep = pcgl::cross_entropy(Matrix(1, 2, {50.0, 0.0}), labels, mask);
  CHECK(sep.loss < 1e-20);

  CHECK_THROWS_AS(pcgl::cross_entropy(Matrix(1, 2, 0.0), labels, std::vector<std::size_t>{}), pcgl::Error);
}

TEST_CASE("cross entropy ignores masked columns and rows outside the mask") {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::vector<int> labels{2, 3};
  const std::vector<std::size_t> mask{0, 1};
  Matrix logits(2, 4, {9.0, 8.0, 1.0, 2.0, 0.5, -1.0, 0.3, 0.1});
  Matrix masked = logits;
  for (std::size_t i = 0; i < 2; ++i) masked(i, 0) = masked(i, 1) = -kInf;
  const auto a = pcgl::cross_entropy(masked, labels, mask);
  masked(0, 0) += 100.0;  // still -inf
  const auto b = pcgl::cross_entropy(masked, labels, mask);
  CHECK(a.loss == b.loss);
  CHECK(a.dlogits(0, 0) == 0.0);
  CHECK(a.dlogits(1, 1) == 0.0);

  const auto partial = pcgl::cross_entropy(logits, labels, std::vector<std::size_t>{1});
  for (double g : partial.dlogits.row(0)) CHECK(g == 0.0);
}

TEST_CASE("cross entropy gradient matches central differences") {
  std::mt19937_64 rng(11);
  pcgl::ParamTensor logits(oracle::random_matrix(5, 3, rng, -2, 2));
  const std::vector<int> labels{0, 2, 1, 1, 0};
  const std::vector<std::size_t> mask{0, 1, 3, 4};
  auto f = [&](bool with_grad) {
    auto r = pcgl::cross_entropy(logits.value, labels, mask);
    if (with_grad) logits.grad = r.dlogits;
    return r.loss;
  };
  pcgl::ParamTensor* params[] = {&logits};
  const auto report = pcgl::finite_diff_check(f, params);
  CHECK(report.coords_checked == 15);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("adam step") {
  SUBCASE("zero gradient and no decay leave the value alone") {
    pcgl::ParamTensor p(Matrix(1, 3, {1.0, -2.0, 3.0}));
    pcgl::AdamState s(p, 0.1, 0.0);
    const Matrix before = p.value;
    pcgl::adam_step(p, s);
    CHECK(p.value == before);
  }
  SUBCASE("lr zero leaves the value bitwise unchanged") {
    pcgl::ParamTensor p(Matrix(1, 2, {0.7, -0.3}));
    p.grad = Matrix(1, 2, {1.0, 2.0});
    pcgl::AdamState s(p, 0.0, 5e-4);
    const Matrix before = p.value;
    pcgl::adam_step(p, s);
    CHECK(std::memcmp(before.values().data(), p.value.values().data(), 2 * sizeof(double)) == 0);
    CHECK(p.grad == Matrix(1, 2, 0.0));
  }
  SUBCASE("quadratic converges") {
    pcgl::ParamTensor w(Matrix(1, 1, 3.0));
    pcgl::AdamState s(w, 0.1, 0.0);
    for (int i = 0; i < 500; ++i) {
      w.grad(0, 0) = 2.0 * w.value(0, 0);
      pcgl::adam_step(w, s);
    }
    CHECK(std::abs(w.value(0, 0)) < 1e-3);
  }
  SUBCASE("first step matches the closed form") {
    // Bias-corrected first step moves every coordinate by lr * sign(g).
    pcgl::ParamTensor w(Matrix(1, 2, {1.0, 1.0}));
    w.grad = Matrix(1, 2, {0.5, -4.0});
    pcgl::AdamState s(w, 0.01, 0.1);
    pcgl::adam_step(w, s);
    const double g0 = 0.5 + 0.1, g1 = -4.0 + 0.1;
    CHECK(w.value(0, 0) == doctest::Approx(1.0 - 0.01 * g0 / (std::abs(g0) + 1e-8)).epsilon(1e-12));
    CHECK(w.value(0, 1) == doctest::Approx(1.0 - 0.01 * g1 / (std::abs(g1) + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("identical inputs give bitwise identical updates") {
    std::mt19937_64 r1(5), r2(5);
    pcgl::ParamTensor a(oracle::random_matrix(3, 3, r1)), b(oracle::random_matrix(3, 3, r2));
    pcgl::AdamState sa(a, 1e-2, 5e-4), sb(b, 1e-2, 5e-4);
    for (int i = 0; i < 10; ++i) {
      a.grad = a.value;
      b.grad = b.value;
      pcgl::adam_step(a, sa);
      pcgl::adam_step(b, sb);
    }
    CHECK(a.value == b.value);
  }
  SUBCASE("frozen parameters are rejected") {
    pcgl::ParamTensor p(Matrix(1, 1, 1.0));
    p.frozen = true;
    pcgl::AdamState s(p, 0.1, 0.0);
    CHECK_THROWS_AS(pcgl::adam_step(p, s), pcgl::Error);
  }
}

TEST_CASE("finite difference checker") {
  pcgl::ParamTensor w(Matrix(1, 1, 3.0));
  auto f = [&](bool with_grad) {
    const double x = w.value(0, 0);
    if (with_grad) w.grad(0, 0) = 2.0 * x;
    return x * x;
  };
  pcgl::ParamTensor* params[] = {&w};
  CHECK(pcgl::finite_diff_check(f, params).max_rel_error < 1e-9);
  CHECK_THROWS_AS(pcgl::finite_diff_check(f, params, 1e-3), pcgl::Error);

  pcgl::ParamTensor frozen(Matrix(1, 2, 1.0));
  frozen.frozen = true;
  pcgl::ParamTensor* both[] = {&w, &frozen};
  const auto report = pcgl::finite_diff_check(f, both);
  CHECK(report.frozen_coords_excluded == 2);
  CHECK(report.frozen_grads_zero);
  CHECK(report.coords_checked == 1);

  auto nan_loss = [&](bool) { return std::nan(""); };
  CHECK_THROWS_AS(pcgl::finite_diff_check(nan_loss, params), pcgl::Error);
}

TEST_CASE("hash changes with any bit") {
  Matrix a(2, 2, 1.0);
  Matrix b = a;
  CHECK(pcgl::hash_values(a) == pcgl::hash_values(b));
  b(1, 1) = std::nextafter(1.0, 2.0);
  CHECK(pcgl::hash_values(a) != pcgl::hash_values(b));
  CHECK(pcgl::hash_values(Matrix(1, 4, 1.0)) != pcgl::hash_values(a));
}
