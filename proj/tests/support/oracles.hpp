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

// Independent reference implementations used by the tests. Each one is the
// slow, obvious version of something the library does cleverly; none of them
// call into the code under test except for plain data types.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graph.hpp"
#include "tensor.hpp"

namespace oracle {

using pcgl::Matrix;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = u(rng);
  return m;
}

inline std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

/// Dense A + I with both directions of every edge.
inline Matrix dense_a_plus_i(std::size_t n, const std::vector<pcgl::Edge>& edges) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  for (auto [u, v] : edges) a(u, v) = a(v, u) = 1.0;
  return a;
}

inline Matrix dense_normalized_adjacency(std::size_t n, const std::vector<pcgl::Edge>& edges) {
  Matrix a = dense_a_plus_i(n, edges);
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

inline Matrix dense_mean_adjacency(std::size_t n, const std::vector<pcgl::Edge>& edges) {
  Matrix a = dense_a_plus_i(n, edges);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= deg;
  }
  return a;
}

/// Prompt generator with the query matrix Q = v^T u built explicitly.
/// x: N x d, p: k x d, u: length d, v: length k. Returns N x d prompts.
inline Matrix explicit_q_prompts(const Matrix& x, const Matrix& p, const std::vector<double>& u,
                                 const std::vector<double>& v, Matrix* alpha_out = nullptr) {
  const std::size_t k = p.rows(), d = p.cols();
  Matrix q(k, d);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t c = 0; c < d; ++c) q(j, c) = v[j] * u[c];
  Matrix out(x.rows(), d);
  Matrix alpha(x.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<double> z(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < d; ++c) z[j] += q(j, c) * x(i, c);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& e : z) sum += (e = std::exp(e - mx));
    for (std::size_t j = 0; j < k; ++j) alpha(i, j) = z[j] / sum;
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < d; ++c) out(i, c) += alpha(i, j) * p(j, c);
  }
  if (alpha_out) *alpha_out = alpha;
  return out;
}

/// rows[p][q] for q <= p; T = rows.size(). Follows the 1-based textbook form.
inline double brute_ap(const std::vector<std::vector<double>>& rows) {
  const std::size_t t = rows.size();
  double s = 0.0;
  for (std::size_t q = 1; q <= t; ++q) s += rows[t - 1][q - 1];
  return s / static_cast<double>(t);
}

inline double brute_af(const std::vector<std::vector<double>>& rows) {
  const std::size_t t = rows.size();
  double s = 0.0;
  for (std::size_t q = 1; q <= t - 1; ++q) s += rows[t - 1][q - 1] - rows[q - 1][q - 1];
  return s / static_cast<double>(t - 1);
}

/// Between-class scatter over within-class scatter of 2-D points.
inline double fisher_ratio(const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::vector<int>& labels) {
  std::vector<int> classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double between = 0.0, within = 0.0;
  for (int c : classes) {
    double cx = 0.0, cy = 0.0, cnt = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (labels[i] == c) cx += xs[i], cy += ys[i], cnt += 1.0;
    cx /= cnt;
    cy /= cnt;
    between += cnt * ((cx - mx) * (cx - mx) + (cy - my) * (cy - my));
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (labels[i] == c) within += (xs[i] - cx) * (xs[i] - cx) + (ys[i] - cy) * (ys[i] - cy);
  }
  return between / std::max(within, 1e-300);
}

struct EmbeddingCsv {
  std::vector<std::size_t> node_ids;
  std::vector<double> xs, ys;
  std::vector<int> labels;
  std::vector<int> prompted;
};

inline EmbeddingCsv read_embedding_csv(const std::filesystem::path& path) {
  EmbeddingCsv out;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) continue;
    out.node_ids.push_back(std::stoull(cells[0]));
    out.xs.push_back(std::stod(cells[1]));
    out.ys.push_back(std::stod(cells[2]));
    out.labels.push_back(std::stoi(cells[3]));
    out.prompted.push_back(std::stoi(cells[4]));
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("promptcgl_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// One task with `2 * per_class` nodes over classes {0, 1}.
inline pcgl::TaskStream small_stream(std::size_t per_class, std::size_t feature_dim,
                                     std::uint64_t seed, std::size_t blocks = 2,
                                     double shift = 1.0) {
  pcgl::SbmParams p{blocks, per_class, 0.5, 0.1, feature_dim, shift, seed};
  const pcgl::Graph g = pcgl::generate_sbm(p);
  return pcgl::split_into_tasks(g, 2, {}, seed);
}

}  // namespace oracle
