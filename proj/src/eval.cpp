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

#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "jsonio.hpp"
#include "textio.hpp"

namespace pcgl {

PerformanceMatrix::PerformanceMatrix(std::size_t num_tasks) {
  rows_.resize(num_tasks);
  set_.resize(num_tasks);
  for (std::size_t p = 0; p < num_tasks; ++p) {
    rows_[p].assign(p + 1, 0.0);
    set_[p].assign(p + 1, false);
  }
}

void PerformanceMatrix::set(std::size_t p, std::size_t q, double accuracy) {
  if (p >= num_tasks() || q > p) fail(ErrorCode::kInvalidArgument, "performance matrix index outside the lower triangle");
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) fail(ErrorCode::kInvalidArgument, "accuracy outside [0, 1]");
  rows_[p][q] = accuracy;
  set_[p][q] = true;
}

double PerformanceMatrix::at(std::size_t p, std::size_t q) const {
  if (!filled(p, q)) fail(ErrorCode::kState, "performance matrix entry not filled");
  return rows_[p][q];
}

bool PerformanceMatrix::filled(std::size_t p, std::size_t q) const {
  return p < num_tasks() && q <= p && set_[p][q];
}

bool PerformanceMatrix::complete() const {
  for (const auto& r : set_)
    if (std::find(r.begin(), r.end(), false) != r.end()) return false;
  return true;
}

std::vector<double> PerformanceMatrix::final_row() const {
  if (num_tasks() == 0) return {};
  const std::size_t last = num_tasks() - 1;
  std::vector<double> out;
  for (std::size_t q = 0; q <= last; ++q) out.push_back(at(last, q));
  return out;
}

double compute_ap(const PerformanceMatrix& m) {
  if (m.num_tasks() == 0 || !m.complete()) fail(ErrorCode::kState, "AP needs a filled matrix");
  const auto last = m.final_row();
  double sum = 0.0;
  for (double a : last) sum += a;
  return sum / static_cast<double>(last.size());
}

double compute_af(const PerformanceMatrix& m) {
  if (m.num_tasks() < 2) fail(ErrorCode::kInvalidArgument, "AF needs at least two tasks");
  if (!m.complete()) fail(ErrorCode::kState, "AF needs a filled matrix");
  const std::size_t last = m.num_tasks() - 1;
  double sum = 0.0;
  for (std::size_t q = 0; q < last; ++q) sum += m.at(last, q) - m.at(q, q);
  return sum / static_cast<double>(last);
}

MemoryReport memory_report(const PromptBank& bank, std::size_t feature_dim) {
  if (bank.size() == 0) fail(ErrorCode::kInvalidArgument, "memory report needs a non-empty bank");
  if (feature_dim == 0) fail(ErrorCode::kInvalidArgument, "feature dim must be positive");
  MemoryReport r;
  r.k = bank.k();
  r.feature_dim = feature_dim;
  r.hidden_dim = bank.hidden_dim();
  const auto count = bank_param_count(bank);
  r.floats_per_task = count.per_task;
  r.prompt_floats_per_task = r.k * (feature_dim + r.hidden_dim);
  r.node_equivalents = static_cast<double>(r.floats_per_task) / static_cast<double>(feature_dim);
  r.prompt_only_node_equivalents =
      static_cast<double>(r.prompt_floats_per_task) / static_cast<double>(feature_dim);
  r.stored_tasks = count.prompted_tasks;
  r.total_floats = count.total;
  return r;
}

void write_memory_report(const MemoryReport& r, const std::filesystem::path& path) {
  jsonio::write_file(path, {{"k", r.k},
                            {"feature_dim", r.feature_dim},
                            {"hidden_dim", r.hidden_dim},
                            {"floats_per_task", r.floats_per_task},
                            {"node_equivalents", r.node_equivalents},
                            {"prompt_floats_per_task", r.prompt_floats_per_task},
                            {"prompt_only_node_equivalents", r.prompt_only_node_equivalents},
                            {"stored_tasks", r.stored_tasks},
                            {"total_floats", r.total_floats}});
}

std::string matrix_csv(const PerformanceMatrix& m) {
  const std::size_t t = m.num_tasks();
  std::string out;
  for (std::size_t q = 0; q < t; ++q) {
    if (q) out += ',';
    out += "task_" + std::to_string(q);
  }
  out += '\n';
  for (std::size_t p = 0; p < t; ++p) {
    for (std::size_t q = 0; q < t; ++q) {
      if (q) out += ',';
      if (q <= p) out += text::fixed(m.at(p, q), 6);
    }
    out += '\n';
  }
  return out;
}

void export_matrix_csv(const PerformanceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << matrix_csv(m);
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

PerformanceMatrix parse_matrix_csv(const std::string& text_in) {
  std::istringstream in(text_in);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kParse, "matrix csv: missing header");
  const std::size_t t = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  PerformanceMatrix m(t);
  for (std::size_t p = 0; p < t; ++p) {
    if (!std::getline(in, line)) fail(ErrorCode::kParse, "matrix csv: missing row " + std::to_string(p));
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != t) fail(ErrorCode::kParse, "matrix csv: row " + std::to_string(p) + " has wrong width");
    for (std::size_t q = 0; q < t; ++q) {
      if (q > p) {
        if (!cells[q].empty()) fail(ErrorCode::kParse, "matrix csv: value above the diagonal");
        continue;
      }
      std::vector<double> v;
      if (!text::parse_reals(cells[q], v) || v.size() != 1)
        fail(ErrorCode::kParse, "matrix csv: bad cell at row " + std::to_string(p));
      m.set(p, q, v[0]);
    }
  }
  return m;
}

PerformanceMatrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix_csv(ss.str());
}

std::string heatmap_colour(double accuracy) {
  const double a = std::clamp(accuracy, 0.0, 1.0);
  // Dark indigo at 0 to pale yellow at 1; every channel increases with a.
  constexpr int kDark[3] = {37, 52, 148};
  constexpr int kLight[3] = {255, 247, 188};
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(kDark[c] + (kLight[c] - kDark[c]) * a));
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string heatmap_svg(const PerformanceMatrix& m) {
  constexpr int kCell = 40;
  constexpr int kMargin = 60;
  const auto t = static_cast<int>(m.num_tasks());
  const int size = kMargin + t * kCell + 10;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<text x=\"" << kMargin << "\" y=\"14\">task (column) after learning task (row)</text>\n";
  for (int q = 0; q < t; ++q)
    out << "<text x=\"" << kMargin + q * kCell + kCell / 2 << "\" y=\"" << kMargin - 6
        << "\" text-anchor=\"middle\">" << q << "</text>\n";
  for (int p = 0; p < t; ++p) {
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << kMargin + p * kCell + kCell / 2 + 4
        << "\" text-anchor=\"end\">" << p << "</text>\n";
    for (int q = 0; q <= p; ++q) {
      const double a = m.at(static_cast<std::size_t>(p), static_cast<std::size_t>(q));
      out << "<rect x=\"" << kMargin + q * kCell << "\" y=\"" << kMargin + p * kCell << "\" width=\""
          << kCell << "\" height=\"" << kCell << "\" fill=\"" << heatmap_colour(a)
          << "\"><title>m[" << p << "," << q << "]=" << text::fixed(a, 6) << "</title></rect>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

void render_heatmap(const PerformanceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << heatmap_svg(m);
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

void write_metrics_json(const PerformanceMatrix& m, const std::filesystem::path& path) {
  jsonio::json j{{"ap", compute_ap(m)}, {"per_task_final", m.final_row()}};
  j["af"] = m.num_tasks() >= 2 ? jsonio::json(compute_af(m)) : jsonio::json(nullptr);
  jsonio::write_file(path, j);
}

PcaResult pca_embed(const Matrix& embeddings, std::size_t components) {
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  if (n < 2) fail(ErrorCode::kInvalidArgument, "PCA needs at least two rows");
  if (components == 0 || components > d) fail(ErrorCode::kInvalidArgument, "PCA component count out of range");

  Matrix centred = embeddings;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += embeddings(i, c);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centred(i, c) -= mean;
  }
  Matrix cov = matmul_tn(centred, centred);
  for (double& x : cov.values()) x /= static_cast<double>(n - 1);

  PcaResult result;
  result.projection = Matrix(n, components);
  result.components = Matrix(components, d);
  result.variances.assign(components, 0.0);

  double trace = 0.0;
  for (std::size_t c = 0; c < d; ++c) trace += cov(c, c);
  if (!(trace > 0.0)) {
    result.degenerate = true;
    return result;
  }

  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 1000;
  constexpr double kRankTol = 1e-12;
  double leading = 0.0;
  for (std::size_t comp = 0; comp < components; ++comp) {
    // Start from the covariance column with the largest norm: it lies in the
    // range of cov and is not orthogonal to the leading direction.
    std::size_t best_col = 0;
    double best_norm = -1.0;
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < d; ++r) s += cov(r, c) * cov(r, c);
      if (s > best_norm) {
        best_norm = s;
        best_col = c;
      }
    }
    if (!(best_norm > 0.0)) break;
    std::vector<double> v(d), w(d);
    for (std::size_t r = 0; r < d; ++r) v[r] = cov(r, best_col) / std::sqrt(best_norm);

    for (int it = 0; it < kMaxIter; ++it) {
      double norm = 0.0;
      for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += cov(r, c) * v[c];
        w[r] = s;
        norm += s * s;
      }
      norm = std::sqrt(norm);
      if (!(norm > 0.0)) break;
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) {
        w[r] /= norm;
        dot += w[r] * v[r];
      }
      if (dot < 0.0)
        for (double& x : w) x = -x;
      double diff = 0.0;
      for (std::size_t r = 0; r < d; ++r) diff = std::max(diff, std::abs(w[r] - v[r]));
      v.swap(w);
      if (diff < kTol) break;
    }

    double lambda = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += cov(r, c) * v[c];
      lambda += v[r] * s;
    }
    if (comp == 0) leading = lambda;
    if (!(lambda > kRankTol * leading)) break;  // remaining directions carry no variance

    std::size_t arg = 0;
    for (std::size_t r = 1; r < d; ++r)
      if (std::abs(v[r]) > std::abs(v[arg])) arg = r;
    if (v[arg] < 0.0)
      for (double& x : v) x = -x;

    result.variances[comp] = lambda;
    for (std::size_t r = 0; r < d; ++r) result.components(comp, r) = v[r];
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < d; ++r) s += centred(i, r) * v[r];
      result.projection(i, comp) = s;
    }
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) cov(r, c) -= lambda * v[r] * v[c];
  }
  return result;
}

void write_embeddings_csv(std::span<const EmbeddingRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  std::string buf = "node_id,x,y,label,prompted\n";
  for (const auto& r : rows) {
    buf += std::to_string(r.node_id);
    buf += ',';
    text::append_real(buf, r.x);
    buf += ',';
    text::append_real(buf, r.y);
    buf += ',' + std::to_string(r.label) + ',' + (r.prompted ? "1" : "0") + '\n';
  }
  out << buf;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace pcgl
