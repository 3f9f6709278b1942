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

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prompting.hpp"
#include "tensor.hpp"

namespace pcgl {

/// Lower-triangular accuracies: at(p, q) is task q's test accuracy after
/// learning task p, defined for q <= p.
class PerformanceMatrix {
 public:
  PerformanceMatrix() = default;
  explicit PerformanceMatrix(std::size_t num_tasks);

  std::size_t num_tasks() const noexcept { return rows_.size(); }
  void set(std::size_t p, std::size_t q, double accuracy);
  double at(std::size_t p, std::size_t q) const;
  bool filled(std::size_t p, std::size_t q) const;
  bool complete() const;
  /// Accuracies after the last task, m_{T,q} for every q.
  std::vector<double> final_row() const;

  friend bool operator==(const PerformanceMatrix&, const PerformanceMatrix&) = default;

 private:
  std::vector<std::vector<double>> rows_;
  std::vector<std::vector<bool>> set_;
};

/// AP = mean of the last row.
double compute_ap(const PerformanceMatrix& m);
/// AF = mean over q < T of (m_{T,q} - m_{q,q}); negative means forgetting.
/// Needs at least two tasks.
double compute_af(const PerformanceMatrix& m);

struct MemoryReport {
  std::size_t k = 0;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t floats_per_task = 0;       // prompts + query vectors
  std::size_t prompt_floats_per_task = 0;  // prompts only, k (d_f + d_h)
  double node_equivalents = 0.0;           // floats_per_task / d_f
  double prompt_only_node_equivalents = 0.0;
  std::size_t stored_tasks = 0;
  std::size_t total_floats = 0;
};

/// One replayed node costs d_f feature floats; that is the comparison unit.
MemoryReport memory_report(const PromptBank& bank, std::size_t feature_dim);
void write_memory_report(const MemoryReport& report, const std::filesystem::path& path);

/// Header task_0..task_{T-1}; six fractional digits; empty above the diagonal.
void export_matrix_csv(const PerformanceMatrix& m, const std::filesystem::path& path);
std::string matrix_csv(const PerformanceMatrix& m);
PerformanceMatrix parse_matrix_csv(const std::string& text);
PerformanceMatrix load_matrix_csv(const std::filesystem::path& path);

/// Heatmap with a monotone ramp: 1.0 renders light, 0.0 renders dark.
void render_heatmap(const PerformanceMatrix& m, const std::filesystem::path& path);
std::string heatmap_svg(const PerformanceMatrix& m);
/// "#rrggbb" colour for an accuracy in [0, 1].
std::string heatmap_colour(double accuracy);

/// {"ap", "af", "per_task_final"}; af is null for a single task.
void write_metrics_json(const PerformanceMatrix& m, const std::filesystem::path& path);

struct PcaResult {
  Matrix projection;          // N x components
  Matrix components;          // components x d, unit rows
  std::vector<double> variances;  // eigenvalues of the sample covariance
  bool degenerate = false;    // zero-variance input; projection is all zeros
};

/// Mean-centred projection onto the leading eigenvectors of the sample
/// covariance, found by power iteration with deflation. Each component is
/// signed so its largest-magnitude coordinate is positive.
PcaResult pca_embed(const Matrix& embeddings, std::size_t components = 2);

struct EmbeddingRow {
  std::size_t node_id = 0;
  double x = 0.0;
  double y = 0.0;
  int label = 0;
  bool prompted = false;
};

/// node_id,x,y,label,prompted
void write_embeddings_csv(std::span<const EmbeddingRow> rows, const std::filesystem::path& path);

}  // namespace pcgl
