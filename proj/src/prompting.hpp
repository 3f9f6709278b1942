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

// Personalized prompt generation and the per-task prompt bank.
//
// A generator keeps k prompt vectors P (k x d) and a rank-one query
// Q = v^T u (k x d). For a node representation x_i the mixing weights are
//
//   s_i = u . x_i,   alpha_i = softmax(s_i * v),   prompt_i = sum_j alpha_ij P_j
//
// so Q x_i = s_i v is never materialized. Generators are applied at two
// depths: to raw features (node level, d = d_f) and to the first GNN layer's
// output (subgraph level, d = d_h).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "tensor.hpp"

namespace pcgl {

enum class PromptLevel { kNode, kSubgraph };

enum class PgMode {
  kPersonalized,
  kUniform,  // ablation: alpha fixed at 1/k, query ignored
};

struct PromptGenerator {
  PromptLevel level = PromptLevel::kNode;
  ParamTensor prompts;  // k x d
  ParamTensor query;    // 1 x d  (u)
  ParamTensor scale;    // 1 x k  (v)

  std::size_t k() const noexcept { return prompts.value.rows(); }
  std::size_t width() const noexcept { return prompts.value.cols(); }
  std::size_t param_count() const noexcept {
    return prompts.value.size() + query.value.size() + scale.value.size();
  }
  std::vector<ParamTensor*> params() { return {&prompts, &query, &scale}; }
};

/// Zero prompts; u and v drawn from N(0, 0.01^2).
PromptGenerator make_prompt_generator(PromptLevel level, std::size_t k, std::size_t width,
                                      std::mt19937_64& rng);

struct PgCache {
  Matrix input;                 // x
  std::vector<double> scores;   // s_i
  Matrix alpha;                 // N x k
  PgMode mode = PgMode::kPersonalized;
  std::uint64_t param_stamp = 0;
};

struct PgOutput {
  Matrix prompts;  // N x d
  PgCache cache;
};

PgOutput pg_forward(const Matrix& x, const PromptGenerator& gen,
                    PgMode mode = PgMode::kPersonalized);

/// Accumulates gradients into gen's P, u, v and returns d loss / d x through
/// the softmax weights. Throws kState if gen changed since the forward pass.
Matrix pg_backward(const PgCache& cache, PromptGenerator& gen, const Matrix& dprompts);

/// x + PG(x, P) for either level.
Matrix apply_prompts(const Matrix& x, const PromptGenerator& gen, PgCache* cache = nullptr,
                     PgMode mode = PgMode::kPersonalized);

inline Matrix apply_node_prompts(const Matrix& x0, const PromptGenerator& gen,
                                 PgCache* cache = nullptr, PgMode mode = PgMode::kPersonalized) {
  return apply_prompts(x0, gen, cache, mode);
}

inline Matrix apply_subgraph_prompts(const Matrix& x1, const PromptGenerator& gen,
                                     PgCache* cache = nullptr,
                                     PgMode mode = PgMode::kPersonalized) {
  return apply_prompts(x1, gen, cache, mode);
}

struct TaskPrompts {
  PromptGenerator node;      // width d_f
  PromptGenerator subgraph;  // width d_h

  std::size_t param_count() const noexcept {
    return node.param_count() + subgraph.param_count();
  }
  std::vector<ParamTensor*> params();
  std::uint64_t hash() const;
};

TaskPrompts make_task_prompts(std::size_t k, std::size_t feature_dim, std::size_t hidden_dim,
                              std::mt19937_64& rng);

struct BankParamCount {
  std::size_t per_task = 0;
  std::size_t total = 0;
  std::size_t prompted_tasks = 0;
};

/// Archive of learned prompts keyed by task id. Entries are write-once. Task 0
/// is trained without prompts and is recorded with a no-prompt marker.
class PromptBank {
 public:
  PromptBank() = default;
  PromptBank(std::size_t k, std::size_t feature_dim, std::size_t hidden_dim)
      : k_(k), feature_dim_(feature_dim), hidden_dim_(hidden_dim) {}

  void store(std::size_t task_id, const TaskPrompts& prompts);
  void store_no_prompt(std::size_t task_id);

  /// nullptr means the task runs promptless; unknown ids throw kNotFound.
  const TaskPrompts* retrieve(std::size_t task_id) const;
  bool contains(std::size_t task_id) const { return entries_.count(task_id) != 0; }
  std::vector<std::size_t> task_ids() const;
  std::size_t size() const noexcept { return entries_.size(); }

  std::size_t k() const noexcept { return k_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }

  void save(const std::filesystem::path& path) const;
  static PromptBank load(const std::filesystem::path& path);

 private:
  std::size_t k_ = 0;
  std::size_t feature_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::map<std::size_t, std::optional<TaskPrompts>> entries_;
};

/// Per-task float count k(d_f + d_h) + (d_f + d_h) + 2k, independent of N.
BankParamCount bank_param_count(const PromptBank& bank);
std::size_t prompt_floats_per_task(std::size_t k, std::size_t feature_dim, std::size_t hidden_dim);

}  // namespace pcgl
