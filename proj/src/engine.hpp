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

// Stream orchestration: pretrain, per-task prompt learning, baselines and
// task-aware inference.
//
// Prompted forward pass for one task:
//
//   X0p = X0 + PG_n(X0)
//   X1  = ReLU(layer1(X0p))
//   X1p = X1 + PG_s(X1)
//   logits = ReLU(layer2(X1p)) W_out + b

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "backbone.hpp"
#include "config.hpp"
#include "eval.hpp"
#include "graph.hpp"
#include "prompting.hpp"
#include "training.hpp"

namespace pcgl {

struct PromptOptions {
  bool use_node = true;
  bool use_subgraph = true;
  PgMode mode = PgMode::kPersonalized;
};

PromptOptions prompt_options(const TrainConfig& cfg);

struct ForwardPass {
  bool node_applied = false;
  bool subgraph_applied = false;
  PgCache node_cache;
  PgCache subgraph_cache;
  GnnLayerCache layer1;
  GnnLayerCache layer2;
  Matrix x2;
};

/// Unmasked logits. A null `prompts` (or a disabled level) skips the prompt
/// addition entirely.
Matrix model_forward(const TaskView& task, const Model& model, const TaskPrompts* prompts,
                     const PromptOptions& opts, ForwardPass* pass = nullptr);

/// Accumulates gradients for the head (unless frozen), the prompts that were
/// applied, and the backbone when `backbone_grads` is set.
void model_backward(const TaskView& task, Model& model, TaskPrompts* prompts,
                    const ForwardPass& pass, const Matrix& dlogits, bool backbone_grads);

/// Learns one task's prompts and fine-tunes the head with the backbone
/// frozen. Columns for `pinned_classes` are restored after every step.
TrainLog train_task_prompts(const TaskView& task, Model& model, TaskPrompts& prompts,
                            const TrainConfig& cfg, std::span<const int> pinned_classes = {});

struct Inference {
  std::vector<int> predictions;  // one per test node, global class ids
  double accuracy = 0.0;
};

/// Test-split accuracy with the task's stored prompts and class mask.
Inference infer(const TaskView& task, const Model& model, const PromptBank& bank,
                const PromptOptions& opts);
/// Same, without a bank; null prompts means promptless.
Inference infer(const TaskView& task, const Model& model, const TaskPrompts* prompts,
                const PromptOptions& opts);

/// Output of the second GNN layer (after ReLU) for every node of the task.
Matrix node_embeddings(const TaskView& task, const Model& model, const TaskPrompts* prompts,
                       const PromptOptions& opts);

struct RunObserver {
  std::function<void(const Model&)> on_pretrained;
  std::function<void(std::size_t task_id, const Model&, const PromptBank&)> on_task_end;
};

struct RunResult {
  Method method = Method::kPromptCgl;
  PerformanceMatrix matrix;
  PromptBank bank;  // PromptCGL only
  Model model;      // state after the final task
  std::uint64_t backbone_hash_after_pretrain = 0;
  std::map<std::size_t, std::uint64_t> prompt_hash_at_store;
  std::vector<TrainLog> logs;
  std::optional<MemoryReport> memory;
};

/// PromptCGL and Bare need at least two tasks, Joint at least one.
RunResult run_stream(const TaskStream& stream, const TrainConfig& cfg, Method method,
                     const RunObserver& observer = {});

/// Seed of the prompt initializer for task t.
std::uint64_t prompt_seed(std::uint64_t seed, std::size_t task_id);

}  // namespace pcgl
