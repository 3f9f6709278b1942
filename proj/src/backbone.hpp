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

// Two-layer GNN feature extractor and the shared linear prediction layer.
//
//   GCN :  H = A_hat X W                      (A_hat symmetric-normalized)
//   SAGE:  H = [X | M X] W                    (M row-normalized, self included)
//
// Layers have no bias; ReLU follows each layer. The head is logits = X2 W + b
// over every class of the stream.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "config.hpp"
#include "graph.hpp"
#include "tensor.hpp"
#include "training.hpp"

namespace pcgl {

struct BackboneParams {
  BackboneKind kind = BackboneKind::kGcn;
  ParamTensor w1;  // d_f x d_h   (2 d_f x d_h for SAGE)
  ParamTensor w2;  // d_h x d_h   (2 d_h x d_h for SAGE)

  std::size_t hidden_dim() const noexcept { return w2.value.cols(); }
  void freeze() { w1.frozen = w2.frozen = true; }
  bool frozen() const noexcept { return w1.frozen && w2.frozen; }
  std::uint64_t hash() const { return hash_values(w2.value, hash_values(w1.value)); }
};

struct PredictionLayer {
  ParamTensor weight;  // d_h x C_total
  ParamTensor bias;    // 1 x C_total

  std::size_t num_classes() const noexcept { return weight.value.cols(); }
};

struct Model {
  BackboneParams backbone;
  PredictionLayer head;
};

/// Glorot-uniform layer weights.
BackboneParams make_backbone(BackboneKind kind, std::size_t feature_dim, std::size_t hidden_dim,
                             std::mt19937_64& rng);
/// Glorot-uniform weight, zero bias.
PredictionLayer make_prediction_layer(std::size_t hidden_dim, std::size_t num_classes,
                                      std::mt19937_64& rng);
Model make_model(BackboneKind kind, std::size_t feature_dim, std::size_t hidden_dim,
                 std::size_t num_classes, std::uint64_t seed);

/// The operator a variant propagates with: A_hat for GCN, M for SAGE.
const CsrMatrix& propagation_operator(const TaskView& task, BackboneKind kind);

struct GnnLayerCache {
  Matrix input;        // X (GCN) or [X | M X] (SAGE)
  Matrix propagated;   // X W before A_hat (GCN only)
  Matrix pre_activation;
};

/// Pre-activation output of one propagation layer.
Matrix gnn_layer_forward(BackboneKind kind, const CsrMatrix& op, const Matrix& x,
                         const ParamTensor& w, GnnLayerCache* cache = nullptr);

/// Returns dL/dX. When `w_grad` is non-null the weight gradient is added to it.
Matrix gnn_layer_backward(BackboneKind kind, const CsrMatrix& op, const GnnLayerCache& cache,
                          const Matrix& dpre, const ParamTensor& w, Matrix* w_grad);

/// X1 = ReLU(layer1(X0)).
Matrix layer1_forward(const Matrix& x, const CsrMatrix& op, const BackboneParams& p);

/// logits = ReLU(layer2(X1p)) W_out + b.
Matrix layer2_and_head_forward(const Matrix& x1p, const CsrMatrix& op, const BackboneParams& p,
                               const PredictionLayer& head);

Matrix head_forward(const Matrix& x2, const PredictionLayer& head);
/// Adds head gradients and returns dL/dX2.
Matrix head_backward(const Matrix& x2, const Matrix& dlogits, PredictionLayer& head);

/// Columns outside `classes` become -inf.
Matrix mask_logits(const Matrix& logits, std::span<const int> classes);

/// Masked argmax accuracy over `rows`.
double masked_accuracy(const Matrix& masked_logits, std::span<const int> labels,
                       std::span<const std::size_t> rows);

struct PretrainResult {
  Model model;
  TrainLog log;
};

/// Trains backbone and head on task 0 without prompts (head masked to the
/// task's classes, early stopping on validation accuracy) and freezes the
/// backbone. Zero epochs returns the initialization, frozen.
PretrainResult pretrain(const TaskView& task0, std::size_t num_classes, const TrainConfig& cfg,
                        std::uint64_t seed);

/// Trains backbone and head jointly on every task in `tasks` without prompts;
/// each task's logits are masked to its own classes and the loss is the mean
/// over all training nodes. Used by pretraining and both baselines.
TrainLog train_backbone(std::span<const TaskView* const> tasks, Model& model, double lr,
                        double weight_decay, const Schedule& schedule, std::string phase,
                        std::size_t log_task_id);

/// Versioned JSON container with shapes and row-major values.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace pcgl
