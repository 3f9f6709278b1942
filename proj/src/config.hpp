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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "prompting.hpp"

namespace pcgl {

enum class BackboneKind { kGcn, kSage };

enum class Method { kPromptCgl, kBare, kJoint };

std::string to_string(BackboneKind kind);
std::string to_string(Method method);
std::string to_string(PgMode mode);
std::optional<BackboneKind> parse_backbone(std::string_view s);
std::optional<Method> parse_method(std::string_view s);
std::optional<PgMode> parse_pg_mode(std::string_view s);

struct TrainConfig {
  std::size_t k = 3;
  std::size_t hidden_dim = 32;
  BackboneKind backbone = BackboneKind::kGcn;

  // Pretraining on task 0; Bare and Joint reuse these for the backbone.
  double pretrain_lr = 1e-3;
  double pretrain_wd = 5e-4;
  // Continual phase: prompts and the shared prediction layer.
  double prompt_lr = 1e-2;
  double prompt_wd = 5e-4;
  double head_lr = 5e-4;
  double head_wd = 0.0;

  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 0;

  // Ablations and diagnostics.
  bool use_node_prompts = true;
  bool use_subgraph_prompts = true;
  PgMode pg_mode = PgMode::kPersonalized;
  /// Freeze the prediction-layer columns of each task's classes once the task
  /// is learned, so later tasks cannot move them.
  bool freeze_head_after_task = false;

  /// Throws kInvalidArgument when a field is out of range.
  void validate() const;
};

}  // namespace pcgl
