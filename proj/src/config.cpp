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

#include "config.hpp"

#include <cmath>

#include "error.hpp"

namespace pcgl {

std::string to_string(BackboneKind kind) { return kind == BackboneKind::kSage ? "SAGE" : "GCN"; }

std::string to_string(Method method) {
  switch (method) {
    case Method::kPromptCgl: return "PromptCGL";
    case Method::kBare: return "Bare";
    case Method::kJoint: return "Joint";
  }
  return "?";
}

std::string to_string(PgMode mode) {
  return mode == PgMode::kUniform ? "uniform" : "personalized";
}

std::optional<BackboneKind> parse_backbone(std::string_view s) {
  if (s == "GCN" || s == "gcn") return BackboneKind::kGcn;
  if (s == "SAGE" || s == "sage") return BackboneKind::kSage;
  return std::nullopt;
}

std::optional<Method> parse_method(std::string_view s) {
  if (s == "PromptCGL" || s == "promptcgl") return Method::kPromptCgl;
  if (s == "Bare" || s == "bare") return Method::kBare;
  if (s == "Joint" || s == "joint") return Method::kJoint;
  return std::nullopt;
}

std::optional<PgMode> parse_pg_mode(std::string_view s) {
  if (s == "personalized") return PgMode::kPersonalized;
  if (s == "uniform") return PgMode::kUniform;
  return std::nullopt;
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kInvalidArgument, "config: " + what); };
  if (k < 1) bad("k must be >= 1");
  if (hidden_dim < 1) bad("hidden dim must be >= 1");
  for (double lr : {pretrain_lr, prompt_lr, head_lr})
    if (!(lr > 0.0) || !std::isfinite(lr)) bad("learning rates must be positive");
  for (double wd : {pretrain_wd, prompt_wd, head_wd})
    if (!(wd >= 0.0) || !std::isfinite(wd)) bad("weight decay must be non-negative");
}

}  // namespace pcgl
