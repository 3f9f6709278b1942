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

// Full-batch training loop shared by pretraining, prompt tuning and the
// baselines: Adam parameter groups plus validation early stopping with
// best-checkpoint restore.

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace pcgl {

class Optimizer {
 public:
  void add(ParamTensor& param, double lr, double weight_decay);
  /// Runs after every step; used to pin values that must not move.
  void on_step(std::function<void()> hook) { post_step_ = std::move(hook); }
  void step();
  void zero_grad();
  std::vector<ParamTensor*> params() const;

 private:
  struct Slot {
    ParamTensor* param;
    AdamState state;
  };
  std::vector<Slot> slots_;
  std::function<void()> post_step_;
};

struct EpochMetrics {
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
};

struct TrainLog {
  std::size_t task_id = 0;
  std::string phase;  // "pretrain", "prompt", "bare", "joint"
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

struct Schedule {
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
};

/// Each epoch calls `forward_backward`, which must evaluate the current
/// parameters (train loss, val metrics) and leave gradients in place; the
/// optimizer then steps. A candidate beats the best when its val accuracy is
/// higher, or equal with lower val loss. Stops after `patience` epochs
/// without improvement and restores the best parameters. `evaluate` scores
/// the parameters left after the final step. Non-finite losses throw
/// kNumeric with the phase and epoch in the message.
void train_with_early_stopping(const Schedule& schedule, Optimizer& optimizer,
                               const std::function<EpochMetrics()>& forward_backward,
                               const std::function<EpochMetrics()>& evaluate, TrainLog& log);

}  // namespace pcgl
