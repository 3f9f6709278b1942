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

#include "training.hpp"

#include <cmath>

#include "error.hpp"

namespace pcgl {

void Optimizer::add(ParamTensor& param, double lr, double weight_decay) {
  if (param.frozen) fail(ErrorCode::kState, "cannot optimize a frozen parameter");
  slots_.push_back({&param, AdamState(param, lr, weight_decay)});
}

void Optimizer::step() {
  for (auto& s : slots_) adam_step(*s.param, s.state);
  if (post_step_) post_step_();
}

void Optimizer::zero_grad() {
  for (auto& s : slots_) s.param->zero_grad();
}

std::vector<ParamTensor*> Optimizer::params() const {
  std::vector<ParamTensor*> out;
  for (const auto& s : slots_) out.push_back(s.param);
  return out;
}

namespace {

bool improves(const EpochMetrics& candidate, const EpochMetrics& best) {
  if (candidate.val_acc != best.val_acc) return candidate.val_acc > best.val_acc;
  return candidate.val_loss < best.val_loss;
}

void check_finite(const EpochMetrics& m, const TrainLog& log, std::size_t epoch) {
  if (!std::isfinite(m.train_loss))
    fail(ErrorCode::kNumeric, "non-finite training loss in phase '" + log.phase + "', task " +
                                  std::to_string(log.task_id) + ", epoch " + std::to_string(epoch));
}

}  // namespace

void train_with_early_stopping(const Schedule& schedule, Optimizer& optimizer,
                               const std::function<EpochMetrics()>& forward_backward,
                               const std::function<EpochMetrics()>& evaluate, TrainLog& log) {
  if (schedule.max_epochs == 0) return;
  const auto params = optimizer.params();
  std::vector<Matrix> best_values;
  EpochMetrics best;
  bool have_best = false;
  std::size_t since_best = 0;

  auto consider = [&](const EpochMetrics& m, std::size_t epoch) {
    if (!have_best || improves(m, best)) {
      best = m;
      have_best = true;
      since_best = 0;
      log.best_epoch = epoch;
      log.best_val_acc = m.val_acc;
      best_values.clear();
      for (const ParamTensor* p : params) best_values.push_back(p->value);
      return;
    }
    ++since_best;
  };

  bool stopped_early = false;
  for (std::size_t epoch = 0; epoch < schedule.max_epochs; ++epoch) {
    optimizer.zero_grad();
    const EpochMetrics m = forward_backward();
    check_finite(m, log, epoch);
    log.epochs.push_back({epoch, m.train_loss, m.val_acc, m.val_loss});
    consider(m, epoch);
    if (since_best >= schedule.patience) {
      stopped_early = true;
      break;
    }
    optimizer.step();
  }
  if (!stopped_early) {
    const EpochMetrics m = evaluate();
    check_finite(m, log, schedule.max_epochs);
    log.epochs.push_back({schedule.max_epochs, m.train_loss, m.val_acc, m.val_loss});
    consider(m, schedule.max_epochs);
  }
  optimizer.zero_grad();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
}

}  // namespace pcgl
