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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "error.hpp"
#include "training.hpp"

using pcgl::EpochMetrics;
using pcgl::Matrix;

namespace {

// Scripted run: the parameter holds the epoch number it was last stepped at,
// so the restored value tells which epoch won.
struct Script {
  pcgl::ParamTensor counter{Matrix(1, 1, 0.0)};
  pcgl::Optimizer opt;
  std::vector<double> accs;
  std::vector<double> losses;
  std::size_t calls = 0;

  explicit Script(std::vector<double> a, std::vector<double> l = {}) : accs(std::move(a)), losses(std::move(l)) {
    if (losses.empty()) losses.assign(accs.size(), 1.0);
    opt.add(counter, 0.0, 0.0);
    opt.on_step([this] { counter.value(0, 0) = static_cast<double>(calls); });
  }

  EpochMetrics next() {
    const std::size_t i = std::min(calls, accs.size() - 1);
    ++calls;
    return {0.5, accs[i], losses[i]};
  }

  pcgl::TrainLog run(std::size_t max_epochs, std::size_t patience) {
    pcgl::TrainLog log;
    log.phase = "test";
    pcgl::train_with_early_stopping({max_epochs, patience}, opt, [&] { return next(); },
                                    [&] { return next(); }, log);
    return log;
  }
};

}  // namespace

TEST_CASE("early stopping keeps the best epoch") {
  Script s({0.5, 0.7, 0.9, 0.8, 0.8, 0.8, 0.8});
  const auto log = s.run(100, 3);
  CHECK(log.best_epoch == 2);
  CHECK(log.best_val_acc == 0.9);
  CHECK(log.epochs.size() == 6);  // epochs 0..5, stop after three without improvement
  // Value at epoch 2 is what the optimizer left after step 2 (set to calls == 2).
  CHECK(s.counter.value(0, 0) == 2.0);
}

TEST_CASE("patience zero-improvement run stops after patience epochs") {
  Script s({0.4});
  const auto log = s.run(50, 20);
  CHECK(log.best_epoch == 0);
  CHECK(log.epochs.size() == 21);
  CHECK(s.counter.value(0, 0) == 0.0);
}

TEST_CASE("ties on accuracy are broken by validation loss") {
  Script s({0.8, 0.8, 0.8}, {1.0, 0.5, 0.7});
  const auto log = s.run(3, 10);
  CHECK(log.best_epoch == 1);
}

TEST_CASE("full schedule evaluates the final weights") {
  Script s({0.1, 0.2, 0.3, 0.4});
  const auto log = s.run(3, 10);
  CHECK(log.epochs.size() == 4);
  CHECK(log.best_epoch == 3);
  CHECK(s.counter.value(0, 0) == 3.0);
}

TEST_CASE("zero epochs do nothing") {
  Script s({0.9});
  const auto log = s.run(0, 5);
  CHECK(log.epochs.empty());
  CHECK(s.calls == 0);
}

TEST_CASE("non-finite training loss is a numeric error") {
  pcgl::ParamTensor p(Matrix(1, 1, 1.0));
  pcgl::Optimizer opt;
  opt.add(p, 0.1, 0.0);
  pcgl::TrainLog log;
  auto bad = [] { return EpochMetrics{std::nan(""), 0.5, 1.0}; };
  try {
    pcgl::train_with_early_stopping({10, 5}, opt, bad, bad, log);
    FAIL("expected an error");
  } catch (const pcgl::Error& e) {
    CHECK(e.code() == pcgl::ErrorCode::kNumeric);
  }
}

TEST_CASE("optimizer rejects frozen parameters and runs the hook") {
  pcgl::ParamTensor frozen(Matrix(1, 1, 1.0));
  frozen.frozen = true;
  pcgl::Optimizer opt;
  CHECK_THROWS_AS(opt.add(frozen, 0.1, 0.0), pcgl::Error);

  pcgl::ParamTensor w(Matrix(1, 2, {1.0, 1.0}));
  opt.add(w, 0.1, 0.0);
  opt.on_step([&] { w.value(0, 1) = 1.0; });
  w.grad = Matrix(1, 2, {1.0, 1.0});
  opt.step();
  CHECK(w.value(0, 0) < 1.0);
  CHECK(w.value(0, 1) == 1.0);
  opt.zero_grad();
  CHECK(w.grad == Matrix(1, 2, 0.0));
}
