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

#include <cstring>
#include <random>

#include "doctest.h"
#include "engine.hpp"
#include "error.hpp"
#include "support/oracles.hpp"

using pcgl::Matrix;
using pcgl::Method;

namespace {

pcgl::TaskPrompts random_prompts(std::size_t k, std::size_t df, std::size_t dh, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  pcgl::TaskPrompts p = pcgl::make_task_prompts(k, df, dh, rng);
  for (pcgl::ParamTensor* t : p.params()) t->value = oracle::random_matrix(t->value.rows(), t->value.cols(), rng);
  return p;
}

pcgl::TrainConfig fast_config() {
  pcgl::TrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.patience = 20;
  cfg.hidden_dim = 16;
  return cfg;
}

pcgl::TaskStream four_task_stream(std::uint64_t seed) {
  return pcgl::split_into_tasks(pcgl::generate_sbm({8, 30, 0.2, 0.01, 16, 2.0, seed}), 2, {}, seed);
}

}  // namespace

TEST_CASE("end-to-end gradients of prompts and head match central differences") {
  for (pcgl::BackboneKind kind : {pcgl::BackboneKind::kGcn, pcgl::BackboneKind::kSage}) {
    const pcgl::TaskStream s = oracle::small_stream(6, 8, 3);
    const pcgl::TaskView& task = s.tasks[0];
    REQUIRE(task.num_nodes() == 12);
    pcgl::Model m = pcgl::make_model(kind, 8, 4, 2, 7);
    m.backbone.freeze();
    pcgl::TaskPrompts prompts = random_prompts(2, 8, 4, 5);
    const pcgl::PromptOptions opts;
    auto loss = [&](bool with_grad) {
      pcgl::ForwardPass fp;
      const Matrix logits = pcgl::mask_logits(pcgl::model_forward(task, m, &prompts, opts, &fp), task.classes);
      auto ce = pcgl::cross_entropy(logits, task.labels, task.split.train);
      if (with_grad) pcgl::model_backward(task, m, &prompts, fp, ce.dlogits, false);
      return ce.loss;
    };
    std::vector<pcgl::ParamTensor*> params = prompts.params();
    params.push_back(&m.head.weight);
    params.push_back(&m.head.bias);
    params.push_back(&m.backbone.w1);
    params.push_back(&m.backbone.w2);
    const auto report = pcgl::finite_diff_check(loss, params);
    CHECK(report.max_rel_error < 1e-5);
    CHECK(report.frozen_grads_zero);
    CHECK(report.frozen_coords_excluded == m.backbone.w1.value.size() + m.backbone.w2.value.size());
  }
}

TEST_CASE("zero prompts reproduce the promptless forward pass bitwise") {
  const pcgl::TaskStream s = oracle::small_stream(10, 6, 1);
  const pcgl::Model m = pcgl::make_model(pcgl::BackboneKind::kGcn, 6, 5, 2, 3);
  std::mt19937_64 rng(9);
  const pcgl::TaskPrompts zero = pcgl::make_task_prompts(3, 6, 5, rng);  // P starts at zero
  const Matrix a = pcgl::model_forward(s.tasks[0], m, &zero, {});
  const Matrix b = pcgl::model_forward(s.tasks[0], m, nullptr, {});
  REQUIRE(a.same_shape(b));
  CHECK(std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("prompt training") {
  const pcgl::TaskStream s = four_task_stream(0);
  pcgl::TrainConfig cfg = fast_config();
  const auto pre = pcgl::pretrain(s.tasks[0], s.total_classes, cfg, 0);

  SUBCASE("lr zero leaves prompts and head unchanged") {
    pcgl::Model m = pre.model;
    cfg.prompt_lr = 0.0;
    cfg.head_lr = 0.0;
    std::mt19937_64 rng(1);
    pcgl::TaskPrompts p = pcgl::make_task_prompts(cfg.k, 16, cfg.hidden_dim, rng);
    const std::uint64_t before = p.hash();
    pcgl::train_task_prompts(s.tasks[1], m, p, cfg);
    CHECK(p.hash() == before);
    CHECK(m.head.weight.value == pre.model.head.weight.value);
    const Matrix a = pcgl::model_forward(s.tasks[1], m, &p, {});
    const Matrix b = pcgl::model_forward(s.tasks[1], pre.model, nullptr, {});
    CHECK(std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0);
  }
  SUBCASE("a separable task is learned and inference matches the matrix entry") {
    pcgl::Model m = pre.model;
    cfg.max_epochs = 200;
    std::mt19937_64 rng(1);
    pcgl::TaskPrompts p = pcgl::make_task_prompts(cfg.k, 16, cfg.hidden_dim, rng);
    const auto log = pcgl::train_task_prompts(s.tasks[1], m, p, cfg);
    CHECK(log.phase == "prompt");
    const Matrix logits = pcgl::mask_logits(pcgl::model_forward(s.tasks[1], m, &p, {}), s.tasks[1].classes);
    CHECK(pcgl::masked_accuracy(logits, s.tasks[1].labels, s.tasks[1].split.train) >= 0.99);
    const auto inf = pcgl::infer(s.tasks[1], m, &p, {});
    CHECK(inf.predictions.size() == s.tasks[1].split.test.size());
    for (int c : inf.predictions) CHECK((c == s.tasks[1].classes[0] || c == s.tasks[1].classes[1]));
  }
  SUBCASE("unfrozen backbone is refused") {
    pcgl::Model m = pcgl::make_model(pcgl::BackboneKind::kGcn, 16, cfg.hidden_dim, s.total_classes, 0);
    std::mt19937_64 rng(1);
    pcgl::TaskPrompts p = pcgl::make_task_prompts(cfg.k, 16, cfg.hidden_dim, rng);
    try {
      pcgl::train_task_prompts(s.tasks[1], m, p, cfg);
      FAIL("expected an error");
    } catch (const pcgl::Error& e) {
      CHECK(e.code() == pcgl::ErrorCode::kState);
    }
  }
  SUBCASE("pinned head columns do not move") {
    pcgl::Model m = pre.model;
    std::mt19937_64 rng(1);
    pcgl::TaskPrompts p = pcgl::make_task_prompts(cfg.k, 16, cfg.hidden_dim, rng);
    const std::vector<int> pinned{0, 1, 2};
    pcgl::train_task_prompts(s.tasks[1], m, p, cfg, pinned);
    for (std::size_t r = 0; r < m.head.weight.value.rows(); ++r)
      for (int c : pinned)
        CHECK(m.head.weight.value(r, static_cast<std::size_t>(c)) ==
              pre.model.head.weight.value(r, static_cast<std::size_t>(c)));
  }
}

TEST_CASE("PromptCGL stream run") {
  const pcgl::TaskStream s = four_task_stream(1);
  REQUIRE(s.size() == 4);
  pcgl::TrainConfig cfg = fast_config();
  cfg.seed = 1;

  std::vector<std::uint64_t> backbone_hashes;
  std::map<std::size_t, std::vector<std::uint64_t>> prompt_hashes;  // task -> hash at each later step
  pcgl::RunObserver obs;
  obs.on_task_end = [&](std::size_t, const pcgl::Model& m, const pcgl::PromptBank& bank) {
    backbone_hashes.push_back(m.backbone.hash());
    for (std::size_t id : bank.task_ids())
      if (const pcgl::TaskPrompts* p = bank.retrieve(id)) prompt_hashes[id].push_back(p->hash());
  };
  const auto r = pcgl::run_stream(s, cfg, Method::kPromptCgl, obs);

  CHECK(r.matrix.complete());
  CHECK(backbone_hashes.size() == 4);
  for (std::uint64_t h : backbone_hashes) CHECK(h == r.backbone_hash_after_pretrain);
  for (const auto& [id, hashes] : prompt_hashes)
    for (std::uint64_t h : hashes) CHECK(h == r.prompt_hash_at_store.at(id));
  CHECK(r.bank.retrieve(0) == nullptr);
  CHECK(r.bank.size() == 4);
  CHECK(r.logs.size() == 4);
  CHECK(r.logs[0].phase == "pretrain");
  REQUIRE(r.memory.has_value());
  CHECK(r.memory->stored_tasks == 3);

  // Re-running inference on the final state gives the stored last row.
  for (std::size_t q = 0; q < 4; ++q)
    CHECK(pcgl::infer(s.tasks[q], r.model, r.bank, {}).accuracy == r.matrix.at(3, q));
  // Masked columns never move, so earlier tasks keep their accuracy exactly.
  CHECK(pcgl::compute_af(r.matrix) == 0.0);

  SUBCASE("same seed reproduces the matrix") {
    const auto again = pcgl::run_stream(s, cfg, Method::kPromptCgl);
    CHECK(again.matrix == r.matrix);
  }
  SUBCASE("head freeze also gives zero forgetting") {
    cfg.freeze_head_after_task = true;
    const auto frozen = pcgl::run_stream(s, cfg, Method::kPromptCgl);
    CHECK(pcgl::compute_af(frozen.matrix) == 0.0);
  }
}

TEST_CASE("baselines") {
  const pcgl::TaskStream s = four_task_stream(2);
  pcgl::TrainConfig cfg = fast_config();
  const auto bare = pcgl::run_stream(s, cfg, Method::kBare);
  CHECK(bare.matrix.complete());
  CHECK(bare.logs[0].phase == "pretrain");
  CHECK(bare.logs[1].phase == "bare");
  CHECK_FALSE(bare.memory.has_value());

  pcgl::TaskStream one = s;
  one.tasks.resize(1);
  const auto joint = pcgl::run_stream(one, cfg, Method::kJoint);
  CHECK(joint.matrix.num_tasks() == 1);
  CHECK(joint.logs[0].phase == "joint");
  CHECK(pcgl::compute_ap(joint.matrix) == joint.matrix.at(0, 0));
}

TEST_CASE("stream preconditions") {
  pcgl::TaskStream s = four_task_stream(0);
  s.tasks.resize(1);
  const pcgl::TrainConfig cfg = fast_config();
  for (Method m : {Method::kPromptCgl, Method::kBare}) {
    try {
      pcgl::run_stream(s, cfg, m);
      FAIL("expected an error");
    } catch (const pcgl::Error& e) {
      CHECK(e.code() == pcgl::ErrorCode::kInvalidArgument);
    }
  }
  pcgl::TaskStream empty;
  CHECK_THROWS_AS(pcgl::run_stream(empty, cfg, Method::kJoint), pcgl::Error);
  pcgl::TrainConfig bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(pcgl::run_stream(four_task_stream(0), bad, Method::kPromptCgl), pcgl::Error);
}

TEST_CASE("prompt seed differs per task") {
  CHECK(pcgl::prompt_seed(0, 1) != pcgl::prompt_seed(0, 2));
  CHECK(pcgl::prompt_seed(1, 1) != pcgl::prompt_seed(0, 1));
}
