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

#include "engine.hpp"

#include <random>

#include "error.hpp"

namespace pcgl {

PromptOptions prompt_options(const TrainConfig& cfg) {
  return {cfg.use_node_prompts, cfg.use_subgraph_prompts, cfg.pg_mode};
}

std::uint64_t prompt_seed(std::uint64_t seed, std::size_t task_id) {
  return seed * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL + task_id;
}

Matrix model_forward(const TaskView& task, const Model& model, const TaskPrompts* prompts,
                     const PromptOptions& opts, ForwardPass* pass) {
  const BackboneKind kind = model.backbone.kind;
  const CsrMatrix& op = propagation_operator(task, kind);
  const bool node = prompts && opts.use_node;
  const bool sub = prompts && opts.use_subgraph;

  ForwardPass local;
  ForwardPass& fp = pass ? *pass : local;
  fp.node_applied = node;
  fp.subgraph_applied = sub;

  Matrix x1;
  if (node) {
    const Matrix x0p = apply_node_prompts(task.features, prompts->node, &fp.node_cache, opts.mode);
    x1 = relu_forward(gnn_layer_forward(kind, op, x0p, model.backbone.w1, &fp.layer1));
  } else {
    x1 = relu_forward(gnn_layer_forward(kind, op, task.features, model.backbone.w1, &fp.layer1));
  }
  if (sub) x1 = apply_subgraph_prompts(x1, prompts->subgraph, &fp.subgraph_cache, opts.mode);
  fp.x2 = relu_forward(gnn_layer_forward(kind, op, x1, model.backbone.w2, &fp.layer2));
  return head_forward(fp.x2, model.head);
}

void model_backward(const TaskView& task, Model& model, TaskPrompts* prompts,
                    const ForwardPass& pass, const Matrix& dlogits, bool backbone_grads) {
  if ((pass.node_applied || pass.subgraph_applied) && !prompts)
    fail(ErrorCode::kInvalidArgument, "model_backward: prompts missing for a prompted pass");
  const BackboneKind kind = model.backbone.kind;
  const CsrMatrix& op = propagation_operator(task, kind);
  auto& bb = model.backbone;

  const Matrix dx2 = head_backward(pass.x2, dlogits, model.head);
  Matrix dx1p = gnn_layer_backward(kind, op, pass.layer2, relu_backward(pass.layer2.pre_activation, dx2),
                                   bb.w2, backbone_grads ? &bb.w2.grad : nullptr);
  if (pass.subgraph_applied)
    add_inplace(dx1p, pg_backward(pass.subgraph_cache, prompts->subgraph, dx1p));
  if (!pass.node_applied && !backbone_grads) return;
  const Matrix dx0p = gnn_layer_backward(kind, op, pass.layer1,
                                         relu_backward(pass.layer1.pre_activation, dx1p), bb.w1,
                                         backbone_grads ? &bb.w1.grad : nullptr);
  if (pass.node_applied) pg_backward(pass.node_cache, prompts->node, dx0p);
}

namespace {

struct HeadPin {
  std::vector<int> classes;
  Matrix weight_cols;  // d_h x |classes|
  std::vector<double> bias;
};

HeadPin capture_pin(const PredictionLayer& head, std::span<const int> classes) {
  HeadPin pin;
  pin.classes.assign(classes.begin(), classes.end());
  const Matrix& w = head.weight.value;
  pin.weight_cols = Matrix(w.rows(), classes.size());
  for (std::size_t j = 0; j < classes.size(); ++j) {
    const auto c = static_cast<std::size_t>(classes[j]);
    if (classes[j] < 0 || c >= w.cols()) fail(ErrorCode::kInvalidArgument, "pinned class outside the head");
    for (std::size_t r = 0; r < w.rows(); ++r) pin.weight_cols(r, j) = w(r, c);
    pin.bias.push_back(head.bias.value(0, c));
  }
  return pin;
}

void restore_pin(PredictionLayer& head, const HeadPin& pin) {
  Matrix& w = head.weight.value;
  for (std::size_t j = 0; j < pin.classes.size(); ++j) {
    const auto c = static_cast<std::size_t>(pin.classes[j]);
    for (std::size_t r = 0; r < w.rows(); ++r) w(r, c) = pin.weight_cols(r, j);
    head.bias.value(0, c) = pin.bias[j];
  }
}

}  // namespace

TrainLog train_task_prompts(const TaskView& task, Model& model, TaskPrompts& prompts,
                            const TrainConfig& cfg, std::span<const int> pinned_classes) {
  if (!model.backbone.frozen()) fail(ErrorCode::kState, "prompt training needs a frozen backbone");
  const PromptOptions opts = prompt_options(cfg);
  TrainLog log;
  log.task_id = task.task_id;
  log.phase = "prompt";

  Optimizer opt;
  auto add_generator = [&](PromptGenerator& gen) {
    opt.add(gen.prompts, cfg.prompt_lr, cfg.prompt_wd);
    if (opts.mode == PgMode::kPersonalized) {
      opt.add(gen.query, cfg.prompt_lr, cfg.prompt_wd);
      opt.add(gen.scale, cfg.prompt_lr, cfg.prompt_wd);
    }
  };
  if (opts.use_node) add_generator(prompts.node);
  if (opts.use_subgraph) add_generator(prompts.subgraph);
  opt.add(model.head.weight, cfg.head_lr, cfg.head_wd);
  opt.add(model.head.bias, cfg.head_lr, cfg.head_wd);

  const HeadPin pin = capture_pin(model.head, pinned_classes);
  if (!pin.classes.empty()) opt.on_step([&] { restore_pin(model.head, pin); });

  auto pass = [&](bool with_grad) {
    ForwardPass fp;
    const Matrix logits = mask_logits(model_forward(task, model, &prompts, opts, &fp), task.classes);
    LossResult train = cross_entropy(logits, task.labels, task.split.train);
    EpochMetrics m;
    m.train_loss = train.loss;
    if (!task.split.val.empty()) {
      m.val_loss = cross_entropy(logits, task.labels, task.split.val).loss;
      m.val_acc = masked_accuracy(logits, task.labels, task.split.val);
    }
    if (with_grad) model_backward(task, model, &prompts, fp, train.dlogits, false);
    return m;
  };

  train_with_early_stopping(
      {cfg.max_epochs, cfg.patience}, opt, [&] { return pass(true); }, [&] { return pass(false); },
      log);
  return log;
}

Inference infer(const TaskView& task, const Model& model, const TaskPrompts* prompts,
                const PromptOptions& opts) {
  const Matrix logits = mask_logits(model_forward(task, model, prompts, opts), task.classes);
  Inference out;
  for (std::size_t r : task.split.test) {
    auto z = logits.row(r);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < z.size(); ++j)
      if (z[j] > z[arg]) arg = j;
    out.predictions.push_back(static_cast<int>(arg));
  }
  out.accuracy = masked_accuracy(logits, task.labels, task.split.test);
  return out;
}

Inference infer(const TaskView& task, const Model& model, const PromptBank& bank,
                const PromptOptions& opts) {
  return infer(task, model, bank.retrieve(task.task_id), opts);
}

Matrix node_embeddings(const TaskView& task, const Model& model, const TaskPrompts* prompts,
                       const PromptOptions& opts) {
  ForwardPass fp;
  model_forward(task, model, prompts, opts, &fp);
  return std::move(fp.x2);
}

namespace {

void check_stream(const TaskStream& stream, Method method) {
  const std::size_t need = method == Method::kJoint ? 1 : 2;
  if (stream.size() < need)
    fail(ErrorCode::kInvalidArgument, to_string(method) + " needs at least " + std::to_string(need) +
                                          " tasks, stream has " + std::to_string(stream.size()));
  for (std::size_t t = 0; t < stream.size(); ++t)
    if (stream.tasks[t].task_id != t) fail(ErrorCode::kInvalidArgument, "task ids must be 0..T-1 in order");
}

void fill_row(RunResult& r, const TaskStream& stream, std::size_t t, const PromptOptions& opts) {
  for (std::size_t q = 0; q <= t; ++q) {
    const TaskView& task = stream.tasks[q];
    const double acc = r.method == Method::kPromptCgl ? infer(task, r.model, r.bank, opts).accuracy
                                                      : infer(task, r.model, nullptr, opts).accuracy;
    r.matrix.set(t, q, acc);
  }
}

void run_prompt_cgl(RunResult& r, const TaskStream& stream, const TrainConfig& cfg,
                    const RunObserver& observer) {
  const PromptOptions opts = prompt_options(cfg);
  PretrainResult pre = pretrain(stream.tasks[0], stream.total_classes, cfg, cfg.seed);
  r.model = std::move(pre.model);
  r.logs.push_back(std::move(pre.log));
  r.backbone_hash_after_pretrain = r.model.backbone.hash();
  if (observer.on_pretrained) observer.on_pretrained(r.model);

  r.bank = PromptBank(cfg.k, stream.tasks[0].features.cols(), cfg.hidden_dim);
  r.bank.store_no_prompt(0);
  fill_row(r, stream, 0, opts);
  if (observer.on_task_end) observer.on_task_end(0, r.model, r.bank);

  std::vector<int> pinned;
  for (std::size_t t = 1; t < stream.size(); ++t) {
    const TaskView& task = stream.tasks[t];
    if (cfg.freeze_head_after_task) {
      const auto& prev = stream.tasks[t - 1].classes;
      pinned.insert(pinned.end(), prev.begin(), prev.end());
    }
    std::mt19937_64 rng(prompt_seed(cfg.seed, t));
    TaskPrompts prompts = make_task_prompts(cfg.k, task.features.cols(), cfg.hidden_dim, rng);
    r.logs.push_back(train_task_prompts(task, r.model, prompts, cfg, pinned));
    r.bank.store(t, prompts);
    r.prompt_hash_at_store[t] = r.bank.retrieve(t)->hash();
    fill_row(r, stream, t, opts);
    if (observer.on_task_end) observer.on_task_end(t, r.model, r.bank);
  }
  r.memory = memory_report(r.bank, stream.tasks[0].features.cols());
}

void run_bare(RunResult& r, const TaskStream& stream, const TrainConfig& cfg,
              const RunObserver& observer) {
  const PromptOptions opts = prompt_options(cfg);
  const Schedule schedule{cfg.max_epochs, cfg.patience};
  r.model = make_model(cfg.backbone, stream.tasks[0].features.cols(), cfg.hidden_dim,
                       stream.total_classes, cfg.seed);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const TaskView* one[] = {&stream.tasks[t]};
    r.logs.push_back(train_backbone(one, r.model, cfg.pretrain_lr, cfg.pretrain_wd, schedule,
                                    t == 0 ? "pretrain" : "bare", t));
    if (t == 0) {
      r.backbone_hash_after_pretrain = r.model.backbone.hash();
      if (observer.on_pretrained) observer.on_pretrained(r.model);
    }
    fill_row(r, stream, t, opts);
    if (observer.on_task_end) observer.on_task_end(t, r.model, r.bank);
  }
}

void run_joint(RunResult& r, const TaskStream& stream, const TrainConfig& cfg,
               const RunObserver& observer) {
  const PromptOptions opts = prompt_options(cfg);
  const Schedule schedule{cfg.max_epochs, cfg.patience};
  std::vector<const TaskView*> seen;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    seen.push_back(&stream.tasks[t]);
    r.model = make_model(cfg.backbone, stream.tasks[0].features.cols(), cfg.hidden_dim,
                         stream.total_classes, cfg.seed);
    r.logs.push_back(train_backbone(seen, r.model, cfg.pretrain_lr, cfg.pretrain_wd, schedule, "joint", t));
    if (t == 0) {
      r.backbone_hash_after_pretrain = r.model.backbone.hash();
      if (observer.on_pretrained) observer.on_pretrained(r.model);
    }
    fill_row(r, stream, t, opts);
    if (observer.on_task_end) observer.on_task_end(t, r.model, r.bank);
  }
}

}  // namespace

RunResult run_stream(const TaskStream& stream, const TrainConfig& cfg, Method method,
                     const RunObserver& observer) {
  cfg.validate();
  check_stream(stream, method);
  RunResult r;
  r.method = method;
  r.matrix = PerformanceMatrix(stream.size());
  switch (method) {
    case Method::kPromptCgl: run_prompt_cgl(r, stream, cfg, observer); break;
    case Method::kBare: run_bare(r, stream, cfg, observer); break;
    case Method::kJoint: run_joint(r, stream, cfg, observer); break;
  }
  return r;
}

}  // namespace pcgl
