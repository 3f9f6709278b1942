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

#include "backbone.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"
#include "jsonio.hpp"

namespace pcgl {

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_in, fan_out);
  for (double& x : w.values()) x = dist(rng);
  return w;
}

std::size_t input_multiplier(BackboneKind kind) { return kind == BackboneKind::kSage ? 2 : 1; }

}  // namespace

BackboneParams make_backbone(BackboneKind kind, std::size_t feature_dim, std::size_t hidden_dim,
                             std::mt19937_64& rng) {
  if (feature_dim == 0 || hidden_dim == 0)
    fail(ErrorCode::kInvalidArgument, "backbone dimensions must be positive");
  BackboneParams p;
  p.kind = kind;
  const std::size_t m = input_multiplier(kind);
  p.w1 = ParamTensor(glorot_uniform(m * feature_dim, hidden_dim, rng));
  p.w2 = ParamTensor(glorot_uniform(m * hidden_dim, hidden_dim, rng));
  return p;
}

PredictionLayer make_prediction_layer(std::size_t hidden_dim, std::size_t num_classes,
                                      std::mt19937_64& rng) {
  PredictionLayer head;
  head.weight = ParamTensor(glorot_uniform(hidden_dim, num_classes, rng));
  head.bias = ParamTensor(Matrix(1, num_classes));
  return head;
}

Model make_model(BackboneKind kind, std::size_t feature_dim, std::size_t hidden_dim,
                 std::size_t num_classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Model m;
  m.backbone = make_backbone(kind, feature_dim, hidden_dim, rng);
  m.head = make_prediction_layer(hidden_dim, num_classes, rng);
  return m;
}

const CsrMatrix& propagation_operator(const TaskView& task, BackboneKind kind) {
  return kind == BackboneKind::kSage ? task.mean_adjacency : task.adjacency;
}

Matrix gnn_layer_forward(BackboneKind kind, const CsrMatrix& op, const Matrix& x,
                         const ParamTensor& w, GnnLayerCache* cache) {
  if (kind == BackboneKind::kGcn) {
    if (x.cols() != w.value.rows())
      fail(ErrorCode::kInvalidArgument, "GCN layer: input width does not match weight rows");
    Matrix propagated = matmul(x, w.value);
    Matrix pre = spmm(op, propagated);
    if (cache) {
      cache->input = x;
      cache->propagated = std::move(propagated);
      cache->pre_activation = pre;
    }
    return pre;
  }
  if (2 * x.cols() != w.value.rows())
    fail(ErrorCode::kInvalidArgument, "SAGE layer: input width does not match weight rows");
  Matrix cat = hconcat(x, spmm(op, x));
  Matrix pre = matmul(cat, w.value);
  if (cache) {
    cache->input = std::move(cat);
    cache->pre_activation = pre;
  }
  return pre;
}

Matrix gnn_layer_backward(BackboneKind kind, const CsrMatrix& op, const GnnLayerCache& cache,
                          const Matrix& dpre, const ParamTensor& w, Matrix* w_grad) {
  if (kind == BackboneKind::kGcn) {
    const Matrix dprop = spmm_transposed(op, dpre);
    if (w_grad) add_inplace(*w_grad, matmul_tn(cache.input, dprop));
    return matmul_nt(dprop, w.value);
  }
  if (w_grad) add_inplace(*w_grad, matmul_tn(cache.input, dpre));
  const Matrix dcat = matmul_nt(dpre, w.value);
  auto [dself, dagg] = hsplit(dcat, dcat.cols() / 2);
  add_inplace(dself, spmm_transposed(op, dagg));
  return dself;
}

Matrix layer1_forward(const Matrix& x, const CsrMatrix& op, const BackboneParams& p) {
  return relu_forward(gnn_layer_forward(p.kind, op, x, p.w1));
}

Matrix head_forward(const Matrix& x2, const PredictionLayer& head) {
  Matrix logits = matmul(x2, head.weight.value);
  const auto& b = head.bias.value.values();
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
  return logits;
}

Matrix head_backward(const Matrix& x2, const Matrix& dlogits, PredictionLayer& head) {
  if (!head.weight.frozen) add_inplace(head.weight.grad, matmul_tn(x2, dlogits));
  if (!head.bias.frozen) {
    auto& db = head.bias.grad.values();
    for (std::size_t i = 0; i < dlogits.rows(); ++i) {
      auto r = dlogits.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
    }
  }
  return matmul_nt(dlogits, head.weight.value);
}

Matrix layer2_and_head_forward(const Matrix& x1p, const CsrMatrix& op, const BackboneParams& p,
                               const PredictionLayer& head) {
  return head_forward(relu_forward(gnn_layer_forward(p.kind, op, x1p, p.w2)), head);
}

Matrix mask_logits(const Matrix& logits, std::span<const int> classes) {
  if (classes.empty()) fail(ErrorCode::kInvalidArgument, "mask_logits: empty class set");
  std::vector<bool> keep(logits.cols(), false);
  for (int c : classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= logits.cols())
      fail(ErrorCode::kInvalidArgument, "mask_logits: class id outside the head");
    keep[static_cast<std::size_t>(c)] = true;
  }
  // Diverged weights show up here first; report them as numeric, not as a mask problem.
  if (!logits.all_finite()) fail(ErrorCode::kNumeric, "non-finite logits");
  Matrix out = logits;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j)
      if (!keep[j]) r[j] = kNegInf;
  }
  return out;
}

double masked_accuracy(const Matrix& masked_logits, std::span<const int> labels,
                       std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    auto z = masked_logits.row(r);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < z.size(); ++j)
      if (z[j] > z[arg]) arg = j;
    if (static_cast<int>(arg) == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

TrainLog train_backbone(std::span<const TaskView* const> tasks, Model& model, double lr,
                        double weight_decay, const Schedule& schedule, std::string phase,
                        std::size_t log_task_id) {
  if (tasks.empty()) fail(ErrorCode::kInvalidArgument, "train_backbone: no tasks");
  TrainLog log;
  log.task_id = log_task_id;
  log.phase = std::move(phase);

  Optimizer opt;
  opt.add(model.backbone.w1, lr, weight_decay);
  opt.add(model.backbone.w2, lr, weight_decay);
  opt.add(model.head.weight, lr, weight_decay);
  opt.add(model.head.bias, lr, weight_decay);

  std::size_t total_train = 0, total_val = 0;
  for (const TaskView* t : tasks) {
    total_train += t->split.train.size();
    total_val += t->split.val.size();
  }

  auto pass = [&](bool with_grad) {
    EpochMetrics m;
    const BackboneKind kind = model.backbone.kind;
    double val_correct = 0.0;
    for (const TaskView* t : tasks) {
      const CsrMatrix& op = propagation_operator(*t, kind);
      GnnLayerCache c1, c2;
      const Matrix x1 = relu_forward(gnn_layer_forward(kind, op, t->features, model.backbone.w1, &c1));
      const Matrix x2 = relu_forward(gnn_layer_forward(kind, op, x1, model.backbone.w2, &c2));
      const Matrix logits = mask_logits(head_forward(x2, model.head), t->classes);

      const double train_w = static_cast<double>(t->split.train.size()) / static_cast<double>(total_train);
      LossResult train = cross_entropy(logits, t->labels, t->split.train);
      m.train_loss += train.loss * train_w;
      if (!t->split.val.empty()) {
        const double val_w = static_cast<double>(t->split.val.size()) / static_cast<double>(total_val);
        m.val_loss += cross_entropy(logits, t->labels, t->split.val).loss * val_w;
        val_correct += masked_accuracy(logits, t->labels, t->split.val) *
                       static_cast<double>(t->split.val.size());
      }
      if (!with_grad) continue;
      for (double& g : train.dlogits.values()) g *= train_w;
      const Matrix dx2 = head_backward(x2, train.dlogits, model.head);
      const Matrix dx1 = gnn_layer_backward(kind, op, c2, relu_backward(c2.pre_activation, dx2),
                                            model.backbone.w2, &model.backbone.w2.grad);
      gnn_layer_backward(kind, op, c1, relu_backward(c1.pre_activation, dx1), model.backbone.w1,
                         &model.backbone.w1.grad);
    }
    m.val_acc = total_val ? val_correct / static_cast<double>(total_val) : 0.0;
    return m;
  };

  train_with_early_stopping(
      schedule, opt, [&] { return pass(true); }, [&] { return pass(false); }, log);
  return log;
}

PretrainResult pretrain(const TaskView& task0, std::size_t num_classes, const TrainConfig& cfg,
                        std::uint64_t seed) {
  cfg.validate();
  PretrainResult out;
  out.model = make_model(cfg.backbone, task0.features.cols(), cfg.hidden_dim, num_classes, seed);
  const TaskView* tasks[] = {&task0};
  out.log = train_backbone(tasks, out.model, cfg.pretrain_lr, cfg.pretrain_wd,
                           {cfg.max_epochs, cfg.patience}, "pretrain", task0.task_id);
  out.model.backbone.freeze();
  return out;
}

namespace {

constexpr const char* kCheckpointFormat = "promptcgl.checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  jsonio::write_file(path, {{"format", kCheckpointFormat},
                            {"version", kCheckpointVersion},
                            {"variant", to_string(model.backbone.kind)},
                            {"backbone_frozen", model.backbone.frozen()},
                            {"w1", jsonio::matrix_to_json(model.backbone.w1.value)},
                            {"w2", jsonio::matrix_to_json(model.backbone.w2.value)},
                            {"head_weight", jsonio::matrix_to_json(model.head.weight.value)},
                            {"head_bias", jsonio::matrix_to_json(model.head.bias.value)}});
}

Model load_checkpoint(const std::filesystem::path& path) {
  const auto j = jsonio::read_file(path);
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat ||
        j.at("version").get<int>() != kCheckpointVersion)
      fail(ErrorCode::kParse, path.string() + ": not a version-1 checkpoint");
    const auto kind = parse_backbone(j.at("variant").get<std::string>());
    if (!kind) fail(ErrorCode::kParse, path.string() + ": unknown backbone variant");
    Model m;
    m.backbone.kind = *kind;
    m.backbone.w1 = ParamTensor(jsonio::matrix_from_json(j.at("w1")));
    m.backbone.w2 = ParamTensor(jsonio::matrix_from_json(j.at("w2")));
    m.head.weight = ParamTensor(jsonio::matrix_from_json(j.at("head_weight")));
    m.head.bias = ParamTensor(jsonio::matrix_from_json(j.at("head_bias")));
    if (j.at("backbone_frozen").get<bool>()) m.backbone.freeze();
    const std::size_t mult = input_multiplier(*kind);
    const std::size_t dh = m.backbone.w2.value.cols();
    if (m.backbone.w1.value.cols() != dh || m.backbone.w2.value.rows() != mult * dh ||
        m.head.weight.value.rows() != dh || m.head.bias.value.rows() != 1 ||
        m.head.bias.value.cols() != m.head.weight.value.cols() || m.backbone.w1.value.rows() % mult)
      fail(ErrorCode::kParse, path.string() + ": inconsistent checkpoint shapes");
    return m;
  } catch (const jsonio::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace pcgl
