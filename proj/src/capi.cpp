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

#include "promptcgl/promptcgl.h"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <string_view>

#include "backbone.hpp"
#include "config.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "graph.hpp"
#include "jsonio.hpp"
#include "textio.hpp"

struct pcgl_graph {
  pcgl::Graph graph;
};

struct pcgl_stream {
  pcgl::TaskStream stream;
};

struct pcgl_config {
  pcgl::TrainConfig config;
};

struct pcgl_run {
  pcgl::RunResult result;
};

struct pcgl_model {
  pcgl::Model model;
  std::optional<pcgl::PromptBank> bank;
};

namespace {

thread_local std::string g_last_error;

pcgl_status to_status(pcgl::ErrorCode code) {
  switch (code) {
    case pcgl::ErrorCode::kInvalidArgument: return PCGL_ERR_INVALID_ARGUMENT;
    case pcgl::ErrorCode::kIo: return PCGL_ERR_IO;
    case pcgl::ErrorCode::kParse: return PCGL_ERR_PARSE;
    case pcgl::ErrorCode::kNumeric: return PCGL_ERR_NUMERIC;
    case pcgl::ErrorCode::kNotFound: return PCGL_ERR_NOT_FOUND;
    case pcgl::ErrorCode::kState: return PCGL_ERR_STATE;
  }
  return PCGL_ERR_INTERNAL;
}

pcgl_status set_error(pcgl_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `fn` and converts any exception into a status code.
template <typename Fn>
pcgl_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return PCGL_OK;
  } catch (const pcgl::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PCGL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PCGL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(PCGL_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) pcgl::fail(pcgl::ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    pcgl::fail(pcgl::ErrorCode::kInvalidArgument,
               "config: " + std::string(key) + " expects a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  std::vector<double> vals;
  if (v.empty() || !pcgl::text::parse_reals(v, vals) || vals.size() != 1)
    pcgl::fail(pcgl::ErrorCode::kInvalidArgument,
               "config: " + std::string(key) + " expects a number, got '" + std::string(v) + "'");
  return vals[0];
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  pcgl::fail(pcgl::ErrorCode::kInvalidArgument,
             "config: " + std::string(key) + " expects true or false, got '" + std::string(v) + "'");
}

void config_set(pcgl::TrainConfig& c, std::string_view key, std::string_view v) {
  if (key == "k") c.k = parse_count(key, v);
  else if (key == "d_h") c.hidden_dim = parse_count(key, v);
  else if (key == "max_epochs") c.max_epochs = parse_count(key, v);
  else if (key == "patience") c.patience = parse_count(key, v);
  else if (key == "seed") c.seed = parse_count(key, v);
  else if (key == "pretrain_lr") c.pretrain_lr = parse_real(key, v);
  else if (key == "pretrain_wd") c.pretrain_wd = parse_real(key, v);
  else if (key == "prompt_lr") c.prompt_lr = parse_real(key, v);
  else if (key == "prompt_wd") c.prompt_wd = parse_real(key, v);
  else if (key == "head_lr") c.head_lr = parse_real(key, v);
  else if (key == "head_wd") c.head_wd = parse_real(key, v);
  else if (key == "use_node_prompts") c.use_node_prompts = parse_bool(key, v);
  else if (key == "use_subgraph_prompts") c.use_subgraph_prompts = parse_bool(key, v);
  else if (key == "freeze_head_after_task") c.freeze_head_after_task = parse_bool(key, v);
  else if (key == "backbone") {
    auto b = pcgl::parse_backbone(v);
    if (!b) pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "config: unknown backbone '" + std::string(v) + "'");
    c.backbone = *b;
  } else if (key == "pg_mode") {
    auto m = pcgl::parse_pg_mode(v);
    if (!m) pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "config: unknown pg_mode '" + std::string(v) + "'");
    c.pg_mode = *m;
  } else {
    pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "config: unknown key '" + std::string(key) + "'");
  }
}

std::string real_text(double v) {
  std::string s;
  pcgl::text::append_real(s, v);
  return s;
}

std::string config_get(const pcgl::TrainConfig& c, std::string_view key) {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  if (key == "k") return std::to_string(c.k);
  if (key == "d_h") return std::to_string(c.hidden_dim);
  if (key == "max_epochs") return std::to_string(c.max_epochs);
  if (key == "patience") return std::to_string(c.patience);
  if (key == "seed") return std::to_string(c.seed);
  if (key == "pretrain_lr") return real_text(c.pretrain_lr);
  if (key == "pretrain_wd") return real_text(c.pretrain_wd);
  if (key == "prompt_lr") return real_text(c.prompt_lr);
  if (key == "prompt_wd") return real_text(c.prompt_wd);
  if (key == "head_lr") return real_text(c.head_lr);
  if (key == "head_wd") return real_text(c.head_wd);
  if (key == "use_node_prompts") return b(c.use_node_prompts);
  if (key == "use_subgraph_prompts") return b(c.use_subgraph_prompts);
  if (key == "freeze_head_after_task") return b(c.freeze_head_after_task);
  if (key == "backbone") return pcgl::to_string(c.backbone);
  if (key == "pg_mode") return pcgl::to_string(c.pg_mode);
  pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "config: unknown key '" + std::string(key) + "'");
}

const pcgl::PromptBank& require_bank(const pcgl_run* run) {
  if (run->result.method != pcgl::Method::kPromptCgl)
    pcgl::fail(pcgl::ErrorCode::kState, "only PromptCGL runs keep a prompt bank");
  return run->result.bank;
}

pcgl::jsonio::json train_log_json(const std::vector<pcgl::TrainLog>& logs) {
  auto out = pcgl::jsonio::json::array();
  for (const auto& log : logs) {
    auto epochs = pcgl::jsonio::json::array();
    for (const auto& e : log.epochs)
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_acc", e.val_acc},
                        {"val_loss", e.val_loss}});
    out.push_back({{"task_id", log.task_id},
                   {"phase", log.phase},
                   {"best_epoch", log.best_epoch},
                   {"best_val_acc", log.best_val_acc},
                   {"epochs", std::move(epochs)}});
  }
  return out;
}

}  // namespace

extern "C" {

const char* pcgl_version(void) { return "0.1.0"; }

const char* pcgl_status_name(pcgl_status status) {
  switch (status) {
    case PCGL_OK: return "ok";
    case PCGL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PCGL_ERR_IO: return "i/o error";
    case PCGL_ERR_PARSE: return "parse error";
    case PCGL_ERR_NUMERIC: return "numeric failure";
    case PCGL_ERR_NOT_FOUND: return "not found";
    case PCGL_ERR_STATE: return "invalid state";
    case PCGL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pcgl_last_error(void) { return g_last_error.c_str(); }

// ---- graphs

pcgl_status pcgl_graph_load(const char* edges_path, const char* features_path,
                            const char* labels_path, pcgl_graph** out) {
  return guarded([&] {
    require(edges_path, "edges_path");
    require(features_path, "features_path");
    require(labels_path, "labels_path");
    require(out, "out");
    *out = nullptr;
    auto g = std::make_unique<pcgl_graph>();
    g->graph = pcgl::load_graph(edges_path, features_path, labels_path);
    *out = g.release();
  });
}

pcgl_status pcgl_graph_generate_sbm(size_t blocks, size_t nodes_per_block, double p_in,
                                    double p_out, size_t feature_dim, double feature_shift,
                                    uint64_t seed, pcgl_graph** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto g = std::make_unique<pcgl_graph>();
    g->graph = pcgl::generate_sbm({blocks, nodes_per_block, p_in, p_out, feature_dim, feature_shift, seed});
    *out = g.release();
  });
}

pcgl_status pcgl_graph_save(const pcgl_graph* graph, const char* edges_path,
                            const char* features_path, const char* labels_path) {
  return guarded([&] {
    require(graph, "graph");
    require(edges_path, "edges_path");
    require(features_path, "features_path");
    require(labels_path, "labels_path");
    pcgl::save_graph(graph->graph, edges_path, features_path, labels_path);
  });
}

size_t pcgl_graph_num_nodes(const pcgl_graph* graph) { return graph ? graph->graph.num_nodes : 0; }
size_t pcgl_graph_num_edges(const pcgl_graph* graph) { return graph ? graph->graph.edges.size() : 0; }
size_t pcgl_graph_feature_dim(const pcgl_graph* graph) {
  return graph ? graph->graph.feature_dim() : 0;
}
size_t pcgl_graph_num_classes(const pcgl_graph* graph) {
  return graph ? graph->graph.num_classes : 0;
}
void pcgl_graph_free(pcgl_graph* graph) { delete graph; }

// ---- streams

pcgl_status pcgl_stream_create(const pcgl_graph* graph, size_t classes_per_task, const int* order,
                               size_t order_len, uint64_t split_seed, size_t max_tasks,
                               pcgl_stream** out) {
  return guarded([&] {
    require(graph, "graph");
    require(out, "out");
    *out = nullptr;
    if (order_len && !order) pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "order is null but order_len > 0");
    auto s = std::make_unique<pcgl_stream>();
    s->stream = pcgl::split_into_tasks(graph->graph, classes_per_task,
                                       std::span<const int>(order, order ? order_len : 0), split_seed);
    if (max_tasks && s->stream.tasks.size() > max_tasks) s->stream.tasks.resize(max_tasks);
    *out = s.release();
  });
}

size_t pcgl_stream_num_tasks(const pcgl_stream* stream) { return stream ? stream->stream.size() : 0; }

size_t pcgl_stream_task_num_nodes(const pcgl_stream* stream, size_t task_id) {
  if (!stream || task_id >= stream->stream.size()) return 0;
  return stream->stream.tasks[task_id].num_nodes();
}

size_t pcgl_stream_num_dropped_classes(const pcgl_stream* stream) {
  return stream ? stream->stream.dropped_classes.size() : 0;
}

void pcgl_stream_free(pcgl_stream* stream) { delete stream; }

pcgl_status pcgl_class_order_shuffled(size_t num_classes, uint64_t seed, int* out) {
  return guarded([&] {
    if (num_classes) require(out, "out");
    const auto order = pcgl::shuffled_class_order(num_classes, seed);
    std::copy(order.begin(), order.end(), out);
  });
}

// ---- configuration

pcgl_status pcgl_config_create(pcgl_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pcgl_config();
  });
}

pcgl_status pcgl_config_set(pcgl_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    pcgl::TrainConfig next = config->config;
    config_set(next, key, value);
    next.validate();
    config->config = next;
  });
}

pcgl_status pcgl_config_set_double(pcgl_config* config, const char* key, double value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    pcgl::TrainConfig next = config->config;
    config_set(next, key, real_text(value));
    next.validate();
    config->config = next;
  });
}

pcgl_status pcgl_config_set_int(pcgl_config* config, const char* key, int64_t value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    pcgl::TrainConfig next = config->config;
    config_set(next, key, std::to_string(value));
    next.validate();
    config->config = next;
  });
}

pcgl_status pcgl_config_get(const pcgl_config* config, const char* key, char* buffer,
                            size_t buffer_len) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(buffer, "buffer");
    const std::string v = config_get(config->config, key);
    if (v.size() + 1 > buffer_len)
      pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "buffer too small for config value");
    std::memcpy(buffer, v.c_str(), v.size() + 1);
  });
}

pcgl_status pcgl_config_validate(const pcgl_config* config) {
  return guarded([&] {
    require(config, "config");
    config->config.validate();
  });
}

void pcgl_config_free(pcgl_config* config) { delete config; }

// ---- runs

pcgl_status pcgl_run_stream(const pcgl_stream* stream, const pcgl_config* config,
                            const char* method, pcgl_run** out) {
  return guarded([&] {
    require(stream, "stream");
    require(config, "config");
    require(method, "method");
    require(out, "out");
    *out = nullptr;
    const auto m = pcgl::parse_method(method);
    if (!m) pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "unknown method '" + std::string(method) + "'");
    auto run = std::make_unique<pcgl_run>();
    run->result = pcgl::run_stream(stream->stream, config->config, *m);
    *out = run.release();
  });
}

size_t pcgl_run_num_tasks(const pcgl_run* run) { return run ? run->result.matrix.num_tasks() : 0; }

pcgl_status pcgl_run_accuracy(const pcgl_run* run, size_t p, size_t q, double* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    if (!run->result.matrix.filled(p, q))
      pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "no accuracy for that (p, q)");
    *out = run->result.matrix.at(p, q);
  });
}

pcgl_status pcgl_run_ap(const pcgl_run* run, double* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = pcgl::compute_ap(run->result.matrix);
  });
}

pcgl_status pcgl_run_af(const pcgl_run* run, double* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = pcgl::compute_af(run->result.matrix);
  });
}

uint64_t pcgl_run_backbone_hash(const pcgl_run* run) {
  return run ? run->result.model.backbone.hash() : 0;
}

uint64_t pcgl_run_backbone_hash_after_pretrain(const pcgl_run* run) {
  return run ? run->result.backbone_hash_after_pretrain : 0;
}

pcgl_status pcgl_run_memory(const pcgl_run* run, size_t* floats_per_task, double* node_equivalents) {
  return guarded([&] {
    require(run, "run");
    if (!run->result.memory) pcgl::fail(pcgl::ErrorCode::kState, "only PromptCGL runs report prompt memory");
    if (floats_per_task) *floats_per_task = run->result.memory->floats_per_task;
    if (node_equivalents) *node_equivalents = run->result.memory->node_equivalents;
  });
}

pcgl_status pcgl_run_write_matrix_csv(const pcgl_run* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    pcgl::export_matrix_csv(run->result.matrix, path);
  });
}

pcgl_status pcgl_run_write_heatmap_svg(const pcgl_run* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    pcgl::render_heatmap(run->result.matrix, path);
  });
}

pcgl_status pcgl_run_write_metrics_json(const pcgl_run* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    pcgl::write_metrics_json(run->result.matrix, path);
  });
}

pcgl_status pcgl_run_write_checkpoint(const pcgl_run* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    pcgl::save_checkpoint(run->result.model, path);
  });
}

pcgl_status pcgl_run_write_prompt_bank(const pcgl_run* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    require_bank(run).save(path);
  });
}

pcgl_status pcgl_run_write_memory_report(const pcgl_run* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    if (!run->result.memory) pcgl::fail(pcgl::ErrorCode::kState, "only PromptCGL runs report prompt memory");
    pcgl::write_memory_report(*run->result.memory, path);
  });
}

pcgl_status pcgl_run_write_train_log(const pcgl_run* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    pcgl::jsonio::write_file(path, train_log_json(run->result.logs));
  });
}

void pcgl_run_free(pcgl_run* run) { delete run; }

// ---- saved models

pcgl_status pcgl_model_load(const char* checkpoint_path, const char* bank_path, pcgl_model** out) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<pcgl_model>();
    m->model = pcgl::load_checkpoint(checkpoint_path);
    if (bank_path) m->bank = pcgl::PromptBank::load(bank_path);
    *out = m.release();
  });
}

pcgl_status pcgl_model_export_embeddings(const pcgl_model* model, const pcgl_stream* stream,
                                         size_t task_id, int with_prompts, const pcgl_config* config,
                                         const char* csv_path, int* degenerate) {
  return guarded([&] {
    require(model, "model");
    require(stream, "stream");
    require(csv_path, "csv_path");
    if (task_id >= stream->stream.size())
      pcgl::fail(pcgl::ErrorCode::kNotFound, "stream has no task " + std::to_string(task_id));
    const pcgl::TaskView& task = stream->stream.tasks[task_id];
    if (task.features.cols() * (model->model.backbone.kind == pcgl::BackboneKind::kSage ? 2 : 1) !=
        model->model.backbone.w1.value.rows())
      pcgl::fail(pcgl::ErrorCode::kInvalidArgument, "checkpoint does not match the stream's feature width");
    const pcgl::PromptOptions opts =
        config ? pcgl::prompt_options(config->config) : pcgl::PromptOptions{};
    const pcgl::TaskPrompts* prompts = nullptr;
    if (with_prompts) {
      if (!model->bank) pcgl::fail(pcgl::ErrorCode::kNotFound, "no prompt bank loaded");
      prompts = model->bank->retrieve(task_id);
    }
    const pcgl::Matrix emb = pcgl::node_embeddings(task, model->model, prompts, opts);
    const pcgl::PcaResult pca = pcgl::pca_embed(emb, 2);
    const bool prompted = prompts && (opts.use_node || opts.use_subgraph);
    std::vector<pcgl::EmbeddingRow> rows;
    rows.reserve(task.num_nodes());
    for (std::size_t i = 0; i < task.num_nodes(); ++i)
      rows.push_back({task.node_ids[i], pca.projection(i, 0), pca.projection(i, 1), task.labels[i], prompted});
    pcgl::write_embeddings_csv(rows, csv_path);
    if (degenerate) *degenerate = pca.degenerate ? 1 : 0;
  });
}

void pcgl_model_free(pcgl_model* model) { delete model; }

}  // extern "C"
