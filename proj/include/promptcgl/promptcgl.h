/*
 * Copyright 2026 The promptcgl Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the promptcgl continual graph learning engine.
 *
 * All objects are opaque handles created by a *_create / *_load / *_run call
 * and released with the matching *_free (free functions accept NULL).
 * Functions that can fail return a pcgl_status; on failure the message is
 * available from pcgl_last_error() on the calling thread until the next
 * failing call. Paths are UTF-8.
 */

#ifndef PROMPTCGL_PROMPTCGL_H_
#define PROMPTCGL_PROMPTCGL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PCGL_BUILDING_LIBRARY)
#    define PCGL_API __declspec(dllexport)
#  else
#    define PCGL_API __declspec(dllimport)
#  endif
#else
#  define PCGL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pcgl_status {
  PCGL_OK = 0,
  PCGL_ERR_INVALID_ARGUMENT = 1,
  PCGL_ERR_IO = 2,
  PCGL_ERR_PARSE = 3,
  PCGL_ERR_NUMERIC = 4,
  PCGL_ERR_NOT_FOUND = 5,
  PCGL_ERR_STATE = 6,
  PCGL_ERR_INTERNAL = 7
} pcgl_status;

typedef struct pcgl_graph pcgl_graph;
typedef struct pcgl_stream pcgl_stream;
typedef struct pcgl_config pcgl_config;
typedef struct pcgl_run pcgl_run;
typedef struct pcgl_model pcgl_model;

PCGL_API const char* pcgl_version(void);
PCGL_API const char* pcgl_status_name(pcgl_status status);
/* Message of the last failure on this thread; "" if none. */
PCGL_API const char* pcgl_last_error(void);

/* ---- graphs ---------------------------------------------------------- */

PCGL_API pcgl_status pcgl_graph_load(const char* edges_path, const char* features_path,
                                     const char* labels_path, pcgl_graph** out);
PCGL_API pcgl_status pcgl_graph_generate_sbm(size_t blocks, size_t nodes_per_block, double p_in,
                                             double p_out, size_t feature_dim, double feature_shift,
                                             uint64_t seed, pcgl_graph** out);
PCGL_API pcgl_status pcgl_graph_save(const pcgl_graph* graph, const char* edges_path,
                                     const char* features_path, const char* labels_path);
PCGL_API size_t pcgl_graph_num_nodes(const pcgl_graph* graph);
PCGL_API size_t pcgl_graph_num_edges(const pcgl_graph* graph);
PCGL_API size_t pcgl_graph_feature_dim(const pcgl_graph* graph);
PCGL_API size_t pcgl_graph_num_classes(const pcgl_graph* graph);
PCGL_API void pcgl_graph_free(pcgl_graph* graph);

/* ---- task streams ---------------------------------------------------- */

/* `order` may be NULL (ascending class ids). max_tasks = 0 keeps every task. */
PCGL_API pcgl_status pcgl_stream_create(const pcgl_graph* graph, size_t classes_per_task,
                                        const int* order, size_t order_len, uint64_t split_seed,
                                        size_t max_tasks, pcgl_stream** out);
PCGL_API size_t pcgl_stream_num_tasks(const pcgl_stream* stream);
PCGL_API size_t pcgl_stream_task_num_nodes(const pcgl_stream* stream, size_t task_id);
PCGL_API size_t pcgl_stream_num_dropped_classes(const pcgl_stream* stream);
PCGL_API void pcgl_stream_free(pcgl_stream* stream);
/* Seeded permutation of 0..num_classes-1 written to `out` (num_classes ints). */
PCGL_API pcgl_status pcgl_class_order_shuffled(size_t num_classes, uint64_t seed, int* out);

/* ---- configuration --------------------------------------------------- */

/*
 * Keys: k, d_h, backbone (GCN|SAGE), pretrain_lr, pretrain_wd, prompt_lr,
 * prompt_wd, head_lr, head_wd, max_epochs, patience, seed,
 * use_node_prompts, use_subgraph_prompts, pg_mode (personalized|uniform),
 * freeze_head_after_task. Booleans accept true/false/1/0.
 */
PCGL_API pcgl_status pcgl_config_create(pcgl_config** out);
PCGL_API pcgl_status pcgl_config_set(pcgl_config* config, const char* key, const char* value);
PCGL_API pcgl_status pcgl_config_set_double(pcgl_config* config, const char* key, double value);
PCGL_API pcgl_status pcgl_config_set_int(pcgl_config* config, const char* key, int64_t value);
/* Writes the value as text; fails with PCGL_ERR_INVALID_ARGUMENT if it does not fit. */
PCGL_API pcgl_status pcgl_config_get(const pcgl_config* config, const char* key, char* buffer,
                                     size_t buffer_len);
PCGL_API pcgl_status pcgl_config_validate(const pcgl_config* config);
PCGL_API void pcgl_config_free(pcgl_config* config);

/* ---- runs ------------------------------------------------------------ */

/* method: PromptCGL, Bare or Joint. */
PCGL_API pcgl_status pcgl_run_stream(const pcgl_stream* stream, const pcgl_config* config,
                                     const char* method, pcgl_run** out);
PCGL_API size_t pcgl_run_num_tasks(const pcgl_run* run);
/* Accuracy of task q after learning task p, q <= p. */
PCGL_API pcgl_status pcgl_run_accuracy(const pcgl_run* run, size_t p, size_t q, double* out);
PCGL_API pcgl_status pcgl_run_ap(const pcgl_run* run, double* out);
/* Fails for single-task runs. */
PCGL_API pcgl_status pcgl_run_af(const pcgl_run* run, double* out);
PCGL_API uint64_t pcgl_run_backbone_hash(const pcgl_run* run);
PCGL_API uint64_t pcgl_run_backbone_hash_after_pretrain(const pcgl_run* run);
/* PromptCGL runs only. */
PCGL_API pcgl_status pcgl_run_memory(const pcgl_run* run, size_t* floats_per_task,
                                     double* node_equivalents);

PCGL_API pcgl_status pcgl_run_write_matrix_csv(const pcgl_run* run, const char* path);
PCGL_API pcgl_status pcgl_run_write_heatmap_svg(const pcgl_run* run, const char* path);
PCGL_API pcgl_status pcgl_run_write_metrics_json(const pcgl_run* run, const char* path);
PCGL_API pcgl_status pcgl_run_write_checkpoint(const pcgl_run* run, const char* path);
/* PromptCGL runs only. */
PCGL_API pcgl_status pcgl_run_write_prompt_bank(const pcgl_run* run, const char* path);
PCGL_API pcgl_status pcgl_run_write_memory_report(const pcgl_run* run, const char* path);
PCGL_API pcgl_status pcgl_run_write_train_log(const pcgl_run* run, const char* path);
PCGL_API void pcgl_run_free(pcgl_run* run);

/* ---- saved models ---------------------------------------------------- */

/* bank_path may be NULL for promptless models. */
PCGL_API pcgl_status pcgl_model_load(const char* checkpoint_path, const char* bank_path,
                                     pcgl_model** out);
/*
 * Forwards one task through the saved model, projects the second-layer
 * representations to two principal components and writes
 * node_id,x,y,label,prompted. `config` (may be NULL) supplies the prompt
 * options. `degenerate` (may be NULL) is set to 1 when the embeddings had
 * zero variance and the projection is all zeros.
 */
PCGL_API pcgl_status pcgl_model_export_embeddings(const pcgl_model* model,
                                                  const pcgl_stream* stream, size_t task_id,
                                                  int with_prompts, const pcgl_config* config,
                                                  const char* csv_path, int* degenerate);
PCGL_API void pcgl_model_free(pcgl_model* model);

#ifdef __cplusplus
}
#endif

#endif /* PROMPTCGL_PROMPTCGL_H_ */
