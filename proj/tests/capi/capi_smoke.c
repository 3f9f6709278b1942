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

/* Plain C consumer of the shared library: builds, runs, frees. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "promptcgl/promptcgl.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: EXPECT(%s) failed; last error: %s\n",    \
              __FILE__, __LINE__, #cond, pcgl_last_error());           \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

int main(void) {
  pcgl_graph* g = NULL;
  pcgl_stream* s = NULL;
  pcgl_config* cfg = NULL;
  pcgl_run* run = NULL;
  double ap = -1.0, af = -1.0, acc = -1.0;
  size_t floats = 0;
  double node_eq = 0.0;
  char buf[64];

  EXPECT(strlen(pcgl_version()) > 0);
  EXPECT(strcmp(pcgl_status_name(PCGL_ERR_NUMERIC), "numeric failure") == 0);

  /* p_out above p_in is rejected and leaves the handle alone. */
  EXPECT(pcgl_graph_generate_sbm(4, 20, 0.0, 0.5, 8, 2.0, 0, &g) == PCGL_ERR_INVALID_ARGUMENT);
  EXPECT(g == NULL);
  EXPECT(strlen(pcgl_last_error()) > 0);

  EXPECT(pcgl_graph_generate_sbm(4, 20, 0.3, 0.01, 8, 2.0, 0, &g) == PCGL_OK);
  EXPECT(pcgl_graph_num_nodes(g) == 80);
  EXPECT(pcgl_graph_num_classes(g) == 4);
  EXPECT(pcgl_graph_feature_dim(g) == 8);

  EXPECT(pcgl_stream_create(g, 2, NULL, 0, 0, 0, &s) == PCGL_OK);
  EXPECT(pcgl_stream_num_tasks(s) == 2);
  EXPECT(pcgl_stream_task_num_nodes(s, 1) == 40);

  EXPECT(pcgl_config_create(&cfg) == PCGL_OK);
  EXPECT(pcgl_config_set_int(cfg, "max_epochs", 40) == PCGL_OK);
  EXPECT(pcgl_config_set(cfg, "backbone", "SAGE") == PCGL_OK);
  EXPECT(pcgl_config_set(cfg, "k", "zero") == PCGL_ERR_INVALID_ARGUMENT);
  EXPECT(pcgl_config_set_int(cfg, "no_such_key", 1) == PCGL_ERR_INVALID_ARGUMENT);
  EXPECT(pcgl_config_get(cfg, "backbone", buf, sizeof buf) == PCGL_OK);
  EXPECT(strcmp(buf, "SAGE") == 0);
  EXPECT(pcgl_config_get(cfg, "backbone", buf, 2) == PCGL_ERR_INVALID_ARGUMENT);

  EXPECT(pcgl_run_stream(s, cfg, "Nonsense", &run) == PCGL_ERR_INVALID_ARGUMENT);
  EXPECT(pcgl_run_stream(s, cfg, "PromptCGL", &run) == PCGL_OK);
  EXPECT(pcgl_run_num_tasks(run) == 2);
  EXPECT(pcgl_run_ap(run, &ap) == PCGL_OK);
  EXPECT(pcgl_run_af(run, &af) == PCGL_OK);
  EXPECT(ap >= 0.0 && ap <= 1.0);
  EXPECT(af == 0.0);
  EXPECT(pcgl_run_accuracy(run, 0, 1, &acc) == PCGL_ERR_INVALID_ARGUMENT);
  EXPECT(pcgl_run_backbone_hash(run) == pcgl_run_backbone_hash_after_pretrain(run));
  EXPECT(pcgl_run_memory(run, &floats, &node_eq) == PCGL_OK);
  /* k = 3, d_f = 8, d_h = 32 */
  EXPECT(floats == 3 * 40 + 40 + 6);
  EXPECT(fabs(node_eq - (double)floats / 8.0) < 1e-12);

  EXPECT(pcgl_run_write_matrix_csv(run, "/nonexistent_dir/x/m.csv") == PCGL_ERR_IO);

  pcgl_run_free(run);
  pcgl_config_free(cfg);
  pcgl_stream_free(s);
  pcgl_graph_free(g);
  /* Freeing NULL is a no-op. */
  pcgl_graph_free(NULL);

  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi smoke: ok\n");
  return 0;
}
