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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace pcgl {

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Undirected node-classified graph. Edges are stored once with first < second,
/// sorted, no self-loops. Labels are contiguous class ids 0..num_classes-1.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  Matrix features;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t feature_dim() const noexcept { return features.cols(); }
};

/// Checks every Graph invariant; throws kInvalidArgument on the first violation.
void validate_graph(const Graph& g);

struct LoadReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

/// Reads the three text files (edge list, feature matrix, label column).
Graph load_graph(const std::filesystem::path& edge_path,
                 const std::filesystem::path& feature_path,
                 const std::filesystem::path& label_path, LoadReport* report = nullptr);

/// Writes the graph in the same formats load_graph reads. Features use
/// shortest round-trip decimal form so a reload is bitwise identical.
void save_graph(const Graph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path,
                const std::filesystem::path& label_path);

/// D^{-1/2} (A + I) D^{-1/2} over nodes 0..n-1. Degrees count the self-loop,
/// so isolated nodes get a unit diagonal.
CsrMatrix normalize_adjacency(std::size_t n, std::span<const Edge> edges);

/// D^{-1} (A + I): mean over the closed neighbourhood (GraphSAGE aggregator).
CsrMatrix mean_adjacency(std::size_t n, std::span<const Edge> edges);

struct NodeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Class-induced subgraph for one task. Labels keep their global class ids.
struct TaskView {
  std::size_t task_id = 0;
  std::vector<int> classes;
  std::vector<std::size_t> node_ids;  // original node index of each local node
  Matrix features;
  std::vector<int> labels;
  std::vector<Edge> edges;  // local indices
  CsrMatrix adjacency;       // symmetric-normalized, GCN propagation
  CsrMatrix mean_adjacency;  // row-normalized, SAGE aggregation
  NodeSplit split;

  std::size_t num_nodes() const noexcept { return node_ids.size(); }
};

/// Per-class stratified split: floor(60%) train, floor(20%) val, remainder test.
/// Deterministic in (seed, task_id). Every class needs at least 3 nodes.
NodeSplit split_nodes(const TaskView& task, std::uint64_t seed);

struct TaskStream {
  std::vector<TaskView> tasks;
  std::size_t total_classes = 0;
  std::size_t classes_per_task = 2;
  std::vector<int> dropped_classes;

  std::size_t size() const noexcept { return tasks.size(); }
};

/// Consecutive groups of `classes_per_task` classes taken from `order` (empty
/// order means ascending class id). Trailing classes that do not fill a group
/// are dropped and listed in dropped_classes.
TaskStream split_into_tasks(const Graph& g, std::size_t classes_per_task,
                            std::span<const int> order, std::uint64_t split_seed);

/// Seeded permutation of 0..num_classes-1.
std::vector<int> shuffled_class_order(std::size_t num_classes, std::uint64_t seed);

struct SbmParams {
  std::size_t blocks = 2;
  std::size_t nodes_per_block = 10;
  double p_in = 0.5;
  double p_out = 0.0;
  std::size_t feature_dim = 2;
  double feature_shift = 1.0;
  std::uint64_t seed = 0;
};

/// Stochastic block model with unit-variance Gaussian features; block b adds
/// feature_shift on coordinate b. Labels are block ids.
Graph generate_sbm(const SbmParams& params);

}  // namespace pcgl
