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

#include "graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <string_view>

#include "error.hpp"
#include "textio.hpp"

namespace pcgl {

namespace {

std::string located(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

bool skippable(std::string_view line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

std::vector<std::size_t> degrees_with_self(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::size_t> deg(n, 1);
  for (const auto& [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

// CSR skeleton of A + I with sorted columns; values filled by the caller.
CsrMatrix closed_neighbourhood(std::size_t n, std::span<const Edge> edges) {
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) nbrs[i].push_back(i);
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) fail(ErrorCode::kInvalidArgument, "edge endpoint out of range");
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  CsrMatrix s;
  s.rows = s.cols = n;
  s.row_offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(nbrs[i].begin(), nbrs[i].end());
    s.row_offsets[i + 1] = s.row_offsets[i] + nbrs[i].size();
    s.col_indices.insert(s.col_indices.end(), nbrs[i].begin(), nbrs[i].end());
  }
  s.values.assign(s.col_indices.size(), 0.0);
  return s;
}

}  // namespace

void validate_graph(const Graph& g) {
  auto bad = [](const std::string& what) { fail(ErrorCode::kInvalidArgument, "graph: " + what); };
  if (g.features.rows() != g.num_nodes) bad("feature rows do not match node count");
  if (g.labels.size() != g.num_nodes) bad("label count does not match node count");
  std::vector<bool> seen(g.num_classes, false);
  for (int y : g.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= g.num_classes) bad("label outside 0..C-1");
    seen[static_cast<std::size_t>(y)] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) bad("class ids are not contiguous");
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& [u, v] = g.edges[i];
    if (u >= g.num_nodes || v >= g.num_nodes) bad("edge endpoint out of range");
    if (u >= v) bad("edges must be stored as (low, high) without self-loops");
    if (i > 0 && !(g.edges[i - 1] < g.edges[i])) bad("edges must be sorted and unique");
  }
  if (!g.features.all_finite()) bad("non-finite feature value");
}

Graph load_graph(const std::filesystem::path& edge_path,
                 const std::filesystem::path& feature_path,
                 const std::filesystem::path& label_path, LoadReport* report) {
  Graph g;
  std::string line;

  // Features fix the node count.
  {
    auto in = open_input(feature_path);
    std::vector<double> values;
    std::size_t width = 0, rows = 0, line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (skippable(line)) continue;
      std::vector<double> row;
      if (!text::parse_reals(line, row))
        fail(ErrorCode::kParse, located(feature_path, line_no) + ": malformed feature row");
      if (rows == 0) width = row.size();
      if (row.size() != width)
        fail(ErrorCode::kParse, located(feature_path, line_no) + ": expected " +
                                    std::to_string(width) + " values, got " +
                                    std::to_string(row.size()));
      values.insert(values.end(), row.begin(), row.end());
      ++rows;
    }
    if (rows == 0 || width == 0) fail(ErrorCode::kParse, feature_path.string() + ": no feature rows");
    g.features = Matrix(rows, width, std::move(values));
    g.num_nodes = rows;
  }

  {
    auto in = open_input(label_path);
    std::size_t line_no = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (skippable(line)) continue;
      std::vector<long long> fields;
      if (!text::parse_integers(line, fields) || fields.size() != 1 || fields[0] < 0)
        fail(ErrorCode::kParse, located(label_path, line_no) + ": malformed label");
      g.labels.push_back(static_cast<int>(fields[0]));
      max_label = std::max(max_label, static_cast<int>(fields[0]));
    }
    if (g.labels.size() != g.num_nodes)
      fail(ErrorCode::kInvalidArgument,
           "row-count mismatch: " + std::to_string(g.num_nodes) + " feature rows but " +
               std::to_string(g.labels.size()) + " labels");
    g.num_classes = static_cast<std::size_t>(max_label + 1);
  }

  LoadReport local;
  {
    auto in = open_input(edge_path);
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (skippable(line)) continue;
      std::vector<long long> fields;
      if (!text::parse_integers(line, fields) || fields.size() != 2 || fields[0] < 0 || fields[1] < 0)
        fail(ErrorCode::kParse, located(edge_path, line_no) + ": malformed edge");
      const auto u = static_cast<std::size_t>(fields[0]);
      const auto v = static_cast<std::size_t>(fields[1]);
      if (u >= g.num_nodes || v >= g.num_nodes)
        fail(ErrorCode::kInvalidArgument,
             located(edge_path, line_no) + ": node index out of range (N=" +
                 std::to_string(g.num_nodes) + ")");
      if (u == v) {
        ++local.self_loops_dropped;
        continue;
      }
      g.edges.emplace_back(static_cast<std::uint32_t>(std::min(u, v)),
                           static_cast<std::uint32_t>(std::max(u, v)));
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  const auto before = g.edges.size();
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  local.duplicates_dropped = before - g.edges.size();
  if (report) *report = local;

  validate_graph(g);
  return g;
}

void save_graph(const Graph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path,
                const std::filesystem::path& label_path) {
  {
    auto out = open_output(edge_path);
    for (const auto& [u, v] : g.edges) out << u << ' ' << v << '\n';
  }
  {
    auto out = open_output(feature_path);
    std::string buf;
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      buf.clear();
      auto row = g.features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) buf.push_back(' ');
        text::append_real(buf, row[j]);
      }
      buf.push_back('\n');
      out << buf;
    }
  }
  {
    auto out = open_output(label_path);
    for (int y : g.labels) out << y << '\n';
  }
}

CsrMatrix normalize_adjacency(std::size_t n, std::span<const Edge> edges) {
  CsrMatrix s = closed_neighbourhood(n, edges);
  const auto deg = degrees_with_self(n, edges);
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg[i]));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t e = s.row_offsets[r]; e < s.row_offsets[r + 1]; ++e)
      s.values[e] = inv_sqrt[r] * inv_sqrt[s.col_indices[e]];
  return s;
}

CsrMatrix mean_adjacency(std::size_t n, std::span<const Edge> edges) {
  CsrMatrix s = closed_neighbourhood(n, edges);
  for (std::size_t r = 0; r < n; ++r) {
    const double w = 1.0 / static_cast<double>(s.row_offsets[r + 1] - s.row_offsets[r]);
    for (std::size_t e = s.row_offsets[r]; e < s.row_offsets[r + 1]; ++e) s.values[e] = w;
  }
  return s;
}

NodeSplit split_nodes(const TaskView& task, std::uint64_t seed) {
  NodeSplit split;
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + task.task_id);
  std::vector<int> classes = task.classes;
  std::sort(classes.begin(), classes.end());
  for (int c : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < task.labels.size(); ++i)
      if (task.labels[i] == c) members.push_back(i);
    if (members.size() < 3)
      fail(ErrorCode::kInvalidArgument, "class " + std::to_string(c) + " has " +
                                            std::to_string(members.size()) +
                                            " nodes; at least 3 are needed to split");
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_train = members.size() * 6 / 10;
    const std::size_t n_val = members.size() * 2 / 10;
    auto it = members.begin();
    split.train.insert(split.train.end(), it, it + static_cast<std::ptrdiff_t>(n_train));
    it += static_cast<std::ptrdiff_t>(n_train);
    split.val.insert(split.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    split.test.insert(split.test.end(), it, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<int> shuffled_class_order(std::size_t num_classes, std::uint64_t seed) {
  std::vector<int> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

TaskStream split_into_tasks(const Graph& g, std::size_t classes_per_task,
                            std::span<const int> order, std::uint64_t split_seed) {
  if (classes_per_task == 0) fail(ErrorCode::kInvalidArgument, "classes_per_task must be >= 1");
  std::vector<int> ord(order.begin(), order.end());
  if (ord.empty()) {
    ord.resize(g.num_classes);
    std::iota(ord.begin(), ord.end(), 0);
  }
  {
    std::vector<int> sorted = ord;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(g.num_classes);
    std::iota(expect.begin(), expect.end(), 0);
    if (sorted != expect)
      fail(ErrorCode::kInvalidArgument, "class order is not a permutation of 0..C-1");
  }
  if (g.num_nodes < 2 * classes_per_task)
    fail(ErrorCode::kInvalidArgument, "fewer than 2*classes_per_task labeled nodes");

  TaskStream stream;
  stream.total_classes = g.num_classes;
  stream.classes_per_task = classes_per_task;
  const std::size_t num_tasks = g.num_classes / classes_per_task;
  stream.dropped_classes.assign(ord.begin() + static_cast<std::ptrdiff_t>(num_tasks * classes_per_task),
                                ord.end());

  std::vector<long long> local_of(g.num_nodes, -1);
  for (std::size_t t = 0; t < num_tasks; ++t) {
    TaskView view;
    view.task_id = t;
    view.classes.assign(ord.begin() + static_cast<std::ptrdiff_t>(t * classes_per_task),
                        ord.begin() + static_cast<std::ptrdiff_t>((t + 1) * classes_per_task));
    std::vector<bool> in_task(g.num_classes, false);
    for (int c : view.classes) in_task[static_cast<std::size_t>(c)] = true;

    std::fill(local_of.begin(), local_of.end(), -1);
    for (std::size_t i = 0; i < g.num_nodes; ++i)
      if (in_task[static_cast<std::size_t>(g.labels[i])]) {
        local_of[i] = static_cast<long long>(view.node_ids.size());
        view.node_ids.push_back(i);
      }

    const std::size_t n = view.node_ids.size();
    view.features = Matrix(n, g.feature_dim());
    view.labels.resize(n);
    for (std::size_t li = 0; li < n; ++li) {
      auto src = g.features.row(view.node_ids[li]);
      std::copy(src.begin(), src.end(), view.features.row(li).begin());
      view.labels[li] = g.labels[view.node_ids[li]];
    }
    for (const auto& [u, v] : g.edges)
      if (local_of[u] >= 0 && local_of[v] >= 0)
        view.edges.emplace_back(static_cast<std::uint32_t>(local_of[u]),
                                static_cast<std::uint32_t>(local_of[v]));
    std::sort(view.edges.begin(), view.edges.end());
    view.adjacency = normalize_adjacency(n, view.edges);
    view.mean_adjacency = pcgl::mean_adjacency(n, view.edges);
    view.split = split_nodes(view, split_seed);
    stream.tasks.push_back(std::move(view));
  }
  return stream;
}

Graph generate_sbm(const SbmParams& p) {
  if (!(p.p_out >= 0.0 && p.p_out <= p.p_in && p.p_in <= 1.0))
    fail(ErrorCode::kInvalidArgument, "sbm: require 0 <= p_out <= p_in <= 1");
  if (p.feature_dim < p.blocks) fail(ErrorCode::kInvalidArgument, "sbm: feature dim must be >= blocks");
  if (p.blocks == 0 || p.nodes_per_block == 0)
    fail(ErrorCode::kInvalidArgument, "sbm: blocks and nodes_per_block must be positive");

  Graph g;
  g.num_nodes = p.blocks * p.nodes_per_block;
  g.num_classes = p.blocks;
  g.labels.resize(g.num_nodes);
  for (std::size_t i = 0; i < g.num_nodes; ++i) g.labels[i] = static_cast<int>(i / p.nodes_per_block);

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::size_t j = i + 1; j < g.num_nodes; ++j) {
      const double prob = g.labels[i] == g.labels[j] ? p.p_in : p.p_out;
      // Always draw so the feature stream does not depend on the probabilities.
      const double r = coin(rng);
      if (r < prob) g.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }

  std::normal_distribution<double> noise(0.0, 1.0);
  g.features = Matrix(g.num_nodes, p.feature_dim);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    auto row = g.features.row(i);
    for (double& x : row) x = noise(rng);
    row[static_cast<std::size_t>(g.labels[i])] += p.feature_shift;
  }
  return g;
}

}  // namespace pcgl
