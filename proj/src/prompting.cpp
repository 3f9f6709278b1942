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

#include "prompting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"
#include "jsonio.hpp"

namespace pcgl {

namespace {

constexpr double kQueryInitStd = 0.01;

std::uint64_t generator_stamp(const PromptGenerator& gen) {
  std::uint64_t h = hash_values(gen.prompts.value);
  h = hash_values(gen.query.value, h);
  return hash_values(gen.scale.value, h);
}

}  // namespace

PromptGenerator make_prompt_generator(PromptLevel level, std::size_t k, std::size_t width,
                                      std::mt19937_64& rng) {
  if (k == 0 || width == 0) fail(ErrorCode::kInvalidArgument, "prompt generator needs k >= 1 and d >= 1");
  std::normal_distribution<double> dist(0.0, kQueryInitStd);
  PromptGenerator gen;
  gen.level = level;
  gen.prompts = ParamTensor(Matrix(k, width));
  Matrix u(1, width), v(1, k);
  for (double& x : u.values()) x = dist(rng);
  for (double& x : v.values()) x = dist(rng);
  gen.query = ParamTensor(std::move(u));
  gen.scale = ParamTensor(std::move(v));
  return gen;
}

PgOutput pg_forward(const Matrix& x, const PromptGenerator& gen, PgMode mode) {
  if (x.cols() != gen.width())
    fail(ErrorCode::kInvalidArgument, "prompt generator width " + std::to_string(gen.width()) +
                                          " does not match input width " + std::to_string(x.cols()));
  const std::size_t n = x.rows();
  const std::size_t k = gen.k();
  PgCache cache;
  cache.mode = mode;
  cache.input = x;
  cache.scores.assign(n, 0.0);
  cache.alpha = Matrix(n, k);
  cache.param_stamp = generator_stamp(gen);

  const auto& u = gen.query.value.values();
  const auto& v = gen.scale.value.values();
  if (mode == PgMode::kUniform) {
    cache.alpha.fill(1.0 / static_cast<double>(k));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = x.row(i);
      double s = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) s += u[c] * xi[c];
      cache.scores[i] = s;
      auto a = cache.alpha.row(i);
      double mx = s * v[0];
      for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, s * v[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        a[j] = std::exp(s * v[j] - mx);
        sum += a[j];
      }
      for (double& aj : a) aj /= sum;
    }
  }
  Matrix prompts = matmul(cache.alpha, gen.prompts.value);
  return {std::move(prompts), std::move(cache)};
}

Matrix pg_backward(const PgCache& cache, PromptGenerator& gen, const Matrix& dprompts) {
  if (cache.param_stamp != generator_stamp(gen))
    fail(ErrorCode::kState, "prompt generator changed since the cached forward pass");
  if (dprompts.rows() != cache.alpha.rows() || dprompts.cols() != gen.width())
    fail(ErrorCode::kInvalidArgument, "pg_backward: cotangent shape mismatch");
  const std::size_t n = cache.alpha.rows();
  const std::size_t k = gen.k();

  add_inplace(gen.prompts.grad, matmul_tn(cache.alpha, dprompts));

  Matrix dx(n, gen.width());
  if (cache.mode == PgMode::kUniform) return dx;

  const Matrix dalpha = matmul_nt(dprompts, gen.prompts.value);
  const auto& u = gen.query.value.values();
  const auto& v = gen.scale.value.values();
  auto& du = gen.query.grad.values();
  auto& dv = gen.scale.grad.values();
  std::vector<double> dz(k);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = cache.alpha.row(i);
    auto da = dalpha.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot += a[j] * da[j];
    double ds = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      dz[j] = a[j] * (da[j] - dot);
      dv[j] += dz[j] * cache.scores[i];
      ds += dz[j] * v[j];
    }
    if (ds == 0.0) continue;
    auto xi = cache.input.row(i);
    auto dxi = dx.row(i);
    for (std::size_t c = 0; c < xi.size(); ++c) {
      du[c] += ds * xi[c];
      dxi[c] = ds * u[c];
    }
  }
  return dx;
}

Matrix apply_prompts(const Matrix& x, const PromptGenerator& gen, PgCache* cache, PgMode mode) {
  PgOutput out = pg_forward(x, gen, mode);
  add_inplace(out.prompts, x);
  if (cache) *cache = std::move(out.cache);
  return std::move(out.prompts);
}

std::vector<ParamTensor*> TaskPrompts::params() {
  return {&node.prompts, &node.query, &node.scale,
          &subgraph.prompts, &subgraph.query, &subgraph.scale};
}

std::uint64_t TaskPrompts::hash() const {
  return generator_stamp(subgraph) ^ (generator_stamp(node) * 0x9E3779B97F4A7C15ULL);
}

TaskPrompts make_task_prompts(std::size_t k, std::size_t feature_dim, std::size_t hidden_dim,
                              std::mt19937_64& rng) {
  TaskPrompts tp;
  tp.node = make_prompt_generator(PromptLevel::kNode, k, feature_dim, rng);
  tp.subgraph = make_prompt_generator(PromptLevel::kSubgraph, k, hidden_dim, rng);
  return tp;
}

void PromptBank::store(std::size_t task_id, const TaskPrompts& prompts) {
  if (entries_.count(task_id))
    fail(ErrorCode::kState, "prompt bank already holds task " + std::to_string(task_id));
  if (prompts.node.k() != k_ || prompts.subgraph.k() != k_ ||
      prompts.node.width() != feature_dim_ || prompts.subgraph.width() != hidden_dim_)
    fail(ErrorCode::kInvalidArgument, "prompt shapes do not match the bank layout");
  TaskPrompts copy = prompts;
  for (ParamTensor* p : copy.params()) {
    p->zero_grad();
    p->frozen = true;
  }
  entries_.emplace(task_id, std::move(copy));
}

void PromptBank::store_no_prompt(std::size_t task_id) {
  if (entries_.count(task_id))
    fail(ErrorCode::kState, "prompt bank already holds task " + std::to_string(task_id));
  entries_.emplace(task_id, std::nullopt);
}

const TaskPrompts* PromptBank::retrieve(std::size_t task_id) const {
  auto it = entries_.find(task_id);
  if (it == entries_.end())
    fail(ErrorCode::kNotFound, "prompt bank has no entry for task " + std::to_string(task_id));
  return it->second ? &*it->second : nullptr;
}

std::vector<std::size_t> PromptBank::task_ids() const {
  std::vector<std::size_t> ids;
  for (const auto& [id, _] : entries_) ids.push_back(id);
  return ids;
}

namespace {

jsonio::json generator_to_json(const PromptGenerator& g) {
  return {{"prompts", jsonio::matrix_to_json(g.prompts.value)},
          {"query", jsonio::matrix_to_json(g.query.value)},
          {"scale", jsonio::matrix_to_json(g.scale.value)}};
}

PromptGenerator generator_from_json(const jsonio::json& j, PromptLevel level) {
  PromptGenerator g;
  g.level = level;
  g.prompts = ParamTensor(jsonio::matrix_from_json(j.at("prompts")));
  g.query = ParamTensor(jsonio::matrix_from_json(j.at("query")));
  g.scale = ParamTensor(jsonio::matrix_from_json(j.at("scale")));
  if (g.query.value.rows() != 1 || g.query.value.cols() != g.width() || g.scale.value.rows() != 1 ||
      g.scale.value.cols() != g.k())
    fail(ErrorCode::kParse, "prompt generator entry has inconsistent shapes");
  return g;
}

constexpr const char* kBankFormat = "promptcgl.prompt_bank";
constexpr int kBankVersion = 1;

}  // namespace

void PromptBank::save(const std::filesystem::path& path) const {
  jsonio::json tasks = jsonio::json::array();
  for (const auto& [id, entry] : entries_) {
    jsonio::json t{{"task_id", id}, {"no_prompt", !entry.has_value()}};
    if (entry) {
      t["node"] = generator_to_json(entry->node);
      t["subgraph"] = generator_to_json(entry->subgraph);
    }
    tasks.push_back(std::move(t));
  }
  jsonio::write_file(path, {{"format", kBankFormat},
                            {"version", kBankVersion},
                            {"k", k_},
                            {"feature_dim", feature_dim_},
                            {"hidden_dim", hidden_dim_},
                            {"tasks", std::move(tasks)}});
}

PromptBank PromptBank::load(const std::filesystem::path& path) {
  const auto j = jsonio::read_file(path);
  try {
    if (j.at("format").get<std::string>() != kBankFormat || j.at("version").get<int>() != kBankVersion)
      fail(ErrorCode::kParse, path.string() + ": not a version-1 prompt bank");
    PromptBank bank(j.at("k").get<std::size_t>(), j.at("feature_dim").get<std::size_t>(),
                    j.at("hidden_dim").get<std::size_t>());
    for (const auto& t : j.at("tasks")) {
      const auto id = t.at("task_id").get<std::size_t>();
      if (t.at("no_prompt").get<bool>()) {
        bank.store_no_prompt(id);
        continue;
      }
      TaskPrompts tp;
      tp.node = generator_from_json(t.at("node"), PromptLevel::kNode);
      tp.subgraph = generator_from_json(t.at("subgraph"), PromptLevel::kSubgraph);
      bank.store(id, tp);
    }
    return bank;
  } catch (const jsonio::json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

std::size_t prompt_floats_per_task(std::size_t k, std::size_t feature_dim, std::size_t hidden_dim) {
  return k * (feature_dim + hidden_dim) + (feature_dim + hidden_dim) + 2 * k;
}

BankParamCount bank_param_count(const PromptBank& bank) {
  BankParamCount c;
  c.per_task = prompt_floats_per_task(bank.k(), bank.feature_dim(), bank.hidden_dim());
  for (std::size_t id : bank.task_ids())
    if (const TaskPrompts* tp = bank.retrieve(id)) {
      c.total += tp->param_count();
      ++c.prompted_tasks;
    }
  return c;
}

}  // namespace pcgl
