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

// promptcgl command-line tool.
//
//   promptcgl gen   --blocks 10 --nodes-per-block 60 ... --out DIR
//   promptcgl run   [--manifest FILE] [--key value ...]
//   promptcgl sweep [--manifest FILE] --axis k --values 1,2,3,4
//   promptcgl embed [--manifest FILE] --task 1 [--with-prompts] [--seed 0]
//
// Exit codes: 0 success, 2 validation error, 3 numeric failure, 1 other.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "promptcgl/promptcgl.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

constexpr const char* kOutputRootEnv = "PROMPTCGL_OUTPUT_ROOT";

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void invalid(const std::string& msg) { throw CliError{kExitValidation, msg}; }

int exit_code_for(pcgl_status s) {
  switch (s) {
    case PCGL_OK: return kExitOk;
    case PCGL_ERR_INVALID_ARGUMENT:
    case PCGL_ERR_PARSE:
    case PCGL_ERR_NOT_FOUND: return kExitValidation;
    case PCGL_ERR_NUMERIC: return kExitNumeric;
    default: return kExitOther;
  }
}

void check(pcgl_status s, const std::string& context) {
  if (s != PCGL_OK) throw CliError{exit_code_for(s), context + ": " + pcgl_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using GraphPtr = std::unique_ptr<pcgl_graph, Deleter<pcgl_graph, pcgl_graph_free>>;
using StreamPtr = std::unique_ptr<pcgl_stream, Deleter<pcgl_stream, pcgl_stream_free>>;
using ConfigPtr = std::unique_ptr<pcgl_config, Deleter<pcgl_config, pcgl_config_free>>;
using RunPtr = std::unique_ptr<pcgl_run, Deleter<pcgl_run, pcgl_run_free>>;
using ModelPtr = std::unique_ptr<pcgl_model, Deleter<pcgl_model, pcgl_model_free>>;

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kExitOther, "cannot write " + path.string()};
  out << text;
  if (!out) throw CliError{kExitOther, "write failed: " + path.string()};
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{kExitOther, "cannot create " + dir.string() + ": " + ec.message()};
}

// ---- manifest

enum class Kind { kString, kCount, kReal, kBool, kIntList };

struct KeySpec {
  const char* name;
  Kind kind;
  bool train_config;  // forwarded to pcgl_config_set
};

constexpr KeySpec kKeys[] = {
    {"method", Kind::kString, false},
    {"dataset", Kind::kString, false},
    {"edges", Kind::kString, false},
    {"features", Kind::kString, false},
    {"labels", Kind::kString, false},
    {"sbm_blocks", Kind::kCount, false},
    {"sbm_nodes_per_block", Kind::kCount, false},
    {"sbm_p_in", Kind::kReal, false},
    {"sbm_p_out", Kind::kReal, false},
    {"sbm_df", Kind::kCount, false},
    {"sbm_shift", Kind::kReal, false},
    {"sbm_seed", Kind::kCount, false},
    {"classes_per_task", Kind::kCount, false},
    {"class_order", Kind::kIntList, false},
    {"order_seed", Kind::kCount, false},
    {"max_tasks", Kind::kCount, false},
    {"seeds", Kind::kIntList, false},
    {"output_dir", Kind::kString, false},
    {"backbone", Kind::kString, true},
    {"k", Kind::kCount, true},
    {"d_h", Kind::kCount, true},
    {"pretrain_lr", Kind::kReal, true},
    {"pretrain_wd", Kind::kReal, true},
    {"prompt_lr", Kind::kReal, true},
    {"prompt_wd", Kind::kReal, true},
    {"head_lr", Kind::kReal, true},
    {"head_wd", Kind::kReal, true},
    {"max_epochs", Kind::kCount, true},
    {"patience", Kind::kCount, true},
    {"use_node_prompts", Kind::kBool, true},
    {"use_subgraph_prompts", Kind::kBool, true},
    {"pg_mode", Kind::kString, true},
    {"freeze_head_after_task", Kind::kBool, true},
};

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : kKeys)
    if (name == k.name) return &k;
  return nullptr;
}

json default_manifest() {
  const char* root = std::getenv(kOutputRootEnv);
  return {{"method", "PromptCGL"},
          {"dataset", "sbm"},
          {"sbm_blocks", 10},
          {"sbm_nodes_per_block", 60},
          {"sbm_p_in", 0.2},
          {"sbm_p_out", 0.01},
          {"sbm_df", 16},
          {"sbm_shift", 2.0},
          {"sbm_seed", 0},
          {"classes_per_task", 2},
          {"max_tasks", 0},
          {"seeds", {0, 1, 2}},
          {"output_dir", root && *root ? root : "runs"},
          {"backbone", "GCN"},
          {"k", 3},
          {"d_h", 32},
          {"pretrain_lr", 1e-3},
          {"pretrain_wd", 5e-4},
          {"prompt_lr", 1e-2},
          {"prompt_wd", 5e-4},
          {"head_lr", 5e-4},
          {"head_wd", 0.0},
          {"max_epochs", 200},
          {"patience", 20},
          {"use_node_prompts", true},
          {"use_subgraph_prompts", true},
          {"pg_mode", "personalized"},
          {"freeze_head_after_task", false}};
}

void check_value(const KeySpec& spec, const json& v) {
  const std::string name = spec.name;
  switch (spec.kind) {
    case Kind::kString:
      if (!v.is_string()) invalid("manifest: '" + name + "' must be a string");
      break;
    case Kind::kCount:
      if (!v.is_number_unsigned()) invalid("manifest: '" + name + "' must be a non-negative integer");
      break;
    case Kind::kReal:
      if (!v.is_number()) invalid("manifest: '" + name + "' must be a number");
      break;
    case Kind::kBool:
      if (!v.is_boolean()) invalid("manifest: '" + name + "' must be true or false");
      break;
    case Kind::kIntList:
      if (!v.is_array()) invalid("manifest: '" + name + "' must be a list of integers");
      for (const auto& e : v)
        if (!e.is_number_unsigned()) invalid("manifest: '" + name + "' must hold non-negative integers");
      break;
  }
}

json parse_flag_value(const KeySpec& spec, const std::string& text) {
  const std::string name = spec.name;
  auto parse_count = [&](const std::string& s) -> std::uint64_t {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      invalid("--" + name + ": expected a non-negative integer, got '" + s + "'");
    return out;
  };
  switch (spec.kind) {
    case Kind::kString: return text;
    case Kind::kCount: return parse_count(text);
    case Kind::kReal: {
      double out = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        invalid("--" + name + ": expected a number, got '" + text + "'");
      return out;
    }
    case Kind::kBool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      invalid("--" + name + ": expected true or false, got '" + text + "'");
    case Kind::kIntList: {
      json arr = json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(parse_count(item));
      return arr;
    }
  }
  return nullptr;
}

struct ManifestOptions {
  std::string manifest_path;
  std::map<std::string, std::string> flags;
};

void add_manifest_options(CLI::App& cmd, ManifestOptions& opts) {
  cmd.add_option("--manifest", opts.manifest_path, "JSON run manifest; flags override its keys");
  for (const auto& k : kKeys) {
    std::string name = k.name;
    std::string dashed = name;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    std::string names = "--" + name;
    if (dashed != name) names += ",--" + dashed;
    // CLI11 stores into the map entry only when the flag is present.
    cmd.add_option_function<std::string>(names, [&opts, name](const std::string& v) { opts.flags[name] = v; },
                                         "manifest key " + name);
  }
}

/// Defaults, then the manifest file, then flags. Every key is checked.
json resolve_manifest(const ManifestOptions& opts) {
  json m = default_manifest();
  if (!opts.manifest_path.empty()) {
    std::ifstream in(opts.manifest_path);
    if (!in) invalid("cannot open manifest " + opts.manifest_path);
    json file;
    try {
      in >> file;
    } catch (const json::exception& e) {
      invalid("manifest " + opts.manifest_path + ": " + e.what());
    }
    if (!file.is_object()) invalid("manifest must be a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      const KeySpec* spec = find_key(it.key());
      if (!spec) invalid("manifest: unknown key '" + it.key() + "'");
      check_value(*spec, it.value());
      m[it.key()] = it.value();
    }
  }
  for (const auto& [name, text] : opts.flags) m[name] = parse_flag_value(*find_key(name), text);

  const std::string method = m["method"];
  if (method != "PromptCGL" && method != "Bare" && method != "Joint")
    invalid("manifest: method must be PromptCGL, Bare or Joint");
  const std::string dataset = m["dataset"];
  if (dataset == "files") {
    for (const char* key : {"edges", "features", "labels"})
      if (!m.contains(key)) invalid(std::string("manifest: dataset 'files' needs '") + key + "'");
  } else if (dataset != "sbm") {
    invalid("manifest: dataset must be 'sbm' or 'files'");
  }
  if (m["seeds"].empty()) invalid("manifest: seeds must not be empty");
  if (m["classes_per_task"].get<std::uint64_t>() == 0) invalid("manifest: classes_per_task must be positive");
  if (m.contains("class_order") && m.contains("order_seed"))
    invalid("manifest: give class_order or order_seed, not both");
  return m;
}

std::string value_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return shortest(v.get<double>());
  return v.dump();
}

ConfigPtr make_config(const json& m, std::uint64_t seed) {
  pcgl_config* raw = nullptr;
  check(pcgl_config_create(&raw), "config");
  ConfigPtr cfg(raw);
  for (const auto& k : kKeys) {
    if (!k.train_config || !m.contains(k.name)) continue;
    const pcgl_status s = pcgl_config_set(cfg.get(), k.name, value_text(m[k.name]).c_str());
    if (s != PCGL_OK) invalid(pcgl_last_error());
  }
  check(pcgl_config_set_int(cfg.get(), "seed", static_cast<std::int64_t>(seed)), "config");
  const pcgl_status s = pcgl_config_validate(cfg.get());
  if (s != PCGL_OK) invalid(pcgl_last_error());
  return cfg;
}

GraphPtr load_dataset(const json& m) {
  pcgl_graph* g = nullptr;
  if (m["dataset"] == "files") {
    check(pcgl_graph_load(m["edges"].get<std::string>().c_str(), m["features"].get<std::string>().c_str(),
                          m["labels"].get<std::string>().c_str(), &g),
          "loading dataset");
  } else {
    check(pcgl_graph_generate_sbm(m["sbm_blocks"], m["sbm_nodes_per_block"], m["sbm_p_in"], m["sbm_p_out"],
                                  m["sbm_df"], m["sbm_shift"], m["sbm_seed"], &g),
          "generating dataset");
  }
  return GraphPtr(g);
}

StreamPtr make_stream(const json& m, const pcgl_graph* g, std::uint64_t seed) {
  std::vector<int> order;
  if (m.contains("class_order")) {
    for (const auto& c : m["class_order"]) order.push_back(c.get<int>());
  } else if (m.contains("order_seed")) {
    order.resize(pcgl_graph_num_classes(g));
    check(pcgl_class_order_shuffled(order.size(), m["order_seed"], order.data()), "class order");
  }
  pcgl_stream* s = nullptr;
  check(pcgl_stream_create(g, m["classes_per_task"], order.empty() ? nullptr : order.data(), order.size(), seed,
                           m["max_tasks"], &s),
        "building task stream");
  return StreamPtr(s);
}

/// Checks everything that can be checked before training starts.
void prevalidate(const json& m) {
  for (const auto& s : m["seeds"]) make_config(m, s.get<std::uint64_t>());
  if (m["dataset"] == "files")
    for (const char* key : {"edges", "features", "labels"})
      if (!fs::exists(m[key].get<std::string>()))
        invalid(std::string("dataset file not found: ") + m[key].get<std::string>());
}

fs::path method_dir(const json& m) {
  return fs::path(m["output_dir"].get<std::string>()) / m["method"].get<std::string>();
}

struct SeedMetrics {
  double ap = 0.0;
  std::optional<double> af;
};

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

// Population standard deviation over seeds.
Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

SeedMetrics run_one(const json& m, const pcgl_graph* g, std::uint64_t seed, const fs::path* out_dir) {
  ConfigPtr cfg = make_config(m, seed);
  StreamPtr stream = make_stream(m, g, seed);
  pcgl_run* raw = nullptr;
  check(pcgl_run_stream(stream.get(), cfg.get(), m["method"].get<std::string>().c_str(), &raw),
        "seed " + std::to_string(seed));
  RunPtr run(raw);

  SeedMetrics out;
  check(pcgl_run_ap(run.get(), &out.ap), "AP");
  if (pcgl_run_num_tasks(run.get()) >= 2) {
    double af = 0.0;
    check(pcgl_run_af(run.get(), &af), "AF");
    out.af = af;
  }
  if (out_dir) {
    make_dirs(*out_dir);
    auto p = [&](const char* name) { return (*out_dir / name).string(); };
    check(pcgl_run_write_matrix_csv(run.get(), p("matrix.csv").c_str()), "writing matrix");
    check(pcgl_run_write_heatmap_svg(run.get(), p("heatmap.svg").c_str()), "writing heatmap");
    check(pcgl_run_write_metrics_json(run.get(), p("metrics.json").c_str()), "writing metrics");
    check(pcgl_run_write_checkpoint(run.get(), p("checkpoint.json").c_str()), "writing checkpoint");
    check(pcgl_run_write_train_log(run.get(), p("train_log.json").c_str()), "writing training log");
    if (m["method"] == "PromptCGL") {
      check(pcgl_run_write_prompt_bank(run.get(), p("prompt_bank.json").c_str()), "writing prompt bank");
      check(pcgl_run_write_memory_report(run.get(), p("memory.json").c_str()), "writing memory report");
    }
    json resolved = m;
    resolved["seed"] = seed;
    write_json(*out_dir / "manifest.json", resolved);
  }
  return out;
}

struct Aggregate {
  Stats ap;
  std::optional<Stats> af;
  std::vector<SeedMetrics> per_seed;
};

Aggregate run_seeds(const json& m, const fs::path* out_root, bool verbose) {
  GraphPtr g = load_dataset(m);
  Aggregate agg;
  std::vector<double> aps, afs;
  for (const auto& s : m["seeds"]) {
    const auto seed = s.get<std::uint64_t>();
    std::optional<fs::path> dir;
    if (out_root) dir = *out_root / ("seed_" + std::to_string(seed));
    const SeedMetrics sm = run_one(m, g.get(), seed, dir ? &*dir : nullptr);
    aps.push_back(sm.ap);
    if (sm.af) afs.push_back(*sm.af);
    agg.per_seed.push_back(sm);
    if (verbose)
      std::cerr << m["method"].get<std::string>() << " seed " << seed << ": AP " << fixed6(sm.ap)
                << (sm.af ? " AF " + fixed6(*sm.af) : std::string()) << "\n";
  }
  agg.ap = stats(aps);
  if (afs.size() == aps.size()) agg.af = stats(afs);
  return agg;
}

// ---- subcommands

int cmd_run(const ManifestOptions& opts) {
  const json m = resolve_manifest(opts);
  prevalidate(m);
  const fs::path dir = method_dir(m);
  make_dirs(dir);
  write_json(dir / "manifest.json", m);
  const Aggregate agg = run_seeds(m, &dir, true);

  json j{{"method", m["method"]}, {"seeds", m["seeds"]}, {"ap_mean", agg.ap.mean}, {"ap_std", agg.ap.std}};
  j["af_mean"] = agg.af ? json(agg.af->mean) : json(nullptr);
  j["af_std"] = agg.af ? json(agg.af->std) : json(nullptr);
  json ap = json::array(), af = json::array();
  for (const auto& s : agg.per_seed) {
    ap.push_back(s.ap);
    af.push_back(s.af ? json(*s.af) : json(nullptr));
  }
  j["ap"] = ap;
  j["af"] = af;
  write_json(dir / "aggregate.json", j);
  std::cout << m["method"].get<std::string>() << ": AP " << fixed6(agg.ap.mean) << " +/- " << fixed6(agg.ap.std);
  if (agg.af) std::cout << ", AF " << fixed6(agg.af->mean) << " +/- " << fixed6(agg.af->std);
  std::cout << "\nwrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_sweep(const ManifestOptions& opts, const std::string& axis, const std::string& values_text,
              const std::string& out_path) {
  if (axis != "prompt_lr" && axis != "head_lr" && axis != "k" && axis != "d_h")
    invalid("--axis must be one of prompt_lr, head_lr, k, d_h");
  const json base = resolve_manifest(opts);
  const KeySpec* spec = find_key(axis);
  std::vector<json> values;
  std::stringstream ss(values_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const json v = parse_flag_value(*spec, item);
    if (!(v.get<double>() > 0.0)) invalid("--values must be positive");
    values.push_back(v);
  }
  if (values.empty()) invalid("--values is empty");
  for (const auto& v : values) {
    json m = base;
    m[axis] = v;
    prevalidate(m);
  }

  const fs::path csv = out_path.empty()
                           ? fs::path(base["output_dir"].get<std::string>()) / ("sweep_" + axis + ".csv")
                           : fs::path(out_path);
  if (csv.has_parent_path()) make_dirs(csv.parent_path());
  std::string text = "value,ap_mean,ap_std,af_mean,af_std\n";
  for (const auto& v : values) {
    json m = base;
    m[axis] = v;
    const Aggregate agg = run_seeds(m, nullptr, false);
    text += value_text(v) + "," + fixed6(agg.ap.mean) + "," + fixed6(agg.ap.std) + ",";
    text += agg.af ? fixed6(agg.af->mean) + "," + fixed6(agg.af->std) : std::string(",");
    text += "\n";
    std::cerr << axis << "=" << value_text(v) << ": AP " << fixed6(agg.ap.mean) << "\n";
  }
  write_text(csv, text);
  std::cout << "wrote " << csv.string() << "\n";
  return kExitOk;
}

int cmd_embed(const ManifestOptions& opts, std::size_t task, bool with_prompts,
              std::optional<std::uint64_t> seed_opt, const std::string& out_path) {
  const json m = resolve_manifest(opts);
  const std::uint64_t seed = seed_opt ? *seed_opt : m["seeds"][0].get<std::uint64_t>();
  ConfigPtr cfg = make_config(m, seed);
  const fs::path run_dir = method_dir(m) / ("seed_" + std::to_string(seed));
  const fs::path ckpt = run_dir / "checkpoint.json";
  const fs::path bank = run_dir / "prompt_bank.json";
  if (!fs::exists(ckpt)) invalid("no run artifacts at " + run_dir.string() + " (run the 'run' command first)");
  if (with_prompts && !fs::exists(bank)) invalid("no prompt bank at " + bank.string());

  GraphPtr g = load_dataset(m);
  StreamPtr stream = make_stream(m, g.get(), seed);
  pcgl_model* raw = nullptr;
  check(pcgl_model_load(ckpt.string().c_str(), fs::exists(bank) ? bank.string().c_str() : nullptr, &raw),
        "loading model");
  ModelPtr model(raw);
  const fs::path csv = out_path.empty() ? run_dir / ("embeddings_task" + std::to_string(task) +
                                                     (with_prompts ? "_prompted.csv" : "_plain.csv"))
                                        : fs::path(out_path);
  if (csv.has_parent_path()) make_dirs(csv.parent_path());
  int degenerate = 0;
  check(pcgl_model_export_embeddings(model.get(), stream.get(), task, with_prompts ? 1 : 0, cfg.get(),
                                     csv.string().c_str(), &degenerate),
        "exporting embeddings");
  if (degenerate) std::cerr << "warning: embeddings have zero variance; projection is all zeros\n";
  std::cout << "wrote " << csv.string() << "\n";
  return kExitOk;
}

struct GenOptions {
  std::size_t blocks = 10;
  std::size_t nodes_per_block = 60;
  double p_in = 0.2;
  double p_out = 0.01;
  std::size_t df = 16;
  double shift = 2.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenOptions& o) {
  pcgl_graph* raw = nullptr;
  const pcgl_status s = pcgl_graph_generate_sbm(o.blocks, o.nodes_per_block, o.p_in, o.p_out, o.df, o.shift,
                                                o.seed, &raw);
  if (s != PCGL_OK) throw CliError{exit_code_for(s), std::string("gen: ") + pcgl_last_error()};
  GraphPtr g(raw);
  const fs::path dir(o.out);
  make_dirs(dir);
  check(pcgl_graph_save(g.get(), (dir / "edges.txt").string().c_str(), (dir / "features.txt").string().c_str(),
                        (dir / "labels.txt").string().c_str()),
        "gen");
  write_json(dir / "provenance.json", {{"generator", "sbm"},
                                       {"blocks", o.blocks},
                                       {"nodes_per_block", o.nodes_per_block},
                                       {"p_in", o.p_in},
                                       {"p_out", o.p_out},
                                       {"feature_dim", o.df},
                                       {"feature_shift", o.shift},
                                       {"seed", o.seed},
                                       {"num_nodes", pcgl_graph_num_nodes(g.get())},
                                       {"num_edges", pcgl_graph_num_edges(g.get())},
                                       {"library_version", pcgl_version()}});
  std::cout << "wrote " << pcgl_graph_num_nodes(g.get()) << " nodes, " << pcgl_graph_num_edges(g.get())
            << " edges to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptcgl: prompt-based continual graph learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pcgl_version());

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic SBM dataset");
  gen_cmd->add_option("--blocks", gen.blocks, "number of blocks (classes)");
  gen_cmd->add_option("--nodes-per-block,--nodes_per_block", gen.nodes_per_block, "nodes per block");
  gen_cmd->add_option("--p-in,--p_in", gen.p_in, "within-block edge probability");
  gen_cmd->add_option("--p-out,--p_out", gen.p_out, "between-block edge probability");
  gen_cmd->add_option("--df", gen.df, "feature dimension");
  gen_cmd->add_option("--shift", gen.shift, "mean shift on the block's coordinate");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();

  ManifestOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run a task stream for every seed and aggregate");
  add_manifest_options(*run_cmd, run_opts);

  ManifestOptions sweep_opts;
  std::string axis, values, sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat runs over one hyperparameter axis");
  add_manifest_options(*sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--axis", axis, "prompt_lr, head_lr, k or d_h")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();
  sweep_cmd->add_option("--out", sweep_out, "CSV path (default <output_dir>/sweep_<axis>.csv)");

  ManifestOptions embed_opts;
  std::size_t embed_task = 0;
  bool with_prompts = false;
  std::optional<std::uint64_t> embed_seed;
  std::string embed_out;
  auto* embed_cmd = app.add_subcommand("embed", "Export 2-D PCA embeddings of one task from a finished run");
  add_manifest_options(*embed_cmd, embed_opts);
  embed_cmd->add_option("--task", embed_task, "task id")->required();
  embed_cmd->add_flag("--with-prompts", with_prompts, "apply the task's stored prompts");
  embed_cmd->add_option("--seed", embed_seed, "which seed's run (default: first manifest seed)");
  embed_cmd->add_option("--out", embed_out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*run_cmd) return cmd_run(run_opts);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, axis, values, sweep_out);
    if (*embed_cmd) return cmd_embed(embed_opts, embed_task, with_prompts, embed_seed, embed_out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
