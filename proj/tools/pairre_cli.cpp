// Command-line front end: train / eval / analyze over the C API.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pairre.h"

using nlohmann::json;

namespace {

// Exit codes: 0 ok, 1 usage, 2 bad data (and I/O or internal faults),
// 3 numeric failure.
int exit_code(pairre_status s) {
  switch (s) {
    case PAIRRE_OK: return 0;
    case PAIRRE_ERR_USAGE: return 1;
    case PAIRRE_ERR_DATA: return 2;
    case PAIRRE_ERR_NUMERIC: return 3;
    case PAIRRE_ERR_IO: return 2;
    case PAIRRE_ERR_INTERNAL: return 2;
  }
  return 2;
}

// Fails the whole command on the first non-OK status.
struct Bail {
  int code;
};

void check(pairre_status s) {
  if (s != PAIRRE_OK) {
    std::fprintf(stderr, "error: %s\n", pairre_last_error());
    throw Bail{exit_code(s)};
  }
}

uint64_t fnv1a64_str(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot read %s\n", path.c_str());
    throw Bail{2};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    throw Bail{2};
  }
  out << content;
  if (!out.flush()) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    throw Bail{2};
  }
}

uint64_t hash_of(const std::string& path) {
  uint64_t h = 0;
  check(pairre_file_hash(path.c_str(), &h));
  return h;
}

// All configuration keys, in the order they are reported.
const char* const kConfigKeys[] = {
    "gamma",          "dim",         "learning_rate",   "batch_size",
    "max_steps",      "num_negatives", "seed",          "scorer",
    "squared_distance", "adv_temperature", "rule_weight", "optimizer",
    "adagrad_eps",    "filtered_negatives", "valid_every",
    "checkpoint_every", "log_every",
};

json config_snapshot(const pairre_config* config) {
  json out = json::object();
  for (const char* key : kConfigKeys) {
    const char* v = pairre_config_get(config, key);
    if (v != nullptr) out[key] = v;
  }
  return out;
}

void print_warnings(const pairre_model* model) {
  std::string w = pairre_model_warnings(model);
  size_t pos = 0;
  while (pos < w.size()) {
    size_t nl = w.find('\n', pos);
    if (nl == std::string::npos) nl = w.size();
    std::fprintf(stderr, "warning: %s\n", w.substr(pos, nl - pos).c_str());
    pos = nl + 1;
  }
}

struct TrainArgs {
  std::string config_path;
  std::string train_path;
  std::string valid_path;
  std::string rules_path;
  std::vector<std::string> vocab_files;
  std::string out_dir;
  int threads = 1;
};

int cmd_train(const TrainArgs& a) {
  auto t0 = std::chrono::steady_clock::now();

  pairre_config* config = nullptr;
  check(pairre_config_load(a.config_path.c_str(), &config));

  // The vocabulary covers every split named on the command line, so eval-time
  // entities are at least initialized even when they never occur in training.
  std::vector<std::string> vocab_sources{a.train_path};
  if (!a.valid_path.empty()) vocab_sources.push_back(a.valid_path);
  for (const std::string& f : a.vocab_files) vocab_sources.push_back(f);
  std::vector<const char*> vocab_cstrs;
  for (const std::string& f : vocab_sources) vocab_cstrs.push_back(f.c_str());
  pairre_vocab* vocab = nullptr;
  check(pairre_vocab_build(vocab_cstrs.data(), vocab_cstrs.size(), &vocab));

  pairre_store* train = nullptr;
  check(pairre_store_load(a.train_path.c_str(), vocab, &train));
  pairre_store* valid = nullptr;
  if (!a.valid_path.empty()) {
    check(pairre_store_load(a.valid_path.c_str(), vocab, &valid));
  }
  pairre_ruleset* rules = nullptr;
  if (!a.rules_path.empty()) {
    check(pairre_ruleset_parse(a.rules_path.c_str(), vocab, &rules));
  }

  // Run manifest: the command, the configuration (verbatim and normalized),
  // and a fingerprint of every input file. run_id hashes all of that, so
  // identical reruns share it and any input change moves it.
  std::string config_text = read_text(a.config_path);
  json manifest;
  manifest["command"] = "train";
  manifest["version"] = pairre_version();
  manifest["config_file"] = a.config_path;
  manifest["config_text"] = config_text;
  manifest["config"] = config_snapshot(config);
  json inputs = json::object();
  inputs[a.train_path] = hex64(hash_of(a.train_path));
  if (!a.valid_path.empty()) inputs[a.valid_path] = hex64(hash_of(a.valid_path));
  if (!a.rules_path.empty()) inputs[a.rules_path] = hex64(hash_of(a.rules_path));
  for (const std::string& f : a.vocab_files) inputs[f] = hex64(hash_of(f));
  manifest["inputs"] = inputs;
  manifest["threads"] = a.threads;

  uint64_t run_hash = fnv1a64_str(manifest.dump());
  std::string run_id = hex64(run_hash);
  manifest["run_id"] = run_id;
  std::string ref = "run_manifest.json#" + run_id;

  std::error_code ec;
  std::filesystem::create_directories(a.out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create directory %s\n",
                 a.out_dir.c_str());
    throw Bail{2};
  }
  std::string manifest_path =
      (std::filesystem::path(a.out_dir) / "run_manifest.json").string();
  write_text(manifest_path, manifest.dump(2) + "\n");

  pairre_model* model = nullptr;
  check(pairre_model_init(config, vocab, &model));

  double final_loss = 0.0, final_mrr = 0.0, best_mrr = 0.0;
  check(pairre_train(model, config, train, valid, rules, a.out_dir.c_str(),
                     a.threads, ref.c_str(), &final_loss, &final_mrr,
                     &best_mrr));
  print_warnings(model);

  double seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  manifest["wall_seconds"] = seconds;
  manifest["final_loss"] = final_loss;
  if (valid != nullptr) {
    manifest["final_valid_mrr"] = final_mrr;
    manifest["best_valid_mrr"] = best_mrr;
  }
  write_text(manifest_path, manifest.dump(2) + "\n");

  const char* steps = pairre_config_get(config, "max_steps");
  std::printf("trained %s steps in %.1fs, final loss %.6f\n",
              steps == nullptr ? "?" : steps, seconds, final_loss);
  if (valid != nullptr) {
    std::printf("valid MRR %.4f (best %.4f)\n", final_mrr, best_mrr);
  }
  std::printf("wrote %s\n",
              (std::filesystem::path(a.out_dir) / "checkpoint_final")
                  .string()
                  .c_str());

  pairre_model_free(model);
  if (rules != nullptr) pairre_ruleset_free(rules);
  if (valid != nullptr) pairre_store_free(valid);
  pairre_store_free(train);
  pairre_vocab_free(vocab);
  pairre_config_free(config);
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string test_path;
  std::vector<std::string> filter_paths;
  std::string out_path;
  std::string tie_policy = "mean";
  int threads = 1;
};

int cmd_eval(const EvalArgs& a) {
  auto t0 = std::chrono::steady_clock::now();

  pairre_model* model = nullptr;
  check(pairre_model_load(a.checkpoint.c_str(), &model));
  const pairre_vocab* vocab = pairre_model_vocab(model);

  pairre_store* test = nullptr;
  check(pairre_store_load(a.test_path.c_str(), vocab, &test));

  // The first filter file is the training split: it both seeds the filter
  // index and provides the relation-category statistics.
  std::vector<pairre_store*> filters;
  for (const std::string& f : a.filter_paths) {
    pairre_store* s = nullptr;
    check(pairre_store_load(f.c_str(), vocab, &s));
    filters.push_back(s);
  }

  std::string ref;
  json manifest;
  if (!a.out_path.empty()) {
    manifest["command"] = "eval";
    manifest["version"] = pairre_version();
    manifest["checkpoint"] = a.checkpoint;
    manifest["checkpoint_run_manifest"] = pairre_model_run_manifest(model);
    json inputs = json::object();
    inputs[a.test_path] = hex64(hash_of(a.test_path));
    for (const std::string& f : a.filter_paths) {
      inputs[f] = hex64(hash_of(f));
    }
    manifest["inputs"] = inputs;
    manifest["tie_policy"] = a.tie_policy;
    std::string run_id = hex64(fnv1a64_str(manifest.dump()));
    manifest["run_id"] = run_id;
    ref = std::filesystem::path(a.out_path).filename().string() +
          ".run_manifest.json#" + run_id;
  }

  pairre_report* report = nullptr;
  check(pairre_evaluate(model, test, filters.empty() ? test : filters[0],
                        const_cast<const pairre_store* const*>(filters.data()),
                        filters.size(), a.tie_policy.c_str(), a.threads,
                        ref.empty() ? nullptr : ref.c_str(), &report));

  const char* tsv = pairre_report_tsv(report);
  std::fputs(tsv, stdout);
  if (!a.out_path.empty()) {
    write_text(a.out_path, tsv);
    manifest["wall_seconds"] = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count();
    write_text(a.out_path + ".run_manifest.json", manifest.dump(2) + "\n");
  }

  pairre_report_free(report);
  for (pairre_store* s : filters) pairre_store_free(s);
  pairre_store_free(test);
  pairre_model_free(model);
  return 0;
}

struct AnalyzeArgs {
  std::string checkpoint;
  std::string pattern;
  std::vector<std::string> relations;
  int bins = 20;
  double tolerance = 1e-6;
  std::string out_path;
};

int cmd_analyze(const AnalyzeArgs& a) {
  pairre_model* model = nullptr;
  check(pairre_model_load(a.checkpoint.c_str(), &model));
  const pairre_vocab* vocab = pairre_model_vocab(model);

  std::vector<uint32_t> ids;
  for (const std::string& name : a.relations) {
    uint32_t id = 0;
    check(pairre_vocab_relation_id(vocab, name.c_str(), &id));
    ids.push_back(id);
  }

  double mean_abs = 0.0, max_abs = 0.0;
  check(pairre_pattern_residual(model, a.pattern.c_str(), ids.data(),
                                ids.size(), &mean_abs, &max_abs));
  check(pairre_histogram_write(model, a.pattern.c_str(), ids.data(),
                               ids.size(), a.bins, a.out_path.c_str()));

  std::string names;
  for (const std::string& name : a.relations) {
    if (!names.empty()) names += ", ";
    names += name;
  }
  std::printf("%s(%s): mean |residual| %.6g, max |residual| %.6g\n",
              a.pattern.c_str(), names.c_str(), mean_abs, max_abs);

  if (a.pattern == "subrelation") {
    int satisfied = 0;
    double mismatch = 0.0, max_alpha = 0.0;
    size_t indeterminate = 0;
    check(pairre_subrelation_check(model, ids[0], ids[1], a.tolerance,
                                   &satisfied, &mismatch, &max_alpha,
                                   &indeterminate));
    std::printf(
        "entailment ratio check: %s (max ratio mismatch %.6g, max |alpha| "
        "%.6g, %zu indeterminate dims)\n",
        satisfied ? "satisfied" : "violated", mismatch, max_alpha,
        indeterminate);
  }
  std::printf("wrote %s\n", a.out_path.c_str());

  pairre_model_free(model);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph embeddings with paired relation vectors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", []() { return pairre_version(); });

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train embeddings");
  train->add_option("--config", train_args.config_path, "key = value file")
      ->required();
  train->add_option("--train", train_args.train_path, "training triples (TSV)")
      ->required();
  train->add_option("--valid", train_args.valid_path,
                    "validation triples (TSV)");
  train->add_option("--rules", train_args.rules_path, "rule file");
  train->add_option("--vocab-file", train_args.vocab_files,
                    "extra triple files that contribute vocabulary names");
  train->add_option("--out", train_args.out_dir, "output directory")
      ->required();
  train->add_option("--threads", train_args.threads, "worker threads")
      ->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "filtered link prediction");
  eval->add_option("--checkpoint", eval_args.checkpoint,
                   "checkpoint directory")
      ->required();
  eval->add_option("--test", eval_args.test_path, "test triples (TSV)")
      ->required();
  eval->add_option("--filter", eval_args.filter_paths,
                   "known-true splits; the first is the training split and "
                   "supplies relation categories")
      ->required();
  eval->add_option("--out", eval_args.out_path, "report file (TSV)");
  eval->add_option("--tie-policy", eval_args.tie_policy,
                   "mean, optimistic, or pessimistic");
  eval->add_option("--threads", eval_args.threads, "worker threads")
      ->check(CLI::PositiveNumber);

  AnalyzeArgs an_args;
  CLI::App* analyze =
      app.add_subcommand("analyze", "relation-pattern residuals");
  analyze->add_option("--checkpoint", an_args.checkpoint,
                      "checkpoint directory")
      ->required();
  analyze->add_option("--pattern", an_args.pattern,
                      "symmetry, antisymmetry, inverse, composition, or "
                      "subrelation")
      ->required();
  analyze->add_option("--relations", an_args.relations,
                      "relation names, in pattern order")
      ->required()
      ->delimiter(',');
  analyze->add_option("--bins", an_args.bins, "histogram bins")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--tolerance", an_args.tolerance,
                      "ratio tolerance for the subrelation check");
  analyze->add_option("--out", an_args.out_path, "histogram file (TSV)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage problems exit 1
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    return cmd_analyze(an_args);
  } catch (const Bail& b) {
    return b.code;
  }
}
