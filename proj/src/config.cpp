#include "config.hpp"

#include <cmath>
#include <cstdlib>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"
#include "fsio.hpp"

namespace pairre {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end == nullptr || *end != '\0') {
    fail(Status::Data, "config: bad numeric value for '" + key + "': " + v);
  }
  return x;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end == nullptr || *end != '\0' || v[0] == '-') {
    fail(Status::Data, "config: bad integer value for '" + key + "': " + v);
  }
  return static_cast<uint64_t>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(Status::Data,
       "config: '" + key + "' must be true or false, got: " + v);
}

}  // namespace

TrainConfig parse_config(const std::string& path) {
  std::unordered_map<std::string, std::string> kv;
  std::string content = read_file(path);
  size_t start = 0, lineno = 0;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    size_t stop = end == std::string::npos ? content.size() : end;
    std::string line = content.substr(start, stop - start);
    start = end == std::string::npos ? content.size() : end + 1;
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(Status::Data, path + ":" + std::to_string(lineno) +
                             ": expected `key = value`");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(Status::Data, path + ":" + std::to_string(lineno) +
                             ": expected `key = value`");
    }
    if (!kv.emplace(key, value).second) {
      fail(Status::Data,
           path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }

  static const std::unordered_set<std::string> known = {
      "gamma",          "dim",
      "learning_rate",  "batch_size",
      "max_steps",      "num_negatives",
      "seed",           "scorer",
      "squared_distance", "adv_temperature",
      "rule_weight",    "optimizer",
      "adagrad_eps",    "filtered_negatives",
      "valid_every",    "checkpoint_every",
      "log_every"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) {
      fail(Status::Data, "config: unknown key '" + key + "'");
    }
  }
  for (const char* req : {"gamma", "dim", "learning_rate", "batch_size",
                          "max_steps", "num_negatives", "seed"}) {
    if (!kv.count(req)) {
      fail(Status::Data, "config: missing required key '" + std::string(req) + "'");
    }
  }

  TrainConfig c;
  c.gamma = parse_double("gamma", kv["gamma"]);
  c.dim = static_cast<size_t>(parse_u64("dim", kv["dim"]));
  c.learning_rate = parse_double("learning_rate", kv["learning_rate"]);
  c.batch_size = static_cast<size_t>(parse_u64("batch_size", kv["batch_size"]));
  c.max_steps = static_cast<size_t>(parse_u64("max_steps", kv["max_steps"]));
  c.num_negatives =
      static_cast<size_t>(parse_u64("num_negatives", kv["num_negatives"]));
  c.seed = parse_u64("seed", kv["seed"]);
  if (kv.count("scorer")) {
    try {
      c.scorer = scorer_from_name(kv["scorer"]);
    } catch (const Error&) {
      fail(Status::Data, "config: unknown scorer '" + kv["scorer"] + "'");
    }
  }
  if (kv.count("squared_distance")) {
    c.squared_distance = parse_bool("squared_distance", kv["squared_distance"]);
  }
  if (kv.count("adv_temperature")) {
    c.adv_temperature = parse_double("adv_temperature", kv["adv_temperature"]);
  }
  if (kv.count("rule_weight")) {
    c.rule_weight = parse_double("rule_weight", kv["rule_weight"]);
  }
  if (kv.count("optimizer")) {
    const std::string& v = kv["optimizer"];
    if (v == "sgd") {
      c.optimizer = Optimizer::Sgd;
    } else if (v == "adagrad") {
      c.optimizer = Optimizer::Adagrad;
    } else {
      fail(Status::Data, "config: unknown optimizer '" + v + "'");
    }
  }
  if (kv.count("adagrad_eps")) {
    c.adagrad_eps = parse_double("adagrad_eps", kv["adagrad_eps"]);
  }
  if (kv.count("filtered_negatives")) {
    c.filtered_negatives =
        parse_bool("filtered_negatives", kv["filtered_negatives"]);
  }
  if (kv.count("valid_every")) {
    c.valid_every = static_cast<size_t>(parse_u64("valid_every", kv["valid_every"]));
  }
  if (kv.count("checkpoint_every")) {
    c.checkpoint_every =
        static_cast<size_t>(parse_u64("checkpoint_every", kv["checkpoint_every"]));
  }
  if (kv.count("log_every")) {
    c.log_every = static_cast<size_t>(parse_u64("log_every", kv["log_every"]));
  }

  // Range validation, each message naming its key.
  if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) {
    fail(Status::Data, "config: 'gamma' must be a positive real");
  }
  if (c.dim == 0) fail(Status::Data, "config: 'dim' must be >= 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    fail(Status::Data, "config: 'learning_rate' must be a non-negative real");
  }
  if (c.batch_size == 0) fail(Status::Data, "config: 'batch_size' must be >= 1");
  if (c.num_negatives == 0) {
    fail(Status::Data, "config: 'num_negatives' must be >= 1");
  }
  if (c.adv_temperature < 0.0 || !std::isfinite(c.adv_temperature)) {
    fail(Status::Data, "config: 'adv_temperature' must be >= 0");
  }
  if (c.rule_weight < 0.0 || !std::isfinite(c.rule_weight)) {
    fail(Status::Data, "config: 'rule_weight' must be >= 0");
  }
  if (!(c.adagrad_eps > 0.0)) {
    fail(Status::Data, "config: 'adagrad_eps' must be > 0");
  }
  if (c.log_every == 0) fail(Status::Data, "config: 'log_every' must be >= 1");
  if ((c.scorer == ScorerKind::RotatE || c.scorer == ScorerKind::RotatePaired) &&
      c.dim % 2 != 0) {
    fail(Status::Data, "config: 'dim' must be even for rotation scorers");
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("gamma", fmt_g17(gamma));
  out.emplace_back("dim", std::to_string(dim));
  out.emplace_back("learning_rate", fmt_g17(learning_rate));
  out.emplace_back("batch_size", std::to_string(batch_size));
  out.emplace_back("max_steps", std::to_string(max_steps));
  out.emplace_back("num_negatives", std::to_string(num_negatives));
  out.emplace_back("seed", std::to_string(seed));
  out.emplace_back("scorer", scorer_name(scorer));
  out.emplace_back("squared_distance", resolved_squared() ? "true" : "false");
  out.emplace_back("adv_temperature", fmt_g17(adv_temperature));
  out.emplace_back("rule_weight", fmt_g17(rule_weight));
  out.emplace_back("optimizer", optimizer == Optimizer::Sgd ? "sgd" : "adagrad");
  out.emplace_back("adagrad_eps", fmt_g17(adagrad_eps));
  out.emplace_back("filtered_negatives", filtered_negatives ? "true" : "false");
  out.emplace_back("valid_every", std::to_string(valid_every));
  out.emplace_back("checkpoint_every", std::to_string(checkpoint_every));
  out.emplace_back("log_every", std::to_string(log_every));
  return out;
}

}  // namespace pairre
