#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "embedding.hpp"

namespace pairre {

enum class Optimizer { Sgd = 0, Adagrad = 1 };

// Hyperparameters, read from a `key = value` file. Unknown keys are errors;
// `#` starts a comment. Required keys: gamma, dim, learning_rate, batch_size,
// max_steps, num_negatives, seed.
struct TrainConfig {
  // required
  double gamma = 0.0;
  size_t dim = 0;
  double learning_rate = 0.0;
  size_t batch_size = 0;
  size_t max_steps = 0;
  size_t num_negatives = 0;
  uint64_t seed = 0;
  // optional, with defaults
  ScorerKind scorer = ScorerKind::PairRE;
  std::optional<bool> squared_distance;  // default depends on the scorer
  double adv_temperature = 1.0;          // 0 disables adversarial weighting
  double rule_weight = 1.0;              // mu; scales the soft-rule penalty
  Optimizer optimizer = Optimizer::Sgd;
  double adagrad_eps = 1e-10;
  bool filtered_negatives = false;       // consult the filter index if set
  size_t valid_every = 0;                // 0: evaluate only after the last step
  size_t checkpoint_every = 0;           // 0: only the final checkpoint
  size_t log_every = 1;

  // Squared distance matches the paired-projection score's printed form;
  // the translation/rotation baselines use the plain norm.
  bool resolved_squared() const {
    if (squared_distance.has_value()) return *squared_distance;
    return scorer == ScorerKind::PairRE;
  }

  // Normalized key=value pairs (defaults resolved), for run manifests.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

TrainConfig parse_config(const std::string& path);

}  // namespace pairre
