#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"
#include "embedding.hpp"
#include "rules.hpp"
#include "rng.hpp"
#include "scoring.hpp"

namespace pairre {

// Softmax of (temperature * scores); temperature 0 yields uniform weights.
// Max-subtraction keeps the exponentials in range. The caller treats the
// result as constants: no gradient flows through these weights.
std::vector<double> adversarial_weights(std::span<const double> scores,
                                        double temperature);

// Margin loss over distances (negated scores):
//   L = -log sigmoid(gamma - pos_dist)
//       - sum_i weights[i] * log sigmoid(neg_dists[i] - gamma).
// A perfect positive (distance 0) with a large margin and far-away negatives
// drives L to 0; pos_dist = neg_dist = gamma gives exactly 2 ln 2.
double self_adversarial_loss(double pos_dist, std::span<const double> neg_dists,
                             std::span<const double> weights, double gamma);

// n ids drawn uniformly (with replacement) from all entities except true_id.
void sample_negatives(Rng& rng, uint32_t true_id, size_t num_entities, size_t n,
                      std::vector<uint32_t>& out);

// Rejection variant that avoids corruptions forming known-true triples; gives
// up after a bounded number of retries per draw and keeps the last candidate.
void sample_negatives_filtered(Rng& rng, const Triple& triple, Side side,
                               size_t num_entities, size_t n,
                               const FilterIndex& filter,
                               std::vector<uint32_t>& out);

struct StepReport {
  double loss = 0.0;          // full objective: data term + rule component
  double rule_penalty = 0.0;  // mu-scaled soft-rule component (0 without rules)
};

// One optimizer over one table. step() is bitwise deterministic;
// step_parallel() runs lock-free workers on disjoint batch slices and
// tolerates races on shared rows, trading reproducibility for throughput.
class Trainer {
 public:
  Trainer(EmbeddingTable& table, const TrainConfig& config,
          const RuleSet* rules = nullptr,
          const FilterIndex* negative_filter = nullptr);

  StepReport step(std::span<const Triple> batch);
  StepReport step_parallel(std::span<const Triple> batch, int threads);

  Rng& rng() { return rng_; }
  const std::vector<TyingDecl>& ties() const { return ties_; }
  size_t steps_done() const { return steps_done_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  double process_positive(const Triple& triple, double scale, Rng& rng,
                          GradBuffer& grads);
  void chain_ties(GradBuffer& grads, std::vector<std::vector<double>>& tgrads);
  void apply_updates(GradBuffer& grads,
                     std::vector<std::vector<double>>& tgrads, Rng& rng,
                     std::vector<std::string>* warnings);
  void rederive_children();
  std::vector<std::vector<double>> fresh_theta_grads() const;

  EmbeddingTable& table_;
  TrainConfig cfg_;
  std::vector<Rule> soft_;
  std::vector<TyingDecl> ties_;  // topologically ordered, theta owned here
  const FilterIndex* neg_filter_;
  Rng rng_;
  size_t steps_done_ = 0;
  std::vector<std::string> warnings_;
  // Adagrad accumulators (allocated only for that optimizer).
  std::vector<double> acc_entity_, acc_relation_, acc_theta_;
};

struct FitOptions {
  std::string out_dir;          // empty: train without writing artifacts
  int threads = 1;
  std::string run_manifest_ref; // stamped into checkpoints and the log
  const TripleStore* valid = nullptr;
  const Vocab* vocab = nullptr; // required when out_dir is set
};

struct FitResult {
  size_t steps = 0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  double final_rule_penalty = 0.0;
  double final_valid_mrr = std::numeric_limits<double>::quiet_NaN();
  double best_valid_mrr = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

// Runs max_steps batches with per-epoch shuffling; logs
// `step<TAB>loss<TAB>rule_penalty<TAB>valid_mrr` lines, evaluates on the
// valid split at valid_every boundaries (and after the last step), and
// writes checkpoint_final plus checkpoint_best under out_dir.
FitResult fit(EmbeddingTable& table, const TripleStore& train,
              const TrainConfig& config, const RuleSet* rules,
              const FitOptions& opts);

}  // namespace pairre
