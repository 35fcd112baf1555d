#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "error.hpp"
#include "evaluator.hpp"
#include "fsio.hpp"

namespace pairre {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x < 0.0) return x - std::log1p(std::exp(x));
  return -std::log1p(std::exp(-x));
}

}  // namespace

std::vector<double> adversarial_weights(std::span<const double> scores,
                                        double temperature) {
  if (scores.empty()) {
    fail(Status::Usage, "adversarial weights over an empty score list");
  }
  size_t n = scores.size();
  std::vector<double> w(n);
  if (temperature == 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
    return w;
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) m = std::max(m, temperature * s);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    w[i] = std::exp(temperature * scores[i] - m);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

double self_adversarial_loss(double pos_dist, std::span<const double> neg_dists,
                             std::span<const double> weights, double gamma) {
  if (neg_dists.size() != weights.size()) {
    fail(Status::Usage, "loss: negative scores and weights disagree in length");
  }
  double loss = -log_sigmoid(gamma - pos_dist);
  for (size_t i = 0; i < neg_dists.size(); ++i) {
    loss -= weights[i] * log_sigmoid(neg_dists[i] - gamma);
  }
  return loss;
}

void sample_negatives(Rng& rng, uint32_t true_id, size_t num_entities, size_t n,
                      std::vector<uint32_t>& out) {
  if (num_entities < 2) {
    fail(Status::Usage, "negative sampling needs at least two entities");
  }
  out.clear();
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    uint32_t v = static_cast<uint32_t>(rng.next_below(num_entities - 1));
    if (v >= true_id) ++v;  // skip over the true entity
    out.push_back(v);
  }
}

void sample_negatives_filtered(Rng& rng, const Triple& triple, Side side,
                               size_t num_entities, size_t n,
                               const FilterIndex& filter,
                               std::vector<uint32_t>& out) {
  if (num_entities < 2) {
    fail(Status::Usage, "negative sampling needs at least two entities");
  }
  uint32_t true_id = side == Side::Head ? triple.head : triple.tail;
  out.clear();
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    uint32_t v = 0;
    for (int attempt = 0; attempt < 64; ++attempt) {
      v = static_cast<uint32_t>(rng.next_below(num_entities - 1));
      if (v >= true_id) ++v;
      bool known = side == Side::Head
                       ? filter.contains(v, triple.relation, triple.tail)
                       : filter.contains(triple.head, triple.relation, v);
      if (!known) break;  // else: retry; after the cap, keep the last draw
    }
    out.push_back(v);
  }
}

Trainer::Trainer(EmbeddingTable& table, const TrainConfig& config,
                 const RuleSet* rules, const FilterIndex* negative_filter)
    : table_(table),
      cfg_(config),
      neg_filter_(negative_filter),
      rng_(config.seed) {
  if (rules != nullptr) {
    soft_ = rules->soft;
    ties_ = rules->hard;
    if ((!soft_.empty() || !ties_.empty()) &&
        table_.kind != ScorerKind::PairRE) {
      fail(Status::Data,
           "rules need paired relation vectors (scorer 'pairre'), got '" +
               std::string(scorer_name(table_.kind)) + "'");
    }
  }
  // theta draws come from a dedicated sub-stream so that adding rules does
  // not shift the batch/negative sequences of the main stream.
  Rng theta_rng(mix_seed(cfg_.seed ^ 0x746965ULL));
  for (TyingDecl& decl : ties_) {
    if (decl.theta.size() != table_.dim) {
      init_theta(decl, table_.dim, theta_rng);
    }
    apply_tying(table_, decl);  // children consistent from step 0
  }
  if (cfg_.optimizer == Optimizer::Adagrad) {
    acc_entity_.assign(table_.entity.size(), 0.0);
    acc_relation_.assign(table_.relation.size(), 0.0);
    acc_theta_.assign(ties_.size() * table_.dim, 0.0);
  }
}

std::vector<std::vector<double>> Trainer::fresh_theta_grads() const {
  std::vector<std::vector<double>> t(ties_.size());
  for (auto& v : t) v.assign(table_.dim, 0.0);
  return t;
}

double Trainer::process_positive(const Triple& triple, double scale, Rng& rng,
                                 GradBuffer& grads) {
  double pos_score = score(table_, triple);
  double pos_dist = -pos_score;
  double loss = 0.0;

  std::vector<uint32_t> neg_ids;
  std::vector<double> neg_scores(cfg_.num_negatives);
  std::vector<double> neg_dists(cfg_.num_negatives);

  for (Side side : {Side::Head, Side::Tail}) {
    uint32_t true_id = side == Side::Head ? triple.head : triple.tail;
    if (neg_filter_ != nullptr) {
      sample_negatives_filtered(rng, triple, side, table_.num_entities,
                                cfg_.num_negatives, *neg_filter_, neg_ids);
    } else {
      sample_negatives(rng, true_id, table_.num_entities, cfg_.num_negatives,
                       neg_ids);
    }
    Triple neg = triple;
    for (size_t i = 0; i < neg_ids.size(); ++i) {
      (side == Side::Head ? neg.head : neg.tail) = neg_ids[i];
      neg_scores[i] = score(table_, neg);
      neg_dists[i] = -neg_scores[i];
    }
    std::vector<double> weights =
        adversarial_weights(neg_scores, cfg_.adv_temperature);
    loss += scale * self_adversarial_loss(pos_dist, neg_dists, weights,
                                          cfg_.gamma);

    // d loss / d score for each involved triple; the weights are constants.
    accumulate_gradients(table_, triple,
                         -scale * sigmoid(pos_dist - cfg_.gamma), grads);
    for (size_t i = 0; i < neg_ids.size(); ++i) {
      (side == Side::Head ? neg.head : neg.tail) = neg_ids[i];
      double up = scale * weights[i] * sigmoid(cfg_.gamma - neg_dists[i]);
      accumulate_gradients(table_, neg, up, grads);
    }
  }
  return loss;
}

void Trainer::chain_ties(GradBuffer& grads,
                         std::vector<std::vector<double>>& tgrads) {
  for (size_t i = ties_.size(); i-- > 0;) {
    chain_tied_gradient(table_, ties_[i], grads, tgrads[i]);
  }
}

void Trainer::apply_updates(GradBuffer& grads,
                            std::vector<std::vector<double>>& tgrads, Rng& rng,
                            std::vector<std::string>* warnings) {
  double lr = cfg_.learning_rate;
  bool adagrad = cfg_.optimizer == Optimizer::Adagrad;
  double eps = cfg_.adagrad_eps;

  // Only rows that actually moved get re-projected: a zero step (e.g. a
  // zero learning rate) must leave the table bitwise untouched.
  std::vector<uint32_t> moved;
  const std::vector<uint32_t>& eids = grads.touched_entities();
  for (size_t pos = 0; pos < eids.size(); ++pos) {
    std::span<double> g = grads.entity_at(pos);
    std::span<double> row = table_.entity_row(eids[pos]);
    double* acc =
        adagrad ? acc_entity_.data() + static_cast<size_t>(eids[pos]) * table_.dim
                : nullptr;
    bool changed = false;
    for (size_t i = 0; i < g.size(); ++i) {
      double delta;
      if (adagrad) {
        acc[i] += g[i] * g[i];
        delta = lr * g[i] / (std::sqrt(acc[i]) + eps);
      } else {
        delta = lr * g[i];
      }
      row[i] -= delta;
      changed |= delta != 0.0;
    }
    if (changed) moved.push_back(eids[pos]);
  }

  const std::vector<uint32_t>& rids = grads.touched_relations();
  for (size_t pos = 0; pos < rids.size(); ++pos) {
    std::span<double> g = grads.relation_at(pos);
    std::span<double> row = table_.relation_row(rids[pos]);
    double* acc = adagrad ? acc_relation_.data() +
                                static_cast<size_t>(rids[pos]) * table_.rel_width
                          : nullptr;
    for (size_t i = 0; i < g.size(); ++i) {
      if (adagrad) {
        acc[i] += g[i] * g[i];
        row[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
      } else {
        row[i] -= lr * g[i];
      }
    }
  }

  for (size_t k = 0; k < ties_.size(); ++k) {
    std::vector<double>& g = tgrads[k];
    std::vector<double>& theta = ties_[k].theta;
    double* acc = adagrad ? acc_theta_.data() + k * table_.dim : nullptr;
    for (size_t i = 0; i < theta.size(); ++i) {
      if (adagrad) {
        acc[i] += g[i] * g[i];
        theta[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
      } else {
        theta[i] -= lr * g[i];
      }
    }
  }

  project_entities(table_, moved, rng, warnings);
}

void Trainer::rederive_children() {
  for (const TyingDecl& decl : ties_) apply_tying(table_, decl);
}

StepReport Trainer::step(std::span<const Triple> batch) {
  if (batch.empty()) fail(Status::Usage, "empty training batch");
  GradBuffer grads(table_.dim, table_.rel_width);
  std::vector<std::vector<double>> tgrads = fresh_theta_grads();

  double scale = 1.0 / (2.0 * static_cast<double>(batch.size()));
  double data_loss = 0.0;
  for (const Triple& t : batch) {
    data_loss += process_positive(t, scale, rng_, grads);
  }
  double pen = soft_.empty()
                   ? 0.0
                   : rule_penalty(table_, soft_, &grads, cfg_.rule_weight);
  double pen_component = cfg_.rule_weight * pen;
  chain_ties(grads, tgrads);

  double total = data_loss + pen_component;
  if (!std::isfinite(total)) {
    fail(Status::Numeric,
         "non-finite loss at step " + std::to_string(steps_done_ + 1) +
             " (batch starts with triple " + std::to_string(batch[0].head) +
             "," + std::to_string(batch[0].relation) + "," +
             std::to_string(batch[0].tail) + ")");
  }

  apply_updates(grads, tgrads, rng_, &warnings_);
  rederive_children();
  ++steps_done_;
  return {total, pen_component};
}

StepReport Trainer::step_parallel(std::span<const Triple> batch, int threads) {
  size_t workers = threads < 1 ? 1 : std::min<size_t>(threads, batch.size());
  if (workers <= 1) return step(batch);
  if (batch.empty()) fail(Status::Usage, "empty training batch");

  // Soft-rule gradients are taken on the pre-step table by the coordinating
  // thread; workers race only on embedding rows, which this mode tolerates.
  GradBuffer main_grads(table_.dim, table_.rel_width);
  std::vector<std::vector<double>> main_tgrads = fresh_theta_grads();
  double pen = soft_.empty() ? 0.0
                             : rule_penalty(table_, soft_, &main_grads,
                                            cfg_.rule_weight);
  double pen_component = cfg_.rule_weight * pen;

  double scale = 1.0 / (2.0 * static_cast<double>(batch.size()));
  std::vector<double> worker_loss(workers, 0.0);
  size_t chunk = (batch.size() + workers - 1) / workers;
  uint64_t step_id = steps_done_;

  auto run = [&](size_t w) {
    Rng wrng(mix_seed(mix_seed(cfg_.seed ^ step_id) ^ (w + 1)));
    GradBuffer grads(table_.dim, table_.rel_width);
    std::vector<std::vector<double>> tgrads = fresh_theta_grads();
    size_t begin = w * chunk;
    size_t end = std::min(batch.size(), begin + chunk);
    for (size_t i = begin; i < end; ++i) {
      worker_loss[w] += process_positive(batch[i], scale, wrng, grads);
    }
    chain_ties(grads, tgrads);
    // no warnings sink: workers must not race on the shared vector
    apply_updates(grads, tgrads, wrng, nullptr);
  };
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  for (std::thread& th : pool) th.join();

  chain_ties(main_grads, main_tgrads);
  double total = pen_component;
  for (double l : worker_loss) total += l;
  if (!std::isfinite(total)) {
    fail(Status::Numeric,
         "non-finite loss at step " + std::to_string(steps_done_ + 1));
  }
  apply_updates(main_grads, main_tgrads, rng_, &warnings_);
  rederive_children();
  ++steps_done_;
  return {total, pen_component};
}

FitResult fit(EmbeddingTable& table, const TripleStore& train,
              const TrainConfig& config, const RuleSet* rules,
              const FitOptions& opts) {
  FitResult result;
  if (!opts.out_dir.empty() && opts.vocab == nullptr) {
    fail(Status::Usage, "fit: writing artifacts requires the vocab");
  }
  if (config.max_steps > 0) {
    if (train.triples.empty()) fail(Status::Data, "fit: empty training split");
    if (table.num_entities < 2) {
      fail(Status::Data, "fit: need at least two entities to sample negatives");
    }
  }

  const TripleStore* valid = opts.valid;
  if (valid != nullptr && valid->triples.empty()) {
    result.warnings.push_back("valid split is empty; skipping evaluation");
    valid = nullptr;
  }

  FilterIndex neg_filter;
  if (config.filtered_negatives) {
    std::vector<const TripleStore*> stores{&train};
    if (valid != nullptr) stores.push_back(valid);
    neg_filter = FilterIndex::build(stores);
  }
  Trainer trainer(table, config, rules,
                  config.filtered_negatives ? &neg_filter : nullptr);

  // Evaluation scaffolding: category labels from train, filter over the
  // splits visible at training time.
  std::vector<RelationCategory> categories;
  FilterIndex eval_filter;
  if (valid != nullptr) {
    categories = classify_relations(train, table.num_relations);
    eval_filter = FilterIndex::build({&train, valid});
  }

  std::ofstream log;
  if (!opts.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    if (ec) fail(Status::Io, "cannot create directory " + opts.out_dir);
    std::string log_path =
        (std::filesystem::path(opts.out_dir) / "train_log.tsv").string();
    log.open(log_path, std::ios::trunc);
    if (!log) fail(Status::Io, "cannot open " + log_path + " for writing");
    if (!opts.run_manifest_ref.empty()) {
      log << "# run_manifest: " << opts.run_manifest_ref << "\n";
    }
  }

  std::vector<size_t> perm(train.triples.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  size_t cursor = perm.size();  // trigger a shuffle on first use

  std::vector<Triple> batch;
  size_t effective_batch = std::min(config.batch_size, train.triples.size());
  for (size_t step = 1; step <= config.max_steps; ++step) {
    batch.clear();
    for (size_t b = 0; b < effective_batch; ++b) {
      if (cursor == perm.size()) {
        trainer.rng().shuffle(perm);
        cursor = 0;
      }
      batch.push_back(train.triples[perm[cursor++]]);
    }
    StepReport rep = opts.threads > 1
                         ? trainer.step_parallel(batch, opts.threads)
                         : trainer.step(batch);
    result.final_loss = rep.loss;
    result.final_rule_penalty = rep.rule_penalty;

    bool at_end = step == config.max_steps;
    bool do_valid =
        valid != nullptr &&
        ((config.valid_every > 0 && step % config.valid_every == 0) || at_end);
    double mrr = std::numeric_limits<double>::quiet_NaN();
    if (do_valid) {
      // Workers are joined between steps, so the table is quiescent here.
      RankingReport vrep = evaluate(table, *valid, eval_filter, categories,
                                    TiePolicy::Mean, opts.threads);
      mrr = vrep.overall.both.mrr;
      result.final_valid_mrr = mrr;
      if (!(result.best_valid_mrr >= mrr)) {  // NaN-safe improvement test
        result.best_valid_mrr = mrr;
        if (!opts.out_dir.empty()) {
          save_checkpoint(table, *opts.vocab,
                          (std::filesystem::path(opts.out_dir) /
                           "checkpoint_best")
                              .string(),
                          opts.run_manifest_ref);
        }
      }
    }
    if (log.is_open() &&
        (step % config.log_every == 0 || at_end || do_valid)) {
      log << step << "\t" << fmt_g17(rep.loss) << "\t"
          << fmt_g17(rep.rule_penalty) << "\t" << fmt_g17(mrr) << "\n";
      log.flush();
    }
    if (!opts.out_dir.empty() && config.checkpoint_every > 0 &&
        step % config.checkpoint_every == 0 && !at_end) {
      save_checkpoint(table, *opts.vocab,
                      (std::filesystem::path(opts.out_dir) /
                       ("checkpoint_step_" + std::to_string(step)))
                          .string(),
                      opts.run_manifest_ref);
    }
    result.steps = step;
  }

  if (!opts.out_dir.empty()) {
    save_checkpoint(
        table, *opts.vocab,
        (std::filesystem::path(opts.out_dir) / "checkpoint_final").string(),
        opts.run_manifest_ref);
  }
  for (const std::string& w : trainer.warnings()) result.warnings.push_back(w);
  return result;
}

}  // namespace pairre
