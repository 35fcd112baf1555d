#include "pairre.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "evaluator.hpp"
#include "fsio.hpp"
#include "rules.hpp"
#include "scoring.hpp"
#include "trainer.hpp"

#ifndef PAIRRE_VERSION
#define PAIRRE_VERSION "unknown"
#endif

// Handle definitions. Each wraps the corresponding core object; the extra
// string members cache text whose lifetime the header ties to the handle.
struct pairre_vocab {
  pairre::Vocab v;
};
struct pairre_store {
  pairre::TripleStore s;
};
struct pairre_filter {
  pairre::FilterIndex f;
};
struct pairre_config {
  pairre::TrainConfig c;
  std::vector<std::pair<std::string, std::string>> echo;
};
struct pairre_ruleset {
  pairre::RuleSet r;
};
struct pairre_model {
  pairre::EmbeddingTable table;
  pairre_vocab vocab;  // lives here so pairre_model_vocab can lend it out
  std::string run_ref;
  std::string warnings;
};
struct pairre_report {
  pairre::RankingReport r;
  std::string json_cache;
  std::string tsv_cache;
};

namespace {

thread_local std::string g_last_error;

pairre_status map_status(pairre::Status s) {
  switch (s) {
    case pairre::Status::Ok: return PAIRRE_OK;
    case pairre::Status::Usage: return PAIRRE_ERR_USAGE;
    case pairre::Status::Data: return PAIRRE_ERR_DATA;
    case pairre::Status::Numeric: return PAIRRE_ERR_NUMERIC;
    case pairre::Status::Io: return PAIRRE_ERR_IO;
    case pairre::Status::Internal: return PAIRRE_ERR_INTERNAL;
  }
  return PAIRRE_ERR_INTERNAL;
}

// Runs the body, converting exceptions to status codes + last-error text.
template <typename F>
pairre_status guarded(F&& body) {
  try {
    body();
    return PAIRRE_OK;
  } catch (const pairre::Error& e) {
    g_last_error = e.what();
    return map_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PAIRRE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PAIRRE_ERR_INTERNAL;
  }
}

pairre_status usage_error(const char* message) {
  g_last_error = message;
  return PAIRRE_ERR_USAGE;
}

std::string opt_str(const char* s) { return s == nullptr ? std::string() : s; }

}  // namespace

extern "C" {

const char* pairre_last_error(void) { return g_last_error.c_str(); }

const char* pairre_version(void) { return PAIRRE_VERSION; }

pairre_status pairre_file_hash(const char* path, uint64_t* out_hash) {
  if (path == nullptr || out_hash == nullptr) {
    return usage_error("pairre_file_hash: NULL argument");
  }
  return guarded([&] { *out_hash = pairre::fnv1a64_file(path); });
}

/* ---- vocabulary ------------------------------------------------------- */

pairre_status pairre_vocab_build(const char* const* triple_files,
                                 size_t num_files, pairre_vocab** out) {
  if (out == nullptr || (num_files > 0 && triple_files == nullptr)) {
    return usage_error("pairre_vocab_build: NULL argument");
  }
  return guarded([&] {
    std::vector<std::string> files;
    files.reserve(num_files);
    for (size_t i = 0; i < num_files; ++i) {
      if (triple_files[i] == nullptr) {
        pairre::fail(pairre::Status::Usage,
                     "pairre_vocab_build: NULL file path");
      }
      files.emplace_back(triple_files[i]);
    }
    auto* h = new pairre_vocab{pairre::Vocab::build(files)};
    *out = h;
  });
}

pairre_status pairre_vocab_load(const char* entity_file,
                                const char* relation_file,
                                pairre_vocab** out) {
  if (entity_file == nullptr || relation_file == nullptr || out == nullptr) {
    return usage_error("pairre_vocab_load: NULL argument");
  }
  return guarded([&] {
    *out = new pairre_vocab{pairre::Vocab::load(entity_file, relation_file)};
  });
}

pairre_status pairre_vocab_save(const pairre_vocab* vocab,
                                const char* entity_file,
                                const char* relation_file) {
  if (vocab == nullptr || entity_file == nullptr || relation_file == nullptr) {
    return usage_error("pairre_vocab_save: NULL argument");
  }
  return guarded([&] { vocab->v.save(entity_file, relation_file); });
}

size_t pairre_vocab_num_entities(const pairre_vocab* vocab) {
  return vocab == nullptr ? 0 : vocab->v.num_entities();
}

size_t pairre_vocab_num_relations(const pairre_vocab* vocab) {
  return vocab == nullptr ? 0 : vocab->v.num_relations();
}

pairre_status pairre_vocab_entity_id(const pairre_vocab* vocab,
                                     const char* name, uint32_t* out_id) {
  if (vocab == nullptr || name == nullptr || out_id == nullptr) {
    return usage_error("pairre_vocab_entity_id: NULL argument");
  }
  return guarded([&] { *out_id = vocab->v.entity_id(name); });
}

pairre_status pairre_vocab_relation_id(const pairre_vocab* vocab,
                                       const char* name, uint32_t* out_id) {
  if (vocab == nullptr || name == nullptr || out_id == nullptr) {
    return usage_error("pairre_vocab_relation_id: NULL argument");
  }
  return guarded([&] { *out_id = vocab->v.relation_id(name); });
}

const char* pairre_vocab_entity_name(const pairre_vocab* vocab, uint32_t id) {
  if (vocab == nullptr || id >= vocab->v.num_entities()) return nullptr;
  return vocab->v.entity_name(id).c_str();
}

const char* pairre_vocab_relation_name(const pairre_vocab* vocab,
                                       uint32_t id) {
  if (vocab == nullptr || id >= vocab->v.num_relations()) return nullptr;
  return vocab->v.relation_name(id).c_str();
}

void pairre_vocab_free(pairre_vocab* vocab) { delete vocab; }

/* ---- triple stores ---------------------------------------------------- */

pairre_status pairre_store_load(const char* path, const pairre_vocab* vocab,
                                pairre_store** out) {
  if (path == nullptr || vocab == nullptr || out == nullptr) {
    return usage_error("pairre_store_load: NULL argument");
  }
  return guarded([&] {
    *out = new pairre_store{
        pairre::load_split(path, vocab->v, pairre::Split::Train)};
  });
}

size_t pairre_store_size(const pairre_store* store) {
  return store == nullptr ? 0 : store->s.triples.size();
}

size_t pairre_store_duplicates_dropped(const pairre_store* store) {
  return store == nullptr ? 0 : store->s.duplicates_dropped;
}

uint64_t pairre_store_hash(const pairre_store* store) {
  return store == nullptr ? 0 : store->s.source_hash;
}

void pairre_store_free(pairre_store* store) { delete store; }

/* ---- known-true filter ------------------------------------------------ */

pairre_status pairre_filter_build(const pairre_store* const* stores,
                                  size_t num_stores, pairre_filter** out) {
  if (out == nullptr || (num_stores > 0 && stores == nullptr)) {
    return usage_error("pairre_filter_build: NULL argument");
  }
  return guarded([&] {
    std::vector<const pairre::TripleStore*> raw;
    raw.reserve(num_stores);
    for (size_t i = 0; i < num_stores; ++i) {
      raw.push_back(stores[i] == nullptr ? nullptr : &stores[i]->s);
    }
    *out = new pairre_filter{pairre::FilterIndex::build(raw)};
  });
}

int pairre_filter_contains(const pairre_filter* filter, uint32_t head,
                           uint32_t relation, uint32_t tail) {
  if (filter == nullptr) return 0;
  return filter->f.contains(head, relation, tail) ? 1 : 0;
}

void pairre_filter_free(pairre_filter* filter) { delete filter; }

/* ---- training configuration ------------------------------------------ */

pairre_status pairre_config_load(const char* path, pairre_config** out) {
  if (path == nullptr || out == nullptr) {
    return usage_error("pairre_config_load: NULL argument");
  }
  return guarded([&] {
    auto* h = new pairre_config{pairre::parse_config(path), {}};
    h->echo = h->c.echo();
    *out = h;
  });
}

const char* pairre_config_get(const pairre_config* config, const char* key) {
  if (config == nullptr || key == nullptr) return nullptr;
  for (const auto& [k, v] : config->echo) {
    if (k == key) return v.c_str();
  }
  return nullptr;
}

void pairre_config_free(pairre_config* config) { delete config; }

/* ---- rules ------------------------------------------------------------ */

pairre_status pairre_ruleset_parse(const char* path,
                                   const pairre_vocab* vocab,
                                   pairre_ruleset** out) {
  if (path == nullptr || vocab == nullptr || out == nullptr) {
    return usage_error("pairre_ruleset_parse: NULL argument");
  }
  return guarded(
      [&] { *out = new pairre_ruleset{pairre::parse_rules(path, vocab->v)}; });
}

size_t pairre_ruleset_num_soft(const pairre_ruleset* rules) {
  return rules == nullptr ? 0 : rules->r.soft.size();
}

size_t pairre_ruleset_num_ties(const pairre_ruleset* rules) {
  return rules == nullptr ? 0 : rules->r.hard.size();
}

void pairre_ruleset_free(pairre_ruleset* rules) { delete rules; }

/* ---- model ------------------------------------------------------------ */

pairre_status pairre_model_init(const pairre_config* config,
                                const pairre_vocab* vocab,
                                pairre_model** out) {
  if (config == nullptr || vocab == nullptr || out == nullptr) {
    return usage_error("pairre_model_init: NULL argument");
  }
  return guarded([&] {
    const pairre::TrainConfig& c = config->c;
    auto* h = new pairre_model{
        pairre::init_embeddings(c.scorer, vocab->v.num_entities(),
                                vocab->v.num_relations(), c.dim, c.gamma,
                                c.resolved_squared(), c.seed),
        pairre_vocab{vocab->v},
        {},
        {}};
    *out = h;
  });
}

pairre_status pairre_model_load(const char* checkpoint_dir,
                                pairre_model** out) {
  if (checkpoint_dir == nullptr || out == nullptr) {
    return usage_error("pairre_model_load: NULL argument");
  }
  return guarded([&] {
    pairre::Checkpoint cp = pairre::load_checkpoint(checkpoint_dir);
    auto* h = new pairre_model{std::move(cp.table),
                               pairre_vocab{std::move(cp.vocab)},
                               std::move(cp.run_manifest_ref),
                               {}};
    *out = h;
  });
}

pairre_status pairre_model_save(const pairre_model* model, const char* dir,
                                const char* run_manifest_ref) {
  if (model == nullptr || dir == nullptr) {
    return usage_error("pairre_model_save: NULL argument");
  }
  return guarded([&] {
    pairre::save_checkpoint(model->table, model->vocab.v, dir,
                            opt_str(run_manifest_ref));
  });
}

const pairre_vocab* pairre_model_vocab(const pairre_model* model) {
  return model == nullptr ? nullptr : &model->vocab;
}

size_t pairre_model_dim(const pairre_model* model) {
  return model == nullptr ? 0 : model->table.dim;
}

double pairre_model_gamma(const pairre_model* model) {
  return model == nullptr ? 0.0 : model->table.gamma;
}

const char* pairre_model_scorer(const pairre_model* model) {
  return model == nullptr ? nullptr : pairre::scorer_name(model->table.kind);
}

const char* pairre_model_run_manifest(const pairre_model* model) {
  return model == nullptr ? "" : model->run_ref.c_str();
}

const char* pairre_model_warnings(const pairre_model* model) {
  return model == nullptr ? "" : model->warnings.c_str();
}

pairre_status pairre_model_score(const pairre_model* model, uint32_t head,
                                 uint32_t relation, uint32_t tail,
                                 double* out_score) {
  if (model == nullptr || out_score == nullptr) {
    return usage_error("pairre_model_score: NULL argument");
  }
  return guarded([&] {
    if (head >= model->table.num_entities ||
        tail >= model->table.num_entities ||
        relation >= model->table.num_relations) {
      pairre::fail(pairre::Status::Usage,
                   "pairre_model_score: id out of range");
    }
    *out_score = pairre::score(model->table, head, relation, tail);
  });
}

void pairre_model_free(pairre_model* model) { delete model; }

/* ---- training ---------------------------------------------------------- */

pairre_status pairre_train(pairre_model* model, const pairre_config* config,
                           const pairre_store* train,
                           const pairre_store* valid,
                           const pairre_ruleset* rules, const char* out_dir,
                           int threads, const char* run_manifest_ref,
                           double* out_final_loss, double* out_final_valid_mrr,
                           double* out_best_valid_mrr) {
  if (model == nullptr || config == nullptr || train == nullptr) {
    return usage_error("pairre_train: NULL argument");
  }
  return guarded([&] {
    pairre::FitOptions opts;
    opts.out_dir = opt_str(out_dir);
    opts.threads = threads;
    opts.run_manifest_ref = opt_str(run_manifest_ref);
    opts.valid = valid == nullptr ? nullptr : &valid->s;
    opts.vocab = &model->vocab.v;
    pairre::FitResult res = pairre::fit(
        model->table, train->s, config->c,
        rules == nullptr ? nullptr : &rules->r, opts);
    model->warnings.clear();
    for (const std::string& w : res.warnings) {
      if (!model->warnings.empty()) model->warnings += '\n';
      model->warnings += w;
    }
    if (out_final_loss != nullptr) *out_final_loss = res.final_loss;
    if (out_final_valid_mrr != nullptr) {
      *out_final_valid_mrr = res.final_valid_mrr;
    }
    if (out_best_valid_mrr != nullptr) *out_best_valid_mrr = res.best_valid_mrr;
  });
}

/* ---- evaluation -------------------------------------------------------- */

pairre_status pairre_evaluate(const pairre_model* model,
                              const pairre_store* test,
                              const pairre_store* categories_from,
                              const pairre_store* const* filter_stores,
                              size_t num_filter_stores, const char* tie_policy,
                              int threads, const char* run_manifest_ref,
                              pairre_report** out) {
  if (model == nullptr || test == nullptr || categories_from == nullptr ||
      out == nullptr || (num_filter_stores > 0 && filter_stores == nullptr)) {
    return usage_error("pairre_evaluate: NULL argument");
  }
  return guarded([&] {
    pairre::TiePolicy policy =
        tie_policy == nullptr ? pairre::TiePolicy::Mean
                              : pairre::tie_policy_from_name(tie_policy);
    std::vector<const pairre::TripleStore*> raw;
    raw.reserve(num_filter_stores + 1);
    for (size_t i = 0; i < num_filter_stores; ++i) {
      raw.push_back(filter_stores[i] == nullptr ? nullptr
                                                : &filter_stores[i]->s);
    }
    raw.push_back(&test->s);  // the test split always filters itself
    pairre::FilterIndex filter = pairre::FilterIndex::build(raw);
    std::vector<pairre::RelationCategory> categories =
        pairre::classify_relations(categories_from->s,
                                   model->table.num_relations);
    auto* h = new pairre_report{
        pairre::evaluate(model->table, test->s, filter, categories, policy,
                         threads),
        {},
        {}};
    h->r.run_manifest = opt_str(run_manifest_ref);
    *out = h;
  });
}

const char* pairre_report_json(pairre_report* report) {
  if (report == nullptr) return nullptr;
  if (report->json_cache.empty()) report->json_cache = report->r.to_json();
  return report->json_cache.c_str();
}

const char* pairre_report_tsv(pairre_report* report) {
  if (report == nullptr) return nullptr;
  if (report->tsv_cache.empty()) report->tsv_cache = report->r.to_tsv();
  return report->tsv_cache.c_str();
}

pairre_status pairre_report_metric(const pairre_report* report,
                                   const char* scope, const char* side,
                                   const char* metric, double* out) {
  if (report == nullptr || scope == nullptr || side == nullptr ||
      metric == nullptr || out == nullptr) {
    return usage_error("pairre_report_metric: NULL argument");
  }
  return guarded([&] { *out = report->r.metric(scope, side, metric); });
}

void pairre_report_free(pairre_report* report) { delete report; }

/* ---- relation-pattern analysis ----------------------------------------- */

namespace {

bool relations_in_range(const pairre_model* model, const uint32_t* relations,
                        size_t num_relations) {
  for (size_t i = 0; i < num_relations; ++i) {
    if (relations[i] >= model->table.num_relations) return false;
  }
  return true;
}

}  // namespace

pairre_status pairre_pattern_residual(const pairre_model* model,
                                      const char* pattern,
                                      const uint32_t* relations,
                                      size_t num_relations,
                                      double* out_mean_abs,
                                      double* out_max_abs) {
  if (model == nullptr || pattern == nullptr ||
      (num_relations > 0 && relations == nullptr)) {
    return usage_error("pairre_pattern_residual: NULL argument");
  }
  if (!relations_in_range(model, relations, num_relations)) {
    return usage_error("pairre_pattern_residual: relation id out of range");
  }
  return guarded([&] {
    pairre::PatternResidual res = pairre::pattern_residual(
        model->table, pairre::pattern_from_name(pattern),
        {relations, num_relations});
    if (out_mean_abs != nullptr) *out_mean_abs = res.mean_abs;
    if (out_max_abs != nullptr) *out_max_abs = res.max_abs;
  });
}

pairre_status pairre_histogram_write(const pairre_model* model,
                                     const char* pattern,
                                     const uint32_t* relations,
                                     size_t num_relations, int bins,
                                     const char* path) {
  if (model == nullptr || pattern == nullptr || path == nullptr ||
      (num_relations > 0 && relations == nullptr)) {
    return usage_error("pairre_histogram_write: NULL argument");
  }
  if (!relations_in_range(model, relations, num_relations)) {
    return usage_error("pairre_histogram_write: relation id out of range");
  }
  return guarded([&] {
    pairre::PatternResidual res = pairre::pattern_residual(
        model->table, pairre::pattern_from_name(pattern),
        {relations, num_relations});
    pairre::export_histogram(res, bins, path);
  });
}

pairre_status pairre_subrelation_check(const pairre_model* model, uint32_t r1,
                                       uint32_t r2, double tolerance,
                                       int* out_satisfied,
                                       double* out_max_ratio_mismatch,
                                       double* out_max_abs_alpha,
                                       size_t* out_num_indeterminate) {
  if (model == nullptr) {
    return usage_error("pairre_subrelation_check: NULL argument");
  }
  const uint32_t pair[] = {r1, r2};
  if (!relations_in_range(model, pair, 2)) {
    return usage_error("pairre_subrelation_check: relation id out of range");
  }
  return guarded([&] {
    pairre::SubrelationReport rep =
        pairre::check_subrelation_constraint(model->table, r1, r2, tolerance);
    if (out_satisfied != nullptr) *out_satisfied = rep.satisfied ? 1 : 0;
    if (out_max_ratio_mismatch != nullptr) {
      *out_max_ratio_mismatch = rep.max_ratio_mismatch;
    }
    if (out_max_abs_alpha != nullptr) *out_max_abs_alpha = rep.max_abs_alpha;
    if (out_num_indeterminate != nullptr) {
      *out_num_indeterminate = rep.indeterminate.size();
    }
  });
}

} /* extern "C" */
