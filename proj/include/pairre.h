/* C interface to the pairre knowledge-graph-embedding library.
 *
 * Every object is an opaque handle created by a pairre_*_load/build/init
 * call and released by the matching pairre_*_free. Functions that can fail
 * return a pairre_status; on anything but PAIRRE_OK a human-readable
 * message is available from pairre_last_error() until the next failing
 * call on the same thread. Out parameters are written only on PAIRRE_OK.
 *
 * Returned const char* pointers borrow from the handle they came from and
 * stay valid until that handle is freed (for pairre_last_error: until the
 * next failure on the thread). The library never takes ownership of caller
 * memory; handles passed as inputs are only borrowed for the call unless
 * noted otherwise.
 */
#ifndef PAIRRE_H
#define PAIRRE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pairre_status {
  PAIRRE_OK = 0,
  PAIRRE_ERR_USAGE = 1,    /* caller broke the contract (bad arg, bad name) */
  PAIRRE_ERR_DATA = 2,     /* malformed or inconsistent input data */
  PAIRRE_ERR_NUMERIC = 3,  /* non-finite values where finite ones are required */
  PAIRRE_ERR_IO = 4,       /* file could not be read or written */
  PAIRRE_ERR_INTERNAL = 5, /* invariant violation inside the library */
} pairre_status;

typedef struct pairre_vocab pairre_vocab;
typedef struct pairre_store pairre_store;
typedef struct pairre_filter pairre_filter;
typedef struct pairre_config pairre_config;
typedef struct pairre_ruleset pairre_ruleset;
typedef struct pairre_model pairre_model;
typedef struct pairre_report pairre_report;

/* Message from the most recent failing call on this thread ("" if none). */
const char* pairre_last_error(void);

/* Library version string (git describe at build time). */
const char* pairre_version(void);

/* FNV-1a (64 bit) of a file's raw bytes; the fingerprint run manifests use. */
pairre_status pairre_file_hash(const char* path, uint64_t* out_hash);

/* ---- vocabulary ------------------------------------------------------- */

/* Scans head<TAB>relation<TAB>tail files in order; ids are assigned by
 * first appearance. */
pairre_status pairre_vocab_build(const char* const* triple_files,
                                 size_t num_files, pairre_vocab** out);

/* Reads the persisted one-name-per-line form (line number = id). */
pairre_status pairre_vocab_load(const char* entity_file,
                                const char* relation_file, pairre_vocab** out);

pairre_status pairre_vocab_save(const pairre_vocab* vocab,
                                const char* entity_file,
                                const char* relation_file);

size_t pairre_vocab_num_entities(const pairre_vocab* vocab);
size_t pairre_vocab_num_relations(const pairre_vocab* vocab);

pairre_status pairre_vocab_entity_id(const pairre_vocab* vocab,
                                     const char* name, uint32_t* out_id);
pairre_status pairre_vocab_relation_id(const pairre_vocab* vocab,
                                       const char* name, uint32_t* out_id);

/* NULL when the id is out of range. */
const char* pairre_vocab_entity_name(const pairre_vocab* vocab, uint32_t id);
const char* pairre_vocab_relation_name(const pairre_vocab* vocab, uint32_t id);

void pairre_vocab_free(pairre_vocab* vocab);

/* ---- triple stores ---------------------------------------------------- */

/* Loads one TSV split against an existing vocabulary. Unknown names and
 * malformed lines are PAIRRE_ERR_DATA naming the file and line; exact
 * duplicate triples are dropped and counted. */
pairre_status pairre_store_load(const char* path, const pairre_vocab* vocab,
                                pairre_store** out);

size_t pairre_store_size(const pairre_store* store);
size_t pairre_store_duplicates_dropped(const pairre_store* store);
uint64_t pairre_store_hash(const pairre_store* store);

void pairre_store_free(pairre_store* store);

/* ---- known-true filter ------------------------------------------------ */

pairre_status pairre_filter_build(const pairre_store* const* stores,
                                  size_t num_stores, pairre_filter** out);

/* 1 when the triple occurs in any of the indexed stores, else 0. */
int pairre_filter_contains(const pairre_filter* filter, uint32_t head,
                           uint32_t relation, uint32_t tail);

void pairre_filter_free(pairre_filter* filter);

/* ---- training configuration ------------------------------------------ */

/* Parses a key = value file. Unknown keys, missing required keys, and
 * out-of-range values are PAIRRE_ERR_DATA. */
pairre_status pairre_config_load(const char* path, pairre_config** out);

/* Normalized value for a key, with defaults resolved ("pairre", "true", ...);
 * NULL for a key the configuration does not define. */
const char* pairre_config_get(const pairre_config* config, const char* key);

void pairre_config_free(pairre_config* config);

/* ---- rules ------------------------------------------------------------ */

/* Parses a rule file: `subrelation r1 r2 [lambda]`, `equiv r1 r2 [lambda]`,
 * `inverse r1 r2 [lambda]`, `tie parent child`. */
pairre_status pairre_ruleset_parse(const char* path, const pairre_vocab* vocab,
                                   pairre_ruleset** out);

size_t pairre_ruleset_num_soft(const pairre_ruleset* rules);
size_t pairre_ruleset_num_ties(const pairre_ruleset* rules);

void pairre_ruleset_free(pairre_ruleset* rules);

/* ---- model ------------------------------------------------------------ */

/* Fresh embeddings drawn from the configuration's scorer, dimension, margin
 * and seed, sized to the vocabulary (which is copied into the model). */
pairre_status pairre_model_init(const pairre_config* config,
                                const pairre_vocab* vocab, pairre_model** out);

/* Reads a checkpoint directory written by pairre_model_save or training. */
pairre_status pairre_model_load(const char* checkpoint_dir,
                                pairre_model** out);

/* Writes manifest.json, entities.f64, relations.f64 and the name tables;
 * run_manifest_ref (may be NULL) is recorded in the checkpoint manifest.
 * Round trips through pairre_model_load are bit exact. */
pairre_status pairre_model_save(const pairre_model* model, const char* dir,
                                const char* run_manifest_ref);

/* Borrowed view of the model's vocabulary; valid while the model lives. */
const pairre_vocab* pairre_model_vocab(const pairre_model* model);

size_t pairre_model_dim(const pairre_model* model);
double pairre_model_gamma(const pairre_model* model);
const char* pairre_model_scorer(const pairre_model* model);

/* Run-manifest reference stored in a loaded checkpoint ("" if none). */
const char* pairre_model_run_manifest(const pairre_model* model);

/* Newline-joined warnings from the most recent pairre_train on this model
 * ("" if none). */
const char* pairre_model_warnings(const pairre_model* model);

/* Score of one triple by id. Distance-based: values are <= 0 and a perfect
 * fit scores exactly 0. */
pairre_status pairre_model_score(const pairre_model* model, uint32_t head,
                                 uint32_t relation, uint32_t tail,
                                 double* out_score);

void pairre_model_free(pairre_model* model);

/* ---- training ---------------------------------------------------------- */

/* Runs config->max_steps optimization steps over the training split.
 * valid and rules may be NULL. With out_dir set (non-NULL), writes
 * train_log.tsv, checkpoint_final, checkpoint_best (when a validation split
 * improves) and any checkpoint_step_N directories under it, each stamped
 * with run_manifest_ref when given. threads > 1 selects the lock-free
 * parallel mode, which trades bitwise reproducibility for throughput.
 * The out parameters may each be NULL. */
pairre_status pairre_train(pairre_model* model, const pairre_config* config,
                           const pairre_store* train,
                           const pairre_store* valid,
                           const pairre_ruleset* rules, const char* out_dir,
                           int threads, const char* run_manifest_ref,
                           double* out_final_loss, double* out_final_valid_mrr,
                           double* out_best_valid_mrr);

/* ---- evaluation -------------------------------------------------------- */

/* Filtered link-prediction metrics over a test split, on both prediction
 * sides, with a per-category breakdown. Relation categories are computed
 * from categories_from (the training split). The filter index is built over
 * filter_stores plus the test store itself. tie_policy is one of "mean",
 * "optimistic", "pessimistic" (NULL means "mean"). Results are independent
 * of threads. run_manifest_ref (may be NULL) is echoed in report exports. */
pairre_status pairre_evaluate(const pairre_model* model,
                              const pairre_store* test,
                              const pairre_store* categories_from,
                              const pairre_store* const* filter_stores,
                              size_t num_filter_stores, const char* tie_policy,
                              int threads, const char* run_manifest_ref,
                              pairre_report** out);

const char* pairre_report_json(pairre_report* report);
const char* pairre_report_tsv(pairre_report* report);

/* scope: "overall", "1-1", "1-N", "N-1", "N-N"; side: "head", "tail",
 * "both"; metric: "mr", "mrr", "hits1", "hits3", "hits10", "count",
 * "triples". */
pairre_status pairre_report_metric(const pairre_report* report,
                                   const char* scope, const char* side,
                                   const char* metric, double* out);

void pairre_report_free(pairre_report* report);

/* ---- relation-pattern analysis ----------------------------------------- */

/* Mean and max absolute residual of a relation pattern over the model's
 * paired relation vectors. pattern is one of "symmetry", "antisymmetry",
 * "inverse", "composition", "subrelation"; num_relations must match the
 * pattern's arity (1, 1, 2, 3, 2 respectively). */
pairre_status pairre_pattern_residual(const pairre_model* model,
                                      const char* pattern,
                                      const uint32_t* relations,
                                      size_t num_relations,
                                      double* out_mean_abs,
                                      double* out_max_abs);

/* Writes the pattern's per-dimension residuals as an equal-width histogram,
 * one `bin_left<TAB>bin_right<TAB>count` row per bin. */
pairre_status pairre_histogram_write(const pairre_model* model,
                                     const char* pattern,
                                     const uint32_t* relations,
                                     size_t num_relations, int bins,
                                     const char* path);

/* Checks whether r2's paired vectors are an elementwise scaling of r1's with
 * the same ratio on both halves and |ratio| <= 1 (within tolerance), the
 * embedding-space form of r1 entailing r2. Dimensions where an r1 entry is
 * near zero are excluded and counted. Out parameters may each be NULL. */
pairre_status pairre_subrelation_check(const pairre_model* model, uint32_t r1,
                                       uint32_t r2, double tolerance,
                                       int* out_satisfied,
                                       double* out_max_ratio_mismatch,
                                       double* out_max_abs_alpha,
                                       size_t* out_num_indeterminate);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PAIRRE_H */
