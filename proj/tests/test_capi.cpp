// Exercises the shared library strictly through its C interface: every
// handle type, the error-code contract, and the train/evaluate round trip.
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pairre.h"
#include "tmpdir.hpp"

namespace {

const char* kTriples =
    "anna\tlikes\tbeth\n"
    "beth\tlikes\tcara\n"
    "cara\tlikes\tdave\n"
    "dave\tlikes\tanna\n"
    "anna\tknows\tcara\n"
    "beth\tknows\tdave\n";

const char* kConfig =
    "gamma = 6\n"
    "dim = 8\n"
    "learning_rate = 0.05\n"
    "batch_size = 4\n"
    "max_steps = 30\n"
    "num_negatives = 4\n"
    "seed = 7\n";

struct VocabGuard {
  pairre_vocab* v = nullptr;
  ~VocabGuard() { pairre_vocab_free(v); }
};
struct StoreGuard {
  pairre_store* s = nullptr;
  ~StoreGuard() { pairre_store_free(s); }
};
struct ConfigGuard {
  pairre_config* c = nullptr;
  ~ConfigGuard() { pairre_config_free(c); }
};
struct ModelGuard {
  pairre_model* m = nullptr;
  ~ModelGuard() { pairre_model_free(m); }
};

}  // namespace

TEST_CASE("version and initial error state") {
  REQUIRE(pairre_version() != nullptr);
  CHECK(std::strlen(pairre_version()) > 0);
}

TEST_CASE("file hashing is content-addressed") {
  TempDir tmp;
  std::string a = tmp.write("a.txt", "same bytes");
  std::string b = tmp.write("b.txt", "same bytes");
  std::string c = tmp.write("c.txt", "other bytes");
  uint64_t ha = 0, hb = 0, hc = 0;
  REQUIRE(pairre_file_hash(a.c_str(), &ha) == PAIRRE_OK);
  REQUIRE(pairre_file_hash(b.c_str(), &hb) == PAIRRE_OK);
  REQUIRE(pairre_file_hash(c.c_str(), &hc) == PAIRRE_OK);
  CHECK(ha == hb);
  CHECK(ha != hc);

  uint64_t h = 0;
  CHECK(pairre_file_hash(tmp.file("missing.txt").c_str(), &h) ==
        PAIRRE_ERR_IO);
  CHECK(std::strlen(pairre_last_error()) > 0);
  CHECK(pairre_file_hash(nullptr, &h) == PAIRRE_ERR_USAGE);
}

TEST_CASE("vocabulary lifecycle through the C interface") {
  TempDir tmp;
  std::string path = tmp.write("train.tsv", kTriples);
  const char* files[] = {path.c_str()};

  VocabGuard vocab;
  REQUIRE(pairre_vocab_build(files, 1, &vocab.v) == PAIRRE_OK);
  CHECK(pairre_vocab_num_entities(vocab.v) == 4);
  CHECK(pairre_vocab_num_relations(vocab.v) == 2);

  uint32_t id = 99;
  REQUIRE(pairre_vocab_entity_id(vocab.v, "anna", &id) == PAIRRE_OK);
  CHECK(id == 0);  // first appearance order
  REQUIRE(pairre_vocab_relation_id(vocab.v, "knows", &id) == PAIRRE_OK);
  CHECK(id == 1);
  CHECK(std::string(pairre_vocab_entity_name(vocab.v, 3)) == "dave");
  CHECK(pairre_vocab_entity_name(vocab.v, 4) == nullptr);

  CHECK(pairre_vocab_entity_id(vocab.v, "zora", &id) == PAIRRE_ERR_DATA);
  CHECK(std::string(pairre_last_error()).find("zora") != std::string::npos);

  // persisted form round trips ids
  std::string ents = tmp.file("entities.txt");
  std::string rels = tmp.file("relations.txt");
  REQUIRE(pairre_vocab_save(vocab.v, ents.c_str(), rels.c_str()) == PAIRRE_OK);
  VocabGuard loaded;
  REQUIRE(pairre_vocab_load(ents.c_str(), rels.c_str(), &loaded.v) ==
          PAIRRE_OK);
  REQUIRE(pairre_vocab_entity_id(loaded.v, "cara", &id) == PAIRRE_OK);
  CHECK(id == 2);

  CHECK(pairre_vocab_build(nullptr, 1, &vocab.v) == PAIRRE_ERR_USAGE);
}

TEST_CASE("store loading reports size, duplicates, and bad input") {
  TempDir tmp;
  std::string path = tmp.write("train.tsv", kTriples);
  const char* files[] = {path.c_str()};
  VocabGuard vocab;
  REQUIRE(pairre_vocab_build(files, 1, &vocab.v) == PAIRRE_OK);

  StoreGuard store;
  REQUIRE(pairre_store_load(path.c_str(), vocab.v, &store.s) == PAIRRE_OK);
  CHECK(pairre_store_size(store.s) == 6);
  CHECK(pairre_store_duplicates_dropped(store.s) == 0);
  CHECK(pairre_store_hash(store.s) != 0);

  std::string dup = tmp.write("dup.tsv",
                              "anna\tlikes\tbeth\nanna\tlikes\tbeth\n");
  StoreGuard dupes;
  REQUIRE(pairre_store_load(dup.c_str(), vocab.v, &dupes.s) == PAIRRE_OK);
  CHECK(pairre_store_size(dupes.s) == 1);
  CHECK(pairre_store_duplicates_dropped(dupes.s) == 1);

  std::string bad = tmp.write("bad.tsv", "anna\tlikes\tzora\n");
  pairre_store* out = nullptr;
  CHECK(pairre_store_load(bad.c_str(), vocab.v, &out) == PAIRRE_ERR_DATA);
  CHECK(std::string(pairre_last_error()).find("zora") != std::string::npos);
  CHECK(pairre_store_load(tmp.file("none.tsv").c_str(), vocab.v, &out) ==
        PAIRRE_ERR_IO);
}

TEST_CASE("filter membership through the C interface") {
  TempDir tmp;
  std::string path = tmp.write("train.tsv", kTriples);
  const char* files[] = {path.c_str()};
  VocabGuard vocab;
  REQUIRE(pairre_vocab_build(files, 1, &vocab.v) == PAIRRE_OK);
  StoreGuard store;
  REQUIRE(pairre_store_load(path.c_str(), vocab.v, &store.s) == PAIRRE_OK);

  const pairre_store* stores[] = {store.s};
  pairre_filter* filter = nullptr;
  REQUIRE(pairre_filter_build(stores, 1, &filter) == PAIRRE_OK);
  CHECK(pairre_filter_contains(filter, 0, 0, 1) == 1);  // anna likes beth
  CHECK(pairre_filter_contains(filter, 1, 0, 0) == 0);
  pairre_filter_free(filter);

  CHECK(pairre_filter_build(nullptr, 1, &filter) == PAIRRE_ERR_USAGE);
}

TEST_CASE("configuration exposes normalized values with defaults") {
  TempDir tmp;
  std::string path = tmp.write("train.conf", kConfig);
  ConfigGuard config;
  REQUIRE(pairre_config_load(path.c_str(), &config.c) == PAIRRE_OK);

  CHECK(std::string(pairre_config_get(config.c, "dim")) == "8");
  CHECK(std::string(pairre_config_get(config.c, "scorer")) == "pairre");
  CHECK(std::string(pairre_config_get(config.c, "optimizer")) == "sgd");
  CHECK(std::string(pairre_config_get(config.c, "squared_distance")) ==
        "true");
  CHECK(pairre_config_get(config.c, "no_such_key") == nullptr);

  std::string missing = tmp.write("missing.conf", "dim = 8\n");
  pairre_config* out = nullptr;
  CHECK(pairre_config_load(missing.c_str(), &out) == PAIRRE_ERR_DATA);
  CHECK(std::string(pairre_last_error()).find("gamma") != std::string::npos);
}

TEST_CASE("rule files parse into counted rule sets") {
  TempDir tmp;
  std::string path = tmp.write("train.tsv", kTriples);
  const char* files[] = {path.c_str()};
  VocabGuard vocab;
  REQUIRE(pairre_vocab_build(files, 1, &vocab.v) == PAIRRE_OK);

  std::string rules = tmp.write("rules.txt",
                                "subrelation\tlikes\tknows\t0.5\n"
                                "equiv\tlikes\tknows\n"
                                "tie\tlikes\tknows\n");
  pairre_ruleset* rs = nullptr;
  REQUIRE(pairre_ruleset_parse(rules.c_str(), vocab.v, &rs) == PAIRRE_OK);
  CHECK(pairre_ruleset_num_soft(rs) == 3);  // equiv counts twice
  CHECK(pairre_ruleset_num_ties(rs) == 1);
  pairre_ruleset_free(rs);

  std::string bad = tmp.write("bad.txt", "implies\tlikes\tknows\n");
  CHECK(pairre_ruleset_parse(bad.c_str(), vocab.v, &rs) == PAIRRE_ERR_DATA);
  CHECK(std::string(pairre_last_error()).find("implies") !=
        std::string::npos);
}

TEST_CASE("model init, scoring, and checkpoint round trip") {
  TempDir tmp;
  std::string path = tmp.write("train.tsv", kTriples);
  const char* files[] = {path.c_str()};
  VocabGuard vocab;
  REQUIRE(pairre_vocab_build(files, 1, &vocab.v) == PAIRRE_OK);
  ConfigGuard config;
  std::string conf = tmp.write("train.conf", kConfig);
  REQUIRE(pairre_config_load(conf.c_str(), &config.c) == PAIRRE_OK);

  ModelGuard model;
  REQUIRE(pairre_model_init(config.c, vocab.v, &model.m) == PAIRRE_OK);
  CHECK(pairre_model_dim(model.m) == 8);
  CHECK(pairre_model_gamma(model.m) == 6.0);
  CHECK(std::string(pairre_model_scorer(model.m)) == "pairre");

  double score = 1.0;
  REQUIRE(pairre_model_score(model.m, 0, 0, 1, &score) == PAIRRE_OK);
  CHECK(score <= 0.0);
  CHECK(std::isfinite(score));
  CHECK(pairre_model_score(model.m, 9, 0, 1, &score) == PAIRRE_ERR_USAGE);
  CHECK(pairre_model_score(model.m, 0, 7, 1, &score) == PAIRRE_ERR_USAGE);

  // the model owns a copy of the vocabulary
  const pairre_vocab* borrowed = pairre_model_vocab(model.m);
  CHECK(pairre_vocab_num_entities(borrowed) == 4);

  std::string dir = tmp.file("ckpt");
  REQUIRE(pairre_model_save(model.m, dir.c_str(), "run_manifest.json#feed") ==
          PAIRRE_OK);
  ModelGuard loaded;
  REQUIRE(pairre_model_load(dir.c_str(), &loaded.m) == PAIRRE_OK);
  CHECK(std::string(pairre_model_run_manifest(loaded.m)) ==
        "run_manifest.json#feed");
  for (uint32_t h = 0; h < 4; ++h) {
    double a = 0, b = 0;
    REQUIRE(pairre_model_score(model.m, h, 1, (h + 1) % 4, &a) == PAIRRE_OK);
    REQUIRE(pairre_model_score(loaded.m, h, 1, (h + 1) % 4, &b) == PAIRRE_OK);
    CHECK(a == b);  // bit-exact round trip
  }

  CHECK(pairre_model_load(tmp.file("nodir").c_str(), &loaded.m) ==
        PAIRRE_ERR_IO);
}

TEST_CASE("training and evaluation end to end") {
  TempDir tmp;
  std::string train_path = tmp.write("train.tsv", kTriples);
  std::string test_path = tmp.write("test.tsv", "cara\tknows\tanna\n");
  const char* files[] = {train_path.c_str()};
  VocabGuard vocab;
  REQUIRE(pairre_vocab_build(files, 1, &vocab.v) == PAIRRE_OK);
  StoreGuard train;
  REQUIRE(pairre_store_load(train_path.c_str(), vocab.v, &train.s) ==
          PAIRRE_OK);
  StoreGuard test;
  REQUIRE(pairre_store_load(test_path.c_str(), vocab.v, &test.s) == PAIRRE_OK);
  ConfigGuard config;
  std::string conf = tmp.write("train.conf", kConfig);
  REQUIRE(pairre_config_load(conf.c_str(), &config.c) == PAIRRE_OK);

  ModelGuard model;
  REQUIRE(pairre_model_init(config.c, vocab.v, &model.m) == PAIRRE_OK);

  double final_loss = -1.0, final_mrr = -1.0, best_mrr = -1.0;
  std::string out_dir = tmp.file("run");
  REQUIRE(pairre_train(model.m, config.c, train.s, test.s, nullptr,
                       out_dir.c_str(), 1, "run_manifest.json#cafe",
                       &final_loss, &final_mrr, &best_mrr) == PAIRRE_OK);
  CHECK(std::isfinite(final_loss));
  CHECK(final_loss > 0.0);
  CHECK(final_mrr > 0.0);
  CHECK(best_mrr >= final_mrr - 1e-12);
  CHECK(std::ifstream(out_dir + "/train_log.tsv").good());
  CHECK(std::ifstream(out_dir + "/checkpoint_final/manifest.json").good());

  const pairre_store* filters[] = {train.s};
  pairre_report* report = nullptr;
  REQUIRE(pairre_evaluate(model.m, test.s, train.s, filters, 1, nullptr, 2,
                          "report.tsv.run_manifest.json#beef",
                          &report) == PAIRRE_OK);
  double mrr = 0.0, count = 0.0;
  REQUIRE(pairre_report_metric(report, "overall", "both", "mrr", &mrr) ==
          PAIRRE_OK);
  REQUIRE(pairre_report_metric(report, "overall", "both", "count", &count) ==
          PAIRRE_OK);
  CHECK(mrr > 0.0);
  CHECK(mrr <= 1.0);
  CHECK(count == 2.0);  // one triple, two prediction sides

  const char* tsv = pairre_report_tsv(report);
  REQUIRE(tsv != nullptr);
  CHECK(std::string(tsv).find("report.tsv.run_manifest.json#beef") !=
        std::string::npos);
  const char* json = pairre_report_json(report);
  REQUIRE(json != nullptr);
  CHECK(std::string(json).find("\"overall\"") != std::string::npos);

  double bogus = 0.0;
  CHECK(pairre_report_metric(report, "overall", "both", "auc", &bogus) ==
        PAIRRE_ERR_USAGE);
  pairre_report_free(report);

  CHECK(pairre_train(model.m, config.c, nullptr, nullptr, nullptr, nullptr, 1,
                     nullptr, nullptr, nullptr, nullptr) == PAIRRE_ERR_USAGE);
}

TEST_CASE("pattern analysis through the C interface") {
  TempDir tmp;
  std::string path = tmp.write("train.tsv", kTriples);
  const char* files[] = {path.c_str()};
  VocabGuard vocab;
  REQUIRE(pairre_vocab_build(files, 1, &vocab.v) == PAIRRE_OK);
  ConfigGuard config;
  std::string conf = tmp.write("train.conf", kConfig);
  REQUIRE(pairre_config_load(conf.c_str(), &config.c) == PAIRRE_OK);
  ModelGuard model;
  REQUIRE(pairre_model_init(config.c, vocab.v, &model.m) == PAIRRE_OK);

  uint32_t one[] = {0};
  uint32_t two[] = {0, 1};
  double mean = -1.0, max = -1.0;
  REQUIRE(pairre_pattern_residual(model.m, "symmetry", one, 1, &mean, &max) ==
          PAIRRE_OK);
  CHECK(mean >= 0.0);
  CHECK(max >= mean);

  CHECK(pairre_pattern_residual(model.m, "inverse", one, 1, &mean, &max) ==
        PAIRRE_ERR_USAGE);
  CHECK(pairre_pattern_residual(model.m, "transitivity", one, 1, &mean,
                                &max) == PAIRRE_ERR_USAGE);
  uint32_t huge[] = {42};
  CHECK(pairre_pattern_residual(model.m, "symmetry", huge, 1, &mean, &max) ==
        PAIRRE_ERR_USAGE);

  std::string hist = tmp.file("hist.tsv");
  REQUIRE(pairre_histogram_write(model.m, "subrelation", two, 2, 6,
                                 hist.c_str()) == PAIRRE_OK);
  std::ifstream in(hist);
  size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);

  int satisfied = -1;
  double mismatch = -1.0, alpha = -1.0;
  size_t indeterminate = 99;
  REQUIRE(pairre_subrelation_check(model.m, 0, 1, 1e-6, &satisfied, &mismatch,
                                   &alpha, &indeterminate) == PAIRRE_OK);
  CHECK((satisfied == 0 || satisfied == 1));
  CHECK(mismatch >= 0.0);
  CHECK(alpha >= 0.0);
  CHECK(pairre_subrelation_check(model.m, 0, 9, 1e-6, &satisfied, &mismatch,
                                 &alpha, &indeterminate) == PAIRRE_ERR_USAGE);
}
