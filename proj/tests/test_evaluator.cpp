#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "doctest.h"
#include "embedding.hpp"
#include "error.hpp"
#include "evaluator.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "scoring.hpp"
#include "tmpdir.hpp"

using namespace pairre;

TEST_CASE("tie policy names round trip") {
  for (TiePolicy p :
       {TiePolicy::Mean, TiePolicy::Optimistic, TiePolicy::Pessimistic}) {
    CHECK(tie_policy_from_name(tie_policy_name(p)) == p);
  }
  CHECK_THROWS_AS(tie_policy_from_name("median"), Error);
}

TEST_CASE("rank counts strictly-better candidates plus one") {
  std::vector<double> scores{-1.0, -3.0, -2.0, -4.0};
  std::vector<uint32_t> none;
  CHECK(rank_from_scores(scores, 0, none, TiePolicy::Mean) == 1.0);
  CHECK(rank_from_scores(scores, 2, none, TiePolicy::Mean) == 2.0);
  CHECK(rank_from_scores(scores, 3, none, TiePolicy::Mean) == 4.0);
}

TEST_CASE("tie policies split exact ties as documented") {
  // target at index 1 ties with two others above a worse candidate
  std::vector<double> scores{-2.0, -2.0, -2.0, -9.0};
  std::vector<uint32_t> none;
  CHECK(rank_from_scores(scores, 1, none, TiePolicy::Optimistic) == 1.0);
  CHECK(rank_from_scores(scores, 1, none, TiePolicy::Pessimistic) == 3.0);
  CHECK(rank_from_scores(scores, 1, none, TiePolicy::Mean) == 2.0);

  // one tie partner: mean adds half a step
  std::vector<double> two{-2.0, -2.0, -9.0};
  CHECK(rank_from_scores(two, 0, none, TiePolicy::Mean) == 1.5);
}

TEST_CASE("known-true candidates are skipped but the target competes") {
  std::vector<double> scores{-1.0, -2.0, -3.0, -4.0};
  // both better-scoring candidates are known true, so the target wins
  std::vector<uint32_t> known{0, 1};
  CHECK(rank_from_scores(scores, 2, known, TiePolicy::Mean) == 1.0);
  // the target being in the known list must not remove it from the race
  std::vector<uint32_t> with_target{2};
  CHECK(rank_from_scores(scores, 2, with_target, TiePolicy::Mean) == 3.0);
}

TEST_CASE("metrics aggregate ranks as documented") {
  std::vector<double> ranks{1.0, 2.0, 4.0, 10.0, 25.0};
  Metrics m = metrics_from_ranks(ranks);
  CHECK(m.mr == doctest::Approx(8.4));
  CHECK(m.mrr ==
        doctest::Approx((1.0 + 0.5 + 0.25 + 0.1 + 0.04) / 5.0));
  CHECK(m.hits1 == doctest::Approx(0.2));
  CHECK(m.hits3 == doctest::Approx(0.4));
  CHECK(m.hits10 == doctest::Approx(0.8));
  CHECK(m.count == 5);

  Metrics empty = metrics_from_ranks({});
  CHECK(empty.count == 0);
  CHECK(empty.mrr == 0.0);
}

TEST_CASE("metrics match the oracle on random rank lists") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ranks(1 + rng.next_below(30));
    for (double& r : ranks) r = 1.0 + rng.next_below(50) / 2.0;
    Metrics a = metrics_from_ranks(ranks);
    Metrics b = oracle::metrics(ranks);
    CHECK(a.mr == b.mr);
    CHECK(a.mrr == b.mrr);
    CHECK(a.hits1 == b.hits1);
    CHECK(a.hits3 == b.hits3);
    CHECK(a.hits10 == b.hits10);
  }
}

namespace {

// Fixed strict-order table: entity e scores better the smaller |h*r - e| is.
// Planting exact embeddings gives hand-checkable rankings.
EmbeddingTable tiny_table() {
  EmbeddingTable t =
      init_embeddings(ScorerKind::PairRE, 4, 2, 2, 6.0, true, 77);
  return t;
}

TripleStore store_of(std::vector<Triple> triples) {
  TripleStore s;
  s.triples = std::move(triples);
  return s;
}

}  // namespace

TEST_CASE("rank_triple equals a hand-rolled filtered scan") {
  EmbeddingTable t = tiny_table();
  TripleStore known = store_of({{0, 0, 1}, {0, 0, 2}, {3, 0, 1}});
  FilterIndex filter = FilterIndex::build({&known});

  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    Triple probe{static_cast<uint32_t>(rng.next_below(4)),
                 static_cast<uint32_t>(rng.next_below(2)),
                 static_cast<uint32_t>(rng.next_below(4))};
    for (TiePolicy policy :
         {TiePolicy::Mean, TiePolicy::Optimistic, TiePolicy::Pessimistic}) {
      for (Side side : {Side::Head, Side::Tail}) {
        std::vector<double> scores(4);
        std::vector<bool> skip(4, false);
        for (uint32_t c = 0; c < 4; ++c) {
          Triple cand = probe;
          (side == Side::Head ? cand.head : cand.tail) = c;
          scores[c] = oracle::score(t, cand.head, cand.relation, cand.tail);
          skip[c] = oracle::contains(known.triples, cand.head, cand.relation,
                                     cand.tail);
        }
        uint32_t target = side == Side::Head ? probe.head : probe.tail;
        double expect = oracle::rank(scores, target, skip, policy);
        CHECK(rank_triple(t, probe, filter, side, policy) == expect);
      }
    }
  }
}

TEST_CASE("evaluate averages the two prediction sides") {
  EmbeddingTable t = tiny_table();
  TripleStore train = store_of({{0, 0, 1}, {1, 0, 2}, {2, 0, 3}});
  TripleStore test = store_of({{3, 0, 0}, {0, 0, 2}});
  FilterIndex filter = FilterIndex::build({&train, &test});
  std::vector<RelationCategory> cats = classify_relations(train, 2);

  RankingReport rep = evaluate(t, test, filter, cats, TiePolicy::Mean, 1);
  CHECK(rep.overall.triples == 2);
  CHECK(rep.overall.head.count == 2);
  CHECK(rep.overall.tail.count == 2);
  CHECK(rep.overall.both.count == 4);
  CHECK(rep.overall.both.mr ==
        doctest::Approx((rep.overall.head.mr + rep.overall.tail.mr) / 2.0));
  CHECK(rep.overall.both.mrr ==
        doctest::Approx((rep.overall.head.mrr + rep.overall.tail.mrr) / 2.0));
  CHECK(rep.overall.both.hits10 == doctest::Approx(
      (rep.overall.head.hits10 + rep.overall.tail.hits10) / 2.0));
}

TEST_CASE("evaluate breaks metrics down by relation category") {
  EmbeddingTable t =
      init_embeddings(ScorerKind::PairRE, 6, 2, 4, 6.0, true, 3);
  // r0 is 1-1 (a chain), r1 is 1-N (fan-out from one head)
  TripleStore train = store_of({{0, 0, 1},
                                {1, 0, 2},
                                {2, 0, 3},
                                {0, 1, 1},
                                {0, 1, 2},
                                {0, 1, 3},
                                {0, 1, 4}});
  TripleStore test = store_of({{3, 0, 4}, {0, 1, 5}, {4, 0, 5}});
  FilterIndex filter = FilterIndex::build({&train, &test});
  std::vector<RelationCategory> cats = classify_relations(train, 2);
  REQUIRE(cats[0].label == Category::OneToOne);
  REQUIRE(cats[1].label == Category::OneToN);

  RankingReport rep = evaluate(t, test, filter, cats, TiePolicy::Mean, 1);
  CHECK(rep.overall.triples == 3);
  CHECK(rep.by_category[0].triples == 2);  // the two r0 test triples
  CHECK(rep.by_category[1].triples == 1);
  CHECK(rep.by_category[2].triples == 0);
  CHECK(rep.by_category[3].triples == 0);
  // category partition: overall sums match
  CHECK(rep.by_category[0].head.count + rep.by_category[1].head.count ==
        rep.overall.head.count);
  // unpopulated categories stay all-zero
  CHECK(rep.by_category[2].both.mrr == 0.0);
}

TEST_CASE("evaluation is independent of the thread count") {
  EmbeddingTable t =
      init_embeddings(ScorerKind::RotatE, 30, 3, 8, 9.0, false, 13);
  std::vector<Triple> triples;
  Rng rng(99);
  for (int i = 0; i < 60; ++i) {
    triples.push_back({static_cast<uint32_t>(rng.next_below(30)),
                       static_cast<uint32_t>(rng.next_below(3)),
                       static_cast<uint32_t>(rng.next_below(30))});
  }
  TripleStore test = store_of(triples);
  FilterIndex filter = FilterIndex::build({&test});
  std::vector<RelationCategory> cats = classify_relations(test, 3);

  RankingReport one = evaluate(t, test, filter, cats, TiePolicy::Mean, 1);
  RankingReport four = evaluate(t, test, filter, cats, TiePolicy::Mean, 4);
  RankingReport eight = evaluate(t, test, filter, cats, TiePolicy::Mean, 8);
  CHECK(one.overall.both.mrr == four.overall.both.mrr);
  CHECK(one.overall.both.mr == eight.overall.both.mr);
  CHECK(one.overall.head.hits3 == four.overall.head.hits3);
  CHECK(one.by_category[3].both.mrr == eight.by_category[3].both.mrr);
}

TEST_CASE("evaluating an empty test split is a data error") {
  EmbeddingTable t = tiny_table();
  TripleStore empty;
  FilterIndex filter = FilterIndex::build({});
  CHECK_THROWS_AS(
      evaluate(t, empty, filter, std::vector<RelationCategory>(2)), Error);
}

TEST_CASE("evaluate validates category coverage") {
  EmbeddingTable t = tiny_table();
  TripleStore test = store_of({{0, 1, 1}});
  FilterIndex filter = FilterIndex::build({&test});
  // only one category entry, but the test triple uses relation id 1
  CHECK_THROWS_AS(
      evaluate(t, test, filter, std::vector<RelationCategory>(1)), Error);
}

TEST_CASE("metric lookup resolves every published name") {
  EmbeddingTable t = tiny_table();
  TripleStore test = store_of({{0, 0, 1}, {1, 1, 2}});
  FilterIndex filter = FilterIndex::build({&test});
  RankingReport rep = evaluate(t, test, filter,
                               std::vector<RelationCategory>(2));

  CHECK(rep.metric("overall", "both", "mrr") == rep.overall.both.mrr);
  CHECK(rep.metric("overall", "head", "mr") == rep.overall.head.mr);
  CHECK(rep.metric("1-1", "tail", "hits10") ==
        rep.by_category[0].tail.hits10);
  CHECK(rep.metric("overall", "both", "count") == 4.0);
  CHECK(rep.metric("overall", "both", "triples") == 2.0);
  CHECK_THROWS_AS(rep.metric("nowhere", "both", "mrr"), Error);
  CHECK_THROWS_AS(rep.metric("overall", "sideways", "mrr"), Error);
  CHECK_THROWS_AS(rep.metric("overall", "both", "auc"), Error);
}

TEST_CASE("the TSV report is shaped as documented") {
  EmbeddingTable t = tiny_table();
  TripleStore test = store_of({{0, 0, 1}});
  FilterIndex filter = FilterIndex::build({&test});
  RankingReport rep = evaluate(t, test, filter,
                               std::vector<RelationCategory>(2));
  rep.run_manifest = "run_manifest.json#beef";

  std::istringstream tsv(rep.to_tsv());
  std::string line;
  REQUIRE(std::getline(tsv, line));
  CHECK(line == "# run_manifest: run_manifest.json#beef");
  REQUIRE(std::getline(tsv, line));
  CHECK(line == "scope\tside\tmr\tmrr\thits1\thits3\thits10\tcount");
  size_t rows = 0;
  while (std::getline(tsv, line)) ++rows;
  CHECK(rows == 15);  // 5 scopes x 3 sides

  // without a manifest reference the comment line disappears
  rep.run_manifest.clear();
  std::istringstream bare(rep.to_tsv());
  REQUIRE(std::getline(bare, line));
  CHECK(line.substr(0, 5) == "scope");
}

TEST_CASE("the JSON report carries every scope") {
  EmbeddingTable t = tiny_table();
  TripleStore test = store_of({{0, 0, 1}});
  FilterIndex filter = FilterIndex::build({&test});
  RankingReport rep = evaluate(t, test, filter,
                               std::vector<RelationCategory>(2));
  std::string json = rep.to_json();
  for (const char* key : {"overall", "1-1", "1-N", "N-1", "N-N", "mrr",
                          "hits1", "head", "tail", "both"}) {
    CHECK(json.find(key) != std::string::npos);
  }
}

TEST_CASE("pattern names, arities, and lookups") {
  CHECK(pattern_arity(PatternKind::Symmetry) == 1);
  CHECK(pattern_arity(PatternKind::Antisymmetry) == 1);
  CHECK(pattern_arity(PatternKind::Inverse) == 2);
  CHECK(pattern_arity(PatternKind::Composition) == 3);
  CHECK(pattern_arity(PatternKind::Subrelation) == 2);
  for (PatternKind k :
       {PatternKind::Symmetry, PatternKind::Antisymmetry, PatternKind::Inverse,
        PatternKind::Composition, PatternKind::Subrelation}) {
    CHECK(pattern_from_name(pattern_name(k)) == k);
  }
  CHECK_THROWS_AS(pattern_from_name("transitivity"), Error);
}

TEST_CASE("pattern residuals match their hand-computed definitions") {
  EmbeddingTable t =
      init_embeddings(ScorerKind::PairRE, 2, 3, 2, 6.0, true, 55);
  double* r0 = t.relation_row(0).data();
  double* r1 = t.relation_row(1).data();
  double* r2 = t.relation_row(2).data();
  // rows are [h0 h1 | t0 t1]
  r0[0] = 1; r0[1] = 2; r0[2] = 3; r0[3] = 4;
  r1[0] = 5; r1[1] = 6; r1[2] = 7; r1[3] = 8;
  r2[0] = 2; r2[1] = 1; r2[2] = 4; r2[3] = 3;

  uint32_t ids1[] = {0};
  PatternResidual sym = pattern_residual(t, PatternKind::Symmetry, ids1);
  // (r0h)^2 - (r0t)^2 = [1-9, 4-16]
  CHECK(sym.residual == std::vector<double>{-8.0, -12.0});
  CHECK(sym.max_abs == 12.0);
  CHECK(sym.mean_abs == doctest::Approx(10.0));

  PatternResidual anti = pattern_residual(t, PatternKind::Antisymmetry, ids1);
  CHECK(anti.residual == sym.residual);  // same formula, opposite reading

  uint32_t ids2[] = {0, 1};
  PatternResidual inv = pattern_residual(t, PatternKind::Inverse, ids2);
  // r0h*r1h - r0t*r1t = [1*5-3*7, 2*6-4*8]
  CHECK(inv.residual == std::vector<double>{-16.0, -20.0});

  PatternResidual sub = pattern_residual(t, PatternKind::Subrelation, ids2);
  // r0h*r1t - r0t*r1h = [1*7-3*5, 2*8-4*6]
  CHECK(sub.residual == std::vector<double>{-8.0, -8.0});

  uint32_t ids3[] = {0, 1, 2};
  PatternResidual comp = pattern_residual(t, PatternKind::Composition, ids3);
  // r0t*r1t*r2h - r0h*r1h*r2t = [3*7*2-1*5*4, 4*8*1-2*6*3]
  CHECK(comp.residual == std::vector<double>{22.0, -4.0});
}

TEST_CASE("pattern arity mismatches are usage errors") {
  EmbeddingTable t =
      init_embeddings(ScorerKind::PairRE, 2, 3, 2, 6.0, true, 55);
  uint32_t one[] = {0};
  uint32_t two[] = {0, 1};
  CHECK_THROWS_AS(pattern_residual(t, PatternKind::Inverse, one), Error);
  CHECK_THROWS_AS(pattern_residual(t, PatternKind::Symmetry, two), Error);
}

TEST_CASE("patterns require the paired scorer") {
  EmbeddingTable t =
      init_embeddings(ScorerKind::TransE, 2, 1, 4, 6.0, false, 1);
  uint32_t ids[] = {0};
  CHECK_THROWS_AS(pattern_residual(t, PatternKind::Symmetry, ids), Error);
}

TEST_CASE("histogram bins tile the range with the last bin closed") {
  std::vector<double> values{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<HistogramBin> bins = build_histogram(values, 4);
  REQUIRE(bins.size() == 4);
  CHECK(bins.front().left == 0.0);
  CHECK(bins.back().right == 2.0);
  for (size_t i = 1; i < bins.size(); ++i) {
    CHECK(bins[i].left == bins[i - 1].right);
  }
  uint64_t total = 0;
  for (const HistogramBin& b : bins) total += b.count;
  CHECK(total == values.size());
  CHECK(bins[3].count == 2);  // 1.5 and the right-inclusive 2.0
}

TEST_CASE("an all-equal histogram input still produces a sane range") {
  std::vector<double> values(10, 3.25);
  std::vector<HistogramBin> bins = build_histogram(values, 4);
  REQUIRE(bins.size() == 4);
  CHECK(bins.front().left < 3.25);
  CHECK(bins.back().right > 3.25);
  uint64_t total = 0;
  for (const HistogramBin& b : bins) total += b.count;
  CHECK(total == 10);
}

TEST_CASE("histograms reject a non-positive bin count") {
  std::vector<double> values{1.0, 2.0};
  CHECK_THROWS_AS(build_histogram(values, 0), Error);
}

TEST_CASE("exported histograms are left-right-count rows") {
  TempDir tmp;
  EmbeddingTable t =
      init_embeddings(ScorerKind::PairRE, 2, 1, 16, 6.0, true, 5);
  uint32_t ids[] = {0};
  PatternResidual res = pattern_residual(t, PatternKind::Symmetry, ids);
  std::string path = tmp.file("hist.tsv");
  export_histogram(res, 8, path);

  std::ifstream in(path);
  std::string line;
  size_t rows = 0;
  uint64_t total = 0;
  while (std::getline(in, line)) {
    double left, right;
    uint64_t count;
    std::istringstream row(line);
    REQUIRE((row >> left >> right >> count));
    CHECK(left < right);
    total += count;
    ++rows;
  }
  CHECK(rows == 8);
  CHECK(total == 16);  // one residual value per dimension
}
