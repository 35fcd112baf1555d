#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "embedding.hpp"
#include "scoring.hpp"

namespace pairre {

enum class TiePolicy { Mean = 0, Optimistic = 1, Pessimistic = 2 };

const char* tie_policy_name(TiePolicy p);
TiePolicy tie_policy_from_name(const std::string& name);  // throws Usage

struct Metrics {
  double mr = 0.0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  uint64_t count = 0;  // ranks aggregated
};

struct ScopeMetrics {
  Metrics head;  // ranks of head-substitution queries
  Metrics tail;
  Metrics both;  // mean of the two sides
  uint64_t triples = 0;
};

struct RankingReport {
  TiePolicy policy = TiePolicy::Mean;
  ScopeMetrics overall;
  std::array<ScopeMetrics, 4> by_category;  // indexed by Category
  std::string run_manifest;                 // optional back-reference

  std::string to_json() const;
  std::string to_tsv() const;
  // scope in {overall, 1-1, 1-N, N-1, N-N}; side in {head, tail, both};
  // metric in {mr, mrr, hits1, hits3, hits10, count, triples}.
  double metric(const std::string& scope, const std::string& side,
                const std::string& metric) const;
};

// Rank of `target` among candidate scores, skipping indices in
// `known_true_sorted` (the target itself always competes). Higher score is
// better; rank = 1 + #strictly_better, with exact score ties resolved by
// `policy` (mean adds half a tie step, pessimistic counts all ties).
double rank_from_scores(std::span<const double> scores, uint32_t target,
                        const std::vector<uint32_t>& known_true_sorted,
                        TiePolicy policy);

// Filtered rank of one test triple on one prediction side.
double rank_triple(const EmbeddingTable& table, const Triple& triple,
                   const FilterIndex& filter, Side side,
                   TiePolicy policy = TiePolicy::Mean);

// MR / MRR / Hit@{1,3,10} over ranks, aggregated in input order.
Metrics metrics_from_ranks(std::span<const double> ranks);

// Filtered evaluation of every test triple on both sides with a per-category
// breakdown. `categories` must come from classify_relations on the training
// split. Parallelizes over triples; results do not depend on `threads`.
RankingReport evaluate(const EmbeddingTable& table, const TripleStore& test,
                       const FilterIndex& filter,
                       const std::vector<RelationCategory>& categories,
                       TiePolicy policy = TiePolicy::Mean, int threads = 1);

enum class PatternKind {
  Symmetry = 0,
  Antisymmetry = 1,  // same residual as Symmetry; expected far from zero
  Inverse = 2,
  Composition = 3,
  Subrelation = 4,
};

const char* pattern_name(PatternKind kind);
PatternKind pattern_from_name(const std::string& name);  // throws Usage
size_t pattern_arity(PatternKind kind);

struct PatternResidual {
  PatternKind kind = PatternKind::Symmetry;
  std::vector<uint32_t> relations;
  std::vector<double> residual;  // length d
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

// Left-minus-right of the pattern's defining identity over relation halves:
//   symmetry/antisymmetry: (r1h)^2 - (r1t)^2
//   inverse:               r1h*r2h - r1t*r2t
//   composition:           r1t*r2t*r3h - r1h*r2h*r3t
//   subrelation:           r1h*r2t - r1t*r2h
PatternResidual pattern_residual(const EmbeddingTable& table, PatternKind kind,
                                 std::span<const uint32_t> relations);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  uint64_t count = 0;
};

// Equal-width bins over [min, max]; the last bin is right-inclusive. An
// all-equal input gets the range [v - 0.5, v + 0.5].
std::vector<HistogramBin> build_histogram(std::span<const double> values,
                                          int bins);

// `bin_left<TAB>bin_right<TAB>count` rows.
void export_histogram(const PatternResidual& residual, int bins,
                      const std::string& path);

}  // namespace pairre
