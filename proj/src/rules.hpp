#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "embedding.hpp"
#include "rng.hpp"
#include "scoring.hpp"

namespace pairre {

enum class RuleKind { Subrelation, Inverse };

// Soft approximate-entailment rule r1 -> r2 with confidence lambda in (0, 1].
struct Rule {
  RuleKind kind = RuleKind::Subrelation;
  uint32_t r1 = 0;
  uint32_t r2 = 0;
  double lambda = 1.0;
};

// Hard tying: the child relation row is always cosine(theta) times the
// parent row, elementwise on both halves. theta holds the free parameters
// and is sized to the entity dimension by the trainer.
struct TyingDecl {
  uint32_t parent = 0;
  uint32_t child = 0;
  std::vector<double> theta;
};

struct RuleSet {
  std::vector<Rule> soft;
  std::vector<TyingDecl> hard;  // topologically ordered, parents first
};

// Rule file lines (TSV): `subrelation r1 r2 [lambda]`, `equiv r1 r2 [lambda]`
// (expands to subrelation penalties in both directions), `inverse r1 r2
// [lambda]`, `tie parent child`. lambda defaults to 1.0.
RuleSet parse_rules(const std::string& path, const Vocab& vocab);

// theta uniform in [0.15, pi - 0.15]: every cos(theta) lands in (-1, 1) and
// sin(theta) stays away from 0, so gradients through the tying never vanish
// at initialization.
void init_theta(TyingDecl& decl, size_t dim, Rng& rng);

// Overwrites the child's halves with cos(theta) times the parent's halves.
void apply_tying(EmbeddingTable& table, const TyingDecl& decl);

// Sum over rules of lambda * sum_i residual_i^2, where the residual is
// r1h*r2t - r1t*r2h for subrelation rules and r1h*r2h - r1t*r2t for inverse
// rules. When grads is given, upstream * d(penalty)/d(half) is accumulated
// for all four touched halves of every rule. The trainer supplies its loss
// weight as upstream.
double rule_penalty(const EmbeddingTable& table, const std::vector<Rule>& soft,
                    GradBuffer* grads = nullptr, double upstream = 1.0);

// Chain rule for the tying reparameterization: folds the gradient sitting on
// the child's row into the parent row and theta_grad, then zeroes the child
// row (the child is derived, not trained). No-op if the child row was never
// touched.
void chain_tied_gradient(const EmbeddingTable& table, const TyingDecl& decl,
                         GradBuffer& grads, std::span<double> theta_grad);

struct SubrelationReport {
  std::vector<double> alpha;           // per-dim head-half ratio; NaN when indeterminate
  std::vector<uint32_t> indeterminate; // dims with a near-zero r1 entry
  bool satisfied = false;              // ratios agree and |alpha| <= 1 + tol
  double max_ratio_mismatch = 0.0;     // over determinate dims
  double max_abs_alpha = 0.0;
};

// Checks the elementwise ratio constraint r2_i/r1_i equal on both halves with
// |alpha_i| <= 1, within `tolerance`. Dims where either r1 entry is below
// 1e-12 in magnitude are excluded from the verdict and listed.
SubrelationReport check_subrelation_constraint(const EmbeddingTable& table,
                                               uint32_t r1, uint32_t r2,
                                               double tolerance);

}  // namespace pairre
