#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "rng.hpp"

namespace pairre {

enum class ScorerKind { PairRE = 0, TransE = 1, RotatE = 2, RotatePaired = 3 };

const char* scorer_name(ScorerKind kind);
ScorerKind scorer_from_name(const std::string& name);  // throws Data if unknown

// Relation row width per scorer: paired projection vectors [r_h | r_t] need
// 2d, a translation needs d, a rotation stores d/2 phase angles, and the
// paired rotation stores head phases then tail phases (d/2 each).
size_t relation_width(ScorerKind kind, size_t dim);

// Dense embedding storage. Entity rows are kept at unit L2 norm by
// project_entities; relation rows are free unless rule tying derives them.
struct EmbeddingTable {
  ScorerKind kind = ScorerKind::PairRE;
  size_t dim = 0;        // entity dimension d
  size_t rel_width = 0;  // relation row width for `kind`
  double gamma = 0.0;    // margin; kept for scoring-time consistency checks
  uint64_t seed = 0;     // seed used at initialization
  bool squared_distance = true;
  size_t num_entities = 0;
  size_t num_relations = 0;
  std::vector<double> entity;    // num_entities x dim, row major
  std::vector<double> relation;  // num_relations x rel_width, row major

  std::span<double> entity_row(uint32_t id) {
    return {entity.data() + static_cast<size_t>(id) * dim, dim};
  }
  std::span<const double> entity_row(uint32_t id) const {
    return {entity.data() + static_cast<size_t>(id) * dim, dim};
  }
  std::span<double> relation_row(uint32_t id) {
    return {relation.data() + static_cast<size_t>(id) * rel_width, rel_width};
  }
  std::span<const double> relation_row(uint32_t id) const {
    return {relation.data() + static_cast<size_t>(id) * rel_width, rel_width};
  }
};

// Entity rows uniform on the unit sphere; projection/translation relation
// entries uniform in [-gamma/d, gamma/d]; rotation phases uniform in [-pi, pi].
// Deterministic under a fixed seed.
EmbeddingTable init_embeddings(ScorerKind kind, size_t num_entities,
                               size_t num_relations, size_t dim, double gamma,
                               bool squared_distance, uint64_t seed);

// Rescales the touched rows to unit L2 norm. A zero-norm row cannot be
// projected; it is re-drawn uniformly on the sphere with a warning.
void project_entities(EmbeddingTable& table, std::span<const uint32_t> touched,
                      Rng& rng, std::vector<std::string>* warnings = nullptr);

// Checkpoint directory layout: manifest.json, entities.f64, relations.f64
// (little-endian float64, row major), entity_names.txt, relation_names.txt.
// Round trips are bit exact.
void save_checkpoint(const EmbeddingTable& table, const Vocab& vocab,
                     const std::string& dir,
                     const std::string& run_manifest_ref = "");

struct Checkpoint {
  EmbeddingTable table;
  Vocab vocab;
  std::string run_manifest_ref;
};

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace pairre
