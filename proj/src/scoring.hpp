#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "embedding.hpp"

namespace pairre {

enum class Side { Head = 0, Tail = 1 };

// Sparse per-row gradient accumulator. Rows are materialized on first touch
// and iterated in touch order, which keeps single-threaded updates
// deterministic.
class GradBuffer {
 public:
  GradBuffer(size_t dim, size_t rel_width) : dim_(dim), rel_width_(rel_width) {}

  std::span<double> entity(uint32_t id) {
    return row(id, ent_index_, ent_ids_, ent_data_, dim_);
  }
  std::span<double> relation(uint32_t id) {
    return row(id, rel_index_, rel_ids_, rel_data_, rel_width_);
  }

  const std::vector<uint32_t>& touched_entities() const { return ent_ids_; }
  const std::vector<uint32_t>& touched_relations() const { return rel_ids_; }

  std::span<double> entity_at(size_t pos) {
    return {ent_data_.data() + pos * dim_, dim_};
  }
  std::span<double> relation_at(size_t pos) {
    return {rel_data_.data() + pos * rel_width_, rel_width_};
  }

  // Empty span when the relation was never touched.
  std::span<double> find_relation(uint32_t id) {
    auto it = rel_index_.find(id);
    if (it == rel_index_.end()) return {};
    return relation_at(it->second);
  }

  void clear() {
    ent_data_.clear();
    rel_data_.clear();
    ent_ids_.clear();
    rel_ids_.clear();
    ent_index_.clear();
    rel_index_.clear();
  }

 private:
  std::span<double> row(uint32_t id,
                        std::unordered_map<uint32_t, size_t>& index,
                        std::vector<uint32_t>& ids, std::vector<double>& data,
                        size_t width) {
    auto [it, inserted] = index.try_emplace(id, ids.size());
    if (inserted) {
      ids.push_back(id);
      data.resize(data.size() + width, 0.0);
    }
    return {data.data() + it->second * width, width};
  }

  size_t dim_;
  size_t rel_width_;
  std::vector<double> ent_data_, rel_data_;
  std::vector<uint32_t> ent_ids_, rel_ids_;
  std::unordered_map<uint32_t, size_t> ent_index_, rel_index_;
};

// Score of one triple under the table's scorer. Distance-based: the value is
// <= 0 and a perfect fit scores exactly 0. With squared_distance unset the
// negative (unsquared) L2 norm is returned instead.
double score(const EmbeddingTable& table, uint32_t h, uint32_t r, uint32_t t);
inline double score(const EmbeddingTable& table, const Triple& tr) {
  return score(table, tr.head, tr.relation, tr.tail);
}

// One of heads/tails must be a singleton; it is broadcast against the other
// list. Results equal per-triple score() calls exactly.
std::vector<double> score_batch(const EmbeddingTable& table,
                                std::span<const uint32_t> heads,
                                uint32_t relation,
                                std::span<const uint32_t> tails);

// Scores every entity as a candidate replacement on `side`; out is resized to
// num_entities. Equals score() per candidate exactly.
void score_all(const EmbeddingTable& table, const Triple& triple, Side side,
               std::vector<double>& out);

// Accumulates upstream * (d score / d param) into the four touched rows.
// For rotation scorers the relation gradient is in phase space.
void accumulate_gradients(const EmbeddingTable& table, const Triple& triple,
                          double upstream, GradBuffer& grads);

}  // namespace pairre
