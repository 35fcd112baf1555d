#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace pairre {

struct Triple {
  uint32_t head;
  uint32_t relation;
  uint32_t tail;

  bool operator==(const Triple&) const = default;
};

// Entity and relation name tables. Ids are dense, 0-based, assigned in first
// appearance order while scanning the input files.
class Vocab {
 public:
  // Scans tab-separated `head<TAB>relation<TAB>tail` files in the given order.
  static Vocab build(const std::vector<std::string>& triple_files);

  // Reads two one-name-per-line files (line number = id), the persisted form.
  static Vocab load(const std::string& entity_file,
                    const std::string& relation_file);
  void save(const std::string& entity_file,
            const std::string& relation_file) const;

  uint32_t entity_id(const std::string& name) const;   // throws Data if unknown
  uint32_t relation_id(const std::string& name) const;
  const std::string& entity_name(uint32_t id) const;
  const std::string& relation_name(uint32_t id) const;

  size_t num_entities() const { return entity_names_.size(); }
  size_t num_relations() const { return relation_names_.size(); }

  uint32_t add_entity(const std::string& name);    // get-or-insert
  uint32_t add_relation(const std::string& name);

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, uint32_t> entity_ids_;
  std::unordered_map<std::string, uint32_t> relation_ids_;
};

enum class Split { Train, Valid, Test };

struct TripleStore {
  std::vector<Triple> triples;
  Split split = Split::Train;
  std::string source_path;
  uint64_t source_hash = 0;       // FNV-1a of the raw file bytes
  size_t duplicates_dropped = 0;  // exact repeats removed at load
};

// Encodes one TSV split against an existing vocab. Unknown names and
// malformed lines are data errors naming the file and line; exact duplicate
// triples are dropped and counted.
TripleStore load_split(const std::string& path, const Vocab& vocab, Split split);

// Known-true lookup over the union of splits, for filtered ranking.
// tails_of(h, r) and heads_of(t, r) return sorted unique id lists.
class FilterIndex {
 public:
  static FilterIndex build(const std::vector<const TripleStore*>& stores);

  const std::vector<uint32_t>& tails_of(uint32_t head, uint32_t relation) const;
  const std::vector<uint32_t>& heads_of(uint32_t tail, uint32_t relation) const;
  bool contains(uint32_t head, uint32_t relation, uint32_t tail) const;

 private:
  static uint64_t key(uint32_t entity, uint32_t relation) {
    return (static_cast<uint64_t>(entity) << 32) | relation;
  }
  std::unordered_map<uint64_t, std::vector<uint32_t>> tails_;
  std::unordered_map<uint64_t, std::vector<uint32_t>> heads_;
  std::vector<uint32_t> empty_;
};

enum class Category { OneToOne = 0, OneToN = 1, NToOne = 2, NToN = 3 };

const char* category_name(Category c);  // "1-1", "1-N", "N-1", "N-N"

struct RelationCategory {
  Category label = Category::OneToOne;
  double tph = 1.0;  // triples per distinct head
  double hpt = 1.0;  // triples per distinct tail
};

// Computed on the training split only. tph = #triples / #distinct heads,
// hpt = #triples / #distinct tails; labels via the 1.5 thresholds
// (strict > on the many side, boundary 1.5 falls to the one side).
// A relation with no training triples gets 1-1 with tph = hpt = 1 plus a
// warning line appended to `warnings` when given.
std::vector<RelationCategory> classify_relations(
    const TripleStore& train, size_t num_relations,
    std::vector<std::string>* warnings = nullptr);

}  // namespace pairre
