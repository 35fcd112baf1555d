#include "dataset.hpp"

#include <algorithm>
#include <unordered_set>

#include "error.hpp"
#include "fsio.hpp"

namespace pairre {

namespace {

// Yields (line, 1-based number) for each LF-terminated line; tolerates a
// trailing CR and a missing final newline.
template <typename Fn>
void for_each_line(const std::string& content, Fn&& fn) {
  size_t start = 0, lineno = 0;
  while (start <= content.size()) {
    if (start == content.size()) {
      break;
    }
    size_t end = content.find('\n', start);
    size_t stop = (end == std::string::npos) ? content.size() : end;
    size_t len = stop - start;
    if (len > 0 && content[start + len - 1] == '\r') --len;
    ++lineno;
    fn(content.substr(start, len), lineno);
    if (end == std::string::npos) break;
    start = end + 1;
  }
}

struct RawTriple {
  std::string h, r, t;
};

RawTriple parse_triple_line(const std::string& path, const std::string& line,
                            size_t lineno) {
  std::vector<std::string> fields = split(line, '\t');
  if (fields.size() != 3) {
    fail(Status::Data, path + ":" + std::to_string(lineno) +
                           ": expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()));
  }
  for (const std::string& f : fields) {
    if (f.empty()) {
      fail(Status::Data, path + ":" + std::to_string(lineno) +
                             ": empty field in triple line");
    }
  }
  return {fields[0], fields[1], fields[2]};
}

}  // namespace

Vocab Vocab::build(const std::vector<std::string>& triple_files) {
  Vocab v;
  for (const std::string& path : triple_files) {
    std::string content = read_file(path);
    for_each_line(content, [&](const std::string& line, size_t lineno) {
      RawTriple raw = parse_triple_line(path, line, lineno);
      v.add_entity(raw.h);
      v.add_relation(raw.r);
      v.add_entity(raw.t);
    });
  }
  return v;
}

Vocab Vocab::load(const std::string& entity_file,
                  const std::string& relation_file) {
  Vocab v;
  for_each_line(read_file(entity_file),
                [&](const std::string& line, size_t lineno) {
                  if (line.empty()) {
                    fail(Status::Data, entity_file + ":" +
                                           std::to_string(lineno) +
                                           ": empty name line");
                  }
                  if (v.entity_ids_.count(line)) {
                    fail(Status::Data, entity_file + ":" +
                                           std::to_string(lineno) +
                                           ": duplicate name '" + line + "'");
                  }
                  v.add_entity(line);
                });
  for_each_line(read_file(relation_file),
                [&](const std::string& line, size_t lineno) {
                  if (line.empty()) {
                    fail(Status::Data, relation_file + ":" +
                                           std::to_string(lineno) +
                                           ": empty name line");
                  }
                  if (v.relation_ids_.count(line)) {
                    fail(Status::Data, relation_file + ":" +
                                           std::to_string(lineno) +
                                           ": duplicate name '" + line + "'");
                  }
                  v.add_relation(line);
                });
  return v;
}

void Vocab::save(const std::string& entity_file,
                 const std::string& relation_file) const {
  std::string e, r;
  for (const std::string& name : entity_names_) {
    e += name;
    e += '\n';
  }
  for (const std::string& name : relation_names_) {
    r += name;
    r += '\n';
  }
  write_file(entity_file, e);
  write_file(relation_file, r);
}

uint32_t Vocab::entity_id(const std::string& name) const {
  auto it = entity_ids_.find(name);
  if (it == entity_ids_.end()) {
    fail(Status::Data, "unknown entity '" + name + "'");
  }
  return it->second;
}

uint32_t Vocab::relation_id(const std::string& name) const {
  auto it = relation_ids_.find(name);
  if (it == relation_ids_.end()) {
    fail(Status::Data, "unknown relation '" + name + "'");
  }
  return it->second;
}

const std::string& Vocab::entity_name(uint32_t id) const {
  if (id >= entity_names_.size()) {
    fail(Status::Usage, "entity id " + std::to_string(id) + " out of range");
  }
  return entity_names_[id];
}

const std::string& Vocab::relation_name(uint32_t id) const {
  if (id >= relation_names_.size()) {
    fail(Status::Usage, "relation id " + std::to_string(id) + " out of range");
  }
  return relation_names_[id];
}

uint32_t Vocab::add_entity(const std::string& name) {
  auto it = entity_ids_.find(name);
  if (it != entity_ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(entity_names_.size());
  entity_names_.push_back(name);
  entity_ids_.emplace(name, id);
  return id;
}

uint32_t Vocab::add_relation(const std::string& name) {
  auto it = relation_ids_.find(name);
  if (it != relation_ids_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(relation_names_.size());
  relation_names_.push_back(name);
  relation_ids_.emplace(name, id);
  return id;
}

TripleStore load_split(const std::string& path, const Vocab& vocab,
                       Split split) {
  TripleStore store;
  store.split = split;
  store.source_path = path;
  std::string content = read_file(path);
  store.source_hash = fnv1a64(content);

  std::unordered_set<uint64_t> seen;  // (h,r) packed with t folded below
  auto pack = [](const Triple& t) {
    // 21 bits per id is plenty for desk-scale graphs; fall back to a pair set
    // would only matter beyond 2M ids.
    return (static_cast<uint64_t>(t.head) << 42) |
           (static_cast<uint64_t>(t.relation) << 21) |
           static_cast<uint64_t>(t.tail);
  };

  for_each_line(content, [&](const std::string& line, size_t lineno) {
    RawTriple raw = parse_triple_line(path, line, lineno);
    Triple t;
    try {
      t.head = vocab.entity_id(raw.h);
      t.relation = vocab.relation_id(raw.r);
      t.tail = vocab.entity_id(raw.t);
    } catch (const Error& e) {
      fail(Status::Data,
           path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (t.head >= (1u << 21) || t.relation >= (1u << 21) ||
        t.tail >= (1u << 21)) {
      fail(Status::Data, path + ": id space exceeds loader limit (2^21)");
    }
    if (seen.insert(pack(t)).second) {
      store.triples.push_back(t);
    } else {
      ++store.duplicates_dropped;
    }
  });
  return store;
}

FilterIndex FilterIndex::build(const std::vector<const TripleStore*>& stores) {
  FilterIndex idx;
  for (const TripleStore* store : stores) {
    if (store == nullptr) fail(Status::Usage, "null store in filter build");
    for (const Triple& t : store->triples) {
      idx.tails_[key(t.head, t.relation)].push_back(t.tail);
      idx.heads_[key(t.tail, t.relation)].push_back(t.head);
    }
  }
  auto finalize = [](std::unordered_map<uint64_t, std::vector<uint32_t>>& m) {
    for (auto& [k, v] : m) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  };
  finalize(idx.tails_);
  finalize(idx.heads_);
  return idx;
}

const std::vector<uint32_t>& FilterIndex::tails_of(uint32_t head,
                                                   uint32_t relation) const {
  auto it = tails_.find(key(head, relation));
  return it == tails_.end() ? empty_ : it->second;
}

const std::vector<uint32_t>& FilterIndex::heads_of(uint32_t tail,
                                                   uint32_t relation) const {
  auto it = heads_.find(key(tail, relation));
  return it == heads_.end() ? empty_ : it->second;
}

bool FilterIndex::contains(uint32_t head, uint32_t relation,
                           uint32_t tail) const {
  const std::vector<uint32_t>& tails = tails_of(head, relation);
  return std::binary_search(tails.begin(), tails.end(), tail);
}

const char* category_name(Category c) {
  switch (c) {
    case Category::OneToOne: return "1-1";
    case Category::OneToN: return "1-N";
    case Category::NToOne: return "N-1";
    case Category::NToN: return "N-N";
  }
  return "?";
}

std::vector<RelationCategory> classify_relations(
    const TripleStore& train, size_t num_relations,
    std::vector<std::string>* warnings) {
  std::vector<size_t> counts(num_relations, 0);
  std::vector<std::unordered_set<uint32_t>> heads(num_relations);
  std::vector<std::unordered_set<uint32_t>> tails(num_relations);
  for (const Triple& t : train.triples) {
    if (t.relation >= num_relations) {
      fail(Status::Data, "relation id " + std::to_string(t.relation) +
                             " outside vocab of size " +
                             std::to_string(num_relations));
    }
    ++counts[t.relation];
    heads[t.relation].insert(t.head);
    tails[t.relation].insert(t.tail);
  }

  std::vector<RelationCategory> out(num_relations);
  for (size_t r = 0; r < num_relations; ++r) {
    RelationCategory& c = out[r];
    if (counts[r] == 0) {
      c = {Category::OneToOne, 1.0, 1.0};
      if (warnings != nullptr) {
        warnings->push_back("relation id " + std::to_string(r) +
                            " has no training triples; defaulting to 1-1");
      }
      continue;
    }
    c.tph = static_cast<double>(counts[r]) / static_cast<double>(heads[r].size());
    c.hpt = static_cast<double>(counts[r]) / static_cast<double>(tails[r].size());
    bool many_tails = c.tph > 1.5;  // one head reaches many tails
    bool many_heads = c.hpt > 1.5;
    if (many_tails && many_heads) {
      c.label = Category::NToN;
    } else if (many_tails) {
      c.label = Category::OneToN;
    } else if (many_heads) {
      c.label = Category::NToOne;
    } else {
      c.label = Category::OneToOne;
    }
  }
  return out;
}

}  // namespace pairre
