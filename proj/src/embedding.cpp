#include "embedding.hpp"

#include <bit>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "fsio.hpp"

namespace pairre {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const char* scorer_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::PairRE: return "pairre";
    case ScorerKind::TransE: return "transe";
    case ScorerKind::RotatE: return "rotate";
    case ScorerKind::RotatePaired: return "rotate_paired";
  }
  return "?";
}

ScorerKind scorer_from_name(const std::string& name) {
  if (name == "pairre") return ScorerKind::PairRE;
  if (name == "transe") return ScorerKind::TransE;
  if (name == "rotate") return ScorerKind::RotatE;
  if (name == "rotate_paired") return ScorerKind::RotatePaired;
  fail(Status::Data, "unknown scorer '" + name + "'");
}

size_t relation_width(ScorerKind kind, size_t dim) {
  switch (kind) {
    case ScorerKind::PairRE: return 2 * dim;
    case ScorerKind::TransE: return dim;
    case ScorerKind::RotatE: return dim / 2;
    case ScorerKind::RotatePaired: return dim;
  }
  return 0;
}

static void draw_unit_row(std::span<double> row, Rng& rng) {
  while (true) {
    double norm2 = 0.0;
    for (double& x : row) {
      x = rng.next_gaussian();
      norm2 += x * x;
    }
    if (norm2 > 0.0) {
      double inv = 1.0 / std::sqrt(norm2);
      for (double& x : row) x *= inv;
      return;
    }
  }
}

EmbeddingTable init_embeddings(ScorerKind kind, size_t num_entities,
                               size_t num_relations, size_t dim, double gamma,
                               bool squared_distance, uint64_t seed) {
  if (dim == 0) fail(Status::Usage, "embedding dimension must be positive");
  if ((kind == ScorerKind::RotatE || kind == ScorerKind::RotatePaired) &&
      dim % 2 != 0) {
    fail(Status::Usage, std::string("scorer '") + scorer_name(kind) +
                            "' needs an even dimension, got " +
                            std::to_string(dim));
  }
  EmbeddingTable t;
  t.kind = kind;
  t.dim = dim;
  t.rel_width = relation_width(kind, dim);
  t.gamma = gamma;
  t.seed = seed;
  t.squared_distance = squared_distance;
  t.num_entities = num_entities;
  t.num_relations = num_relations;
  t.entity.resize(num_entities * dim);
  t.relation.resize(num_relations * t.rel_width);

  Rng rng(seed);
  for (size_t e = 0; e < num_entities; ++e) {
    draw_unit_row(t.entity_row(static_cast<uint32_t>(e)), rng);
  }
  bool phases = kind == ScorerKind::RotatE || kind == ScorerKind::RotatePaired;
  double lo = phases ? -kPi : -gamma / static_cast<double>(dim);
  double hi = -lo;
  for (double& x : t.relation) x = rng.uniform(lo, hi);
  return t;
}

void project_entities(EmbeddingTable& table, std::span<const uint32_t> touched,
                      Rng& rng, std::vector<std::string>* warnings) {
  for (uint32_t id : touched) {
    std::span<double> row = table.entity_row(id);
    double norm2 = 0.0;
    for (double x : row) norm2 += x * x;
    if (norm2 == 0.0) {
      draw_unit_row(row, rng);
      if (warnings != nullptr) {
        warnings->push_back("entity row " + std::to_string(id) +
                            " had zero norm; re-drawn on the unit sphere");
      }
      continue;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : row) x *= inv;
  }
}

namespace {

std::string encode_le(const std::vector<double>& values) {
  std::string out;
  out.reserve(values.size() * 8);
  for (double v : values) {
    uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  return out;
}

std::vector<double> decode_le(const std::string& bytes, size_t expected,
                              const std::string& path) {
  if (bytes.size() != expected * 8) {
    fail(Status::Data, path + ": expected " + std::to_string(expected * 8) +
                           " bytes, found " + std::to_string(bytes.size()));
  }
  std::vector<double> out(expected);
  for (size_t i = 0; i < expected; ++i) {
    uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<uint64_t>(
                  static_cast<unsigned char>(bytes[i * 8 + b]))
              << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

}  // namespace

void save_checkpoint(const EmbeddingTable& table, const Vocab& vocab,
                     const std::string& dir,
                     const std::string& run_manifest_ref) {
  if (vocab.num_entities() != table.num_entities ||
      vocab.num_relations() != table.num_relations) {
    fail(Status::Usage, "vocab sizes do not match the embedding table");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Status::Io, "cannot create directory " + dir);

  nlohmann::json m;
  m["format_version"] = 1;
  m["scorer"] = scorer_name(table.kind);
  m["dim"] = table.dim;
  m["rel_width"] = table.rel_width;
  m["num_entities"] = table.num_entities;
  m["num_relations"] = table.num_relations;
  m["gamma"] = table.gamma;
  m["seed"] = table.seed;
  m["squared_distance"] = table.squared_distance;
  m["entity_file"] = "entities.f64";
  m["relation_file"] = "relations.f64";
  m["entity_names_file"] = "entity_names.txt";
  m["relation_names_file"] = "relation_names.txt";
  if (!run_manifest_ref.empty()) m["run_manifest"] = run_manifest_ref;

  std::filesystem::path base(dir);
  write_file((base / "manifest.json").string(), m.dump(2) + "\n");
  write_file((base / "entities.f64").string(), encode_le(table.entity));
  write_file((base / "relations.f64").string(), encode_le(table.relation));
  vocab.save((base / "entity_names.txt").string(),
             (base / "relation_names.txt").string());
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::filesystem::path base(dir);
  std::string manifest_path = (base / "manifest.json").string();
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    fail(Status::Data, manifest_path + ": invalid JSON: " + e.what());
  }

  auto require = [&](const char* field) -> const nlohmann::json& {
    if (!m.contains(field)) {
      fail(Status::Data,
           manifest_path + ": missing field '" + std::string(field) + "'");
    }
    return m[field];
  };

  Checkpoint cp;
  EmbeddingTable& t = cp.table;
  try {
    if (require("format_version").get<int>() != 1) {
      fail(Status::Data, manifest_path + ": unsupported format_version");
    }
    t.kind = scorer_from_name(require("scorer").get<std::string>());
    t.dim = require("dim").get<size_t>();
    t.rel_width = require("rel_width").get<size_t>();
    t.gamma = require("gamma").get<double>();
    t.seed = require("seed").get<uint64_t>();
    t.squared_distance = require("squared_distance").get<bool>();
    t.num_entities = require("num_entities").get<size_t>();
    t.num_relations = require("num_relations").get<size_t>();
    if (m.contains("run_manifest")) {
      cp.run_manifest_ref = m["run_manifest"].get<std::string>();
    }
    std::string efile = require("entity_file").get<std::string>();
    std::string rfile = require("relation_file").get<std::string>();
    std::string enames = require("entity_names_file").get<std::string>();
    std::string rnames = require("relation_names_file").get<std::string>();

    if (t.dim == 0) fail(Status::Data, manifest_path + ": dim must be positive");
    if (t.rel_width != relation_width(t.kind, t.dim)) {
      fail(Status::Data, manifest_path + ": rel_width inconsistent with scorer");
    }
    t.entity = decode_le(read_file((base / efile).string()),
                         t.num_entities * t.dim, (base / efile).string());
    t.relation = decode_le(read_file((base / rfile).string()),
                           t.num_relations * t.rel_width,
                           (base / rfile).string());
    cp.vocab = Vocab::load((base / enames).string(), (base / rnames).string());
  } catch (const nlohmann::json::exception& e) {
    fail(Status::Data, manifest_path + ": bad field type: " + e.what());
  }

  if (cp.vocab.num_entities() != t.num_entities ||
      cp.vocab.num_relations() != t.num_relations) {
    fail(Status::Data, dir + ": vocab files disagree with manifest counts");
  }
  return cp;
}

}  // namespace pairre
