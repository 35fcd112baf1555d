#include "rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"
#include "fsio.hpp"

namespace pairre {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_paired(const EmbeddingTable& table, const char* what) {
  if (table.kind != ScorerKind::PairRE) {
    fail(Status::Data, std::string(what) +
                           " needs paired relation vectors (scorer 'pairre'), "
                           "got scorer '" +
                           scorer_name(table.kind) + "'");
  }
}

// Kahn's algorithm over the tying edges; also rejects self-ties and yields
// a parents-first order so re-derivation can run front to back.
std::vector<TyingDecl> order_ties(std::vector<TyingDecl> ties,
                                  const std::string& path) {
  std::unordered_map<uint32_t, size_t> decl_of_child;
  for (size_t i = 0; i < ties.size(); ++i) {
    if (ties[i].parent == ties[i].child) {
      fail(Status::Data, path + ": relation tied to itself");
    }
    if (!decl_of_child.emplace(ties[i].child, i).second) {
      fail(Status::Data, path + ": relation id " +
                             std::to_string(ties[i].child) +
                             " appears as child in more than one tie");
    }
  }
  std::vector<TyingDecl> ordered;
  std::unordered_set<uint32_t> resolved;  // children already ordered
  bool progress = true;
  std::vector<bool> done(ties.size(), false);
  while (ordered.size() < ties.size() && progress) {
    progress = false;
    for (size_t i = 0; i < ties.size(); ++i) {
      if (done[i]) continue;
      // Ready when the parent is not itself a still-unordered child.
      auto it = decl_of_child.find(ties[i].parent);
      if (it != decl_of_child.end() && !done[it->second]) continue;
      ordered.push_back(ties[i]);
      done[i] = true;
      progress = true;
    }
  }
  if (ordered.size() < ties.size()) {
    fail(Status::Data, path + ": tying declarations form a cycle");
  }
  return ordered;
}

}  // namespace

RuleSet parse_rules(const std::string& path, const Vocab& vocab) {
  RuleSet rs;
  std::string content = read_file(path);
  size_t lineno = 0;
  size_t start = 0;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    size_t stop = end == std::string::npos ? content.size() : end;
    std::string line = content.substr(start, stop - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    start = end == std::string::npos ? content.size() : end + 1;
    ++lineno;
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> f = split(line, '\t');
    auto where = [&] { return path + ":" + std::to_string(lineno) + ": "; };
    if (f.size() < 3) {
      fail(Status::Data, where() + "expected `kind<TAB>r1<TAB>r2[<TAB>lambda]`");
    }
    uint32_t r1, r2;
    try {
      r1 = vocab.relation_id(f[1]);
      r2 = vocab.relation_id(f[2]);
    } catch (const Error& e) {
      fail(Status::Data, where() + e.what());
    }

    const std::string& kind = f[0];
    if (kind == "tie") {
      if (f.size() != 3) {
        fail(Status::Data, where() + "tie lines take exactly two relations");
      }
      rs.hard.push_back({r1, r2, {}});
      continue;
    }

    double lambda = 1.0;
    if (f.size() == 4) {
      char* endp = nullptr;
      lambda = std::strtod(f[3].c_str(), &endp);
      if (endp == nullptr || *endp != '\0' || f[3].empty()) {
        fail(Status::Data, where() + "bad lambda '" + f[3] + "'");
      }
    } else if (f.size() > 4) {
      fail(Status::Data, where() + "too many fields");
    }
    if (!(lambda > 0.0) || lambda > 1.0 || !std::isfinite(lambda)) {
      fail(Status::Data,
           where() + "lambda must be in (0, 1], got " + f[3]);
    }

    if (kind == "subrelation") {
      rs.soft.push_back({RuleKind::Subrelation, r1, r2, lambda});
    } else if (kind == "equiv") {
      rs.soft.push_back({RuleKind::Subrelation, r1, r2, lambda});
      rs.soft.push_back({RuleKind::Subrelation, r2, r1, lambda});
    } else if (kind == "inverse") {
      if (r1 == r2) {
        fail(Status::Data, where() + "inverse rule needs distinct relations");
      }
      rs.soft.push_back({RuleKind::Inverse, r1, r2, lambda});
    } else {
      fail(Status::Data, where() + "unknown rule kind '" + kind + "'");
    }
  }
  rs.hard = order_ties(std::move(rs.hard), path);
  return rs;
}

void init_theta(TyingDecl& decl, size_t dim, Rng& rng) {
  decl.theta.resize(dim);
  for (double& x : decl.theta) x = rng.uniform(0.15, kPi - 0.15);
}

void apply_tying(EmbeddingTable& table, const TyingDecl& decl) {
  require_paired(table, "rule tying");
  size_t d = table.dim;
  if (decl.theta.size() != d) {
    fail(Status::Usage, "tying theta not initialized to dimension d");
  }
  std::span<const double> parent = table.relation_row(decl.parent);
  std::span<double> child = table.relation_row(decl.child);
  for (size_t i = 0; i < d; ++i) {
    double c = std::cos(decl.theta[i]);
    child[i] = parent[i] * c;
    child[d + i] = parent[d + i] * c;
  }
}

double rule_penalty(const EmbeddingTable& table, const std::vector<Rule>& soft,
                    GradBuffer* grads, double upstream) {
  if (soft.empty()) return 0.0;
  require_paired(table, "rule penalty");
  size_t d = table.dim;
  double total = 0.0;
  for (const Rule& rule : soft) {
    const double* a = table.relation_row(rule.r1).data();  // [r1h | r1t]
    const double* b = table.relation_row(rule.r2).data();  // [r2h | r2t]
    double acc = 0.0;
    for (size_t i = 0; i < d; ++i) {
      double rho = rule.kind == RuleKind::Subrelation
                       ? a[i] * b[d + i] - a[d + i] * b[i]
                       : a[i] * b[i] - a[d + i] * b[d + i];
      acc += rho * rho;
    }
    total += rule.lambda * acc;

    if (grads != nullptr && upstream != 0.0) {
      // Materialize both rows first; a growing buffer invalidates spans.
      grads->relation(rule.r1);
      grads->relation(rule.r2);
      std::span<double> g1 = grads->relation(rule.r1);
      std::span<double> g2 = grads->relation(rule.r2);
      double w = 2.0 * upstream * rule.lambda;
      for (size_t i = 0; i < d; ++i) {
        if (rule.kind == RuleKind::Subrelation) {
          double rho = a[i] * b[d + i] - a[d + i] * b[i];
          g1[i] += w * rho * b[d + i];
          g1[d + i] -= w * rho * b[i];
          g2[d + i] += w * rho * a[i];
          g2[i] -= w * rho * a[d + i];
        } else {
          double rho = a[i] * b[i] - a[d + i] * b[d + i];
          g1[i] += w * rho * b[i];
          g1[d + i] -= w * rho * b[d + i];
          g2[i] += w * rho * a[i];
          g2[d + i] -= w * rho * a[d + i];
        }
      }
    }
  }
  return total;
}

void chain_tied_gradient(const EmbeddingTable& table, const TyingDecl& decl,
                         GradBuffer& grads, std::span<double> theta_grad) {
  size_t d = table.dim;
  if (grads.find_relation(decl.child).empty()) return;
  grads.relation(decl.parent);  // materialize before spans are taken
  std::span<double> gc = grads.find_relation(decl.child);
  std::span<double> gp = grads.relation(decl.parent);
  std::span<const double> parent = table.relation_row(decl.parent);
  for (size_t i = 0; i < d; ++i) {
    double c = std::cos(decl.theta[i]);
    double s = std::sin(decl.theta[i]);
    gp[i] += c * gc[i];
    gp[d + i] += c * gc[d + i];
    theta_grad[i] += -s * (parent[i] * gc[i] + parent[d + i] * gc[d + i]);
    gc[i] = 0.0;
    gc[d + i] = 0.0;
  }
}

SubrelationReport check_subrelation_constraint(const EmbeddingTable& table,
                                               uint32_t r1, uint32_t r2,
                                               double tolerance) {
  require_paired(table, "subrelation check");
  size_t d = table.dim;
  const double* a = table.relation_row(r1).data();
  const double* b = table.relation_row(r2).data();

  SubrelationReport rep;
  rep.alpha.assign(d, std::numeric_limits<double>::quiet_NaN());
  rep.satisfied = true;
  for (size_t i = 0; i < d; ++i) {
    if (std::abs(a[i]) < 1e-12 || std::abs(a[d + i]) < 1e-12) {
      rep.indeterminate.push_back(static_cast<uint32_t>(i));
      continue;
    }
    double alpha = b[i] / a[i];
    double beta = b[d + i] / a[d + i];
    rep.alpha[i] = alpha;
    rep.max_ratio_mismatch =
        std::max(rep.max_ratio_mismatch, std::abs(alpha - beta));
    rep.max_abs_alpha = std::max(rep.max_abs_alpha, std::abs(alpha));
    if (std::abs(alpha - beta) > tolerance ||
        std::abs(alpha) > 1.0 + tolerance) {
      rep.satisfied = false;
    }
  }
  return rep;
}

}  // namespace pairre
