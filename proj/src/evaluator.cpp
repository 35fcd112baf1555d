#include "evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "fsio.hpp"

namespace pairre {

const char* tie_policy_name(TiePolicy p) {
  switch (p) {
    case TiePolicy::Mean: return "mean";
    case TiePolicy::Optimistic: return "optimistic";
    case TiePolicy::Pessimistic: return "pessimistic";
  }
  return "?";
}

TiePolicy tie_policy_from_name(const std::string& name) {
  if (name == "mean") return TiePolicy::Mean;
  if (name == "optimistic") return TiePolicy::Optimistic;
  if (name == "pessimistic") return TiePolicy::Pessimistic;
  fail(Status::Usage, "unknown tie policy '" + name + "'");
}

double rank_from_scores(std::span<const double> scores, uint32_t target,
                        const std::vector<uint32_t>& known_true_sorted,
                        TiePolicy policy) {
  double target_score = scores[target];
  size_t better = 0, ties = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (i == target) continue;
    if (std::binary_search(known_true_sorted.begin(), known_true_sorted.end(),
                           static_cast<uint32_t>(i))) {
      continue;  // another known-true completion; filtered out
    }
    if (scores[i] > target_score) {
      ++better;
    } else if (scores[i] == target_score) {
      ++ties;
    }
  }
  double rank = 1.0 + static_cast<double>(better);
  switch (policy) {
    case TiePolicy::Mean: return rank + static_cast<double>(ties) / 2.0;
    case TiePolicy::Optimistic: return rank;
    case TiePolicy::Pessimistic: return rank + static_cast<double>(ties);
  }
  return rank;
}

double rank_triple(const EmbeddingTable& table, const Triple& triple,
                   const FilterIndex& filter, Side side, TiePolicy policy) {
  std::vector<double> scores;
  score_all(table, triple, side, scores);
  const std::vector<uint32_t>& known =
      side == Side::Tail ? filter.tails_of(triple.head, triple.relation)
                         : filter.heads_of(triple.tail, triple.relation);
  uint32_t target = side == Side::Tail ? triple.tail : triple.head;
  return rank_from_scores(scores, target, known, policy);
}

Metrics metrics_from_ranks(std::span<const double> ranks) {
  Metrics m;
  m.count = ranks.size();
  if (ranks.empty()) return m;
  double sum_r = 0.0, sum_inv = 0.0, h1 = 0.0, h3 = 0.0, h10 = 0.0;
  for (double r : ranks) {
    sum_r += r;
    sum_inv += 1.0 / r;
    if (r <= 1.0) h1 += 1.0;
    if (r <= 3.0) h3 += 1.0;
    if (r <= 10.0) h10 += 1.0;
  }
  double n = static_cast<double>(ranks.size());
  m.mr = sum_r / n;
  m.mrr = sum_inv / n;
  m.hits1 = h1 / n;
  m.hits3 = h3 / n;
  m.hits10 = h10 / n;
  return m;
}

namespace {

Metrics mean_of_sides(const Metrics& a, const Metrics& b) {
  Metrics m;
  m.mr = (a.mr + b.mr) / 2.0;
  m.mrr = (a.mrr + b.mrr) / 2.0;
  m.hits1 = (a.hits1 + b.hits1) / 2.0;
  m.hits3 = (a.hits3 + b.hits3) / 2.0;
  m.hits10 = (a.hits10 + b.hits10) / 2.0;
  m.count = a.count + b.count;
  return m;
}

ScopeMetrics scope_from_ranks(std::span<const double> head_ranks,
                              std::span<const double> tail_ranks) {
  ScopeMetrics s;
  s.head = metrics_from_ranks(head_ranks);
  s.tail = metrics_from_ranks(tail_ranks);
  s.both = mean_of_sides(s.head, s.tail);
  s.triples = head_ranks.size();
  return s;
}

}  // namespace

RankingReport evaluate(const EmbeddingTable& table, const TripleStore& test,
                       const FilterIndex& filter,
                       const std::vector<RelationCategory>& categories,
                       TiePolicy policy, int threads) {
  size_t n = test.triples.size();
  if (n == 0) fail(Status::Data, "evaluate: empty test set");

  // Per-triple rank slots keep the aggregation identical for any thread
  // count; only the rank computation is parallel.
  std::vector<double> head_ranks(n), tail_ranks(n);
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      head_ranks[i] =
          rank_triple(table, test.triples[i], filter, Side::Head, policy);
      tail_ranks[i] =
          rank_triple(table, test.triples[i], filter, Side::Tail, policy);
    }
  };
  size_t workers = threads < 1 ? 1 : std::min<size_t>(threads, n);
  if (workers <= 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
      size_t begin = w * chunk;
      size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  RankingReport rep;
  rep.policy = policy;
  rep.overall = scope_from_ranks(head_ranks, tail_ranks);

  for (size_t c = 0; c < 4; ++c) {
    std::vector<double> h, t;
    for (size_t i = 0; i < n; ++i) {
      uint32_t r = test.triples[i].relation;
      if (r >= categories.size()) {
        fail(Status::Data, "evaluate: relation id " + std::to_string(r) +
                               " missing from category table");
      }
      if (static_cast<size_t>(categories[r].label) == c) {
        h.push_back(head_ranks[i]);
        t.push_back(tail_ranks[i]);
      }
    }
    rep.by_category[c] = scope_from_ranks(h, t);
  }
  return rep;
}

namespace {

nlohmann::json metrics_json(const Metrics& m) {
  return {{"mr", m.mr},     {"mrr", m.mrr},     {"hits1", m.hits1},
          {"hits3", m.hits3}, {"hits10", m.hits10}, {"count", m.count}};
}

void tsv_row(std::string& out, const std::string& scope, const char* side,
             const Metrics& m) {
  out += scope + "\t" + side + "\t" + fmt_g17(m.mr) + "\t" + fmt_g17(m.mrr) +
         "\t" + fmt_g17(m.hits1) + "\t" + fmt_g17(m.hits3) + "\t" +
         fmt_g17(m.hits10) + "\t" + std::to_string(m.count) + "\n";
}

const Metrics& pick_side(const ScopeMetrics& s, const std::string& side) {
  if (side == "head") return s.head;
  if (side == "tail") return s.tail;
  if (side == "both") return s.both;
  fail(Status::Usage, "unknown report side '" + side + "'");
}

}  // namespace

std::string RankingReport::to_json() const {
  nlohmann::json scopes;
  auto scope_json = [](const ScopeMetrics& s) {
    return nlohmann::json{{"triples", s.triples},
                          {"head", metrics_json(s.head)},
                          {"tail", metrics_json(s.tail)},
                          {"both", metrics_json(s.both)}};
  };
  scopes["overall"] = scope_json(overall);
  for (size_t c = 0; c < 4; ++c) {
    scopes[category_name(static_cast<Category>(c))] = scope_json(by_category[c]);
  }
  nlohmann::json j;
  j["tie_policy"] = tie_policy_name(policy);
  if (!run_manifest.empty()) j["run_manifest"] = run_manifest;
  j["scopes"] = scopes;
  return j.dump(2) + "\n";
}

std::string RankingReport::to_tsv() const {
  std::string out;
  if (!run_manifest.empty()) out += "# run_manifest: " + run_manifest + "\n";
  out += "scope\tside\tmr\tmrr\thits1\thits3\thits10\tcount\n";
  auto emit = [&](const std::string& scope, const ScopeMetrics& s) {
    tsv_row(out, scope, "head", s.head);
    tsv_row(out, scope, "tail", s.tail);
    tsv_row(out, scope, "both", s.both);
  };
  emit("overall", overall);
  for (size_t c = 0; c < 4; ++c) {
    emit(category_name(static_cast<Category>(c)), by_category[c]);
  }
  return out;
}

double RankingReport::metric(const std::string& scope, const std::string& side,
                             const std::string& name) const {
  const ScopeMetrics* s = nullptr;
  if (scope == "overall") {
    s = &overall;
  } else {
    for (size_t c = 0; c < 4; ++c) {
      if (scope == category_name(static_cast<Category>(c))) {
        s = &by_category[c];
        break;
      }
    }
  }
  if (s == nullptr) fail(Status::Usage, "unknown report scope '" + scope + "'");
  if (name == "triples") return static_cast<double>(s->triples);
  const Metrics& m = pick_side(*s, side);
  if (name == "mr") return m.mr;
  if (name == "mrr") return m.mrr;
  if (name == "hits1") return m.hits1;
  if (name == "hits3") return m.hits3;
  if (name == "hits10") return m.hits10;
  if (name == "count") return static_cast<double>(m.count);
  fail(Status::Usage, "unknown report metric '" + name + "'");
}

const char* pattern_name(PatternKind kind) {
  switch (kind) {
    case PatternKind::Symmetry: return "symmetry";
    case PatternKind::Antisymmetry: return "antisymmetry";
    case PatternKind::Inverse: return "inverse";
    case PatternKind::Composition: return "composition";
    case PatternKind::Subrelation: return "subrelation";
  }
  return "?";
}

PatternKind pattern_from_name(const std::string& name) {
  if (name == "symmetry") return PatternKind::Symmetry;
  if (name == "antisymmetry") return PatternKind::Antisymmetry;
  if (name == "inverse") return PatternKind::Inverse;
  if (name == "composition") return PatternKind::Composition;
  if (name == "subrelation") return PatternKind::Subrelation;
  fail(Status::Usage, "unknown pattern kind '" + name + "'");
}

size_t pattern_arity(PatternKind kind) {
  switch (kind) {
    case PatternKind::Symmetry:
    case PatternKind::Antisymmetry: return 1;
    case PatternKind::Inverse:
    case PatternKind::Subrelation: return 2;
    case PatternKind::Composition: return 3;
  }
  return 0;
}

PatternResidual pattern_residual(const EmbeddingTable& table, PatternKind kind,
                                 std::span<const uint32_t> relations) {
  if (table.kind != ScorerKind::PairRE) {
    fail(Status::Data, "pattern residuals need paired relation vectors "
                       "(scorer 'pairre')");
  }
  if (relations.size() != pattern_arity(kind)) {
    fail(Status::Usage, std::string("pattern '") + pattern_name(kind) +
                            "' takes " + std::to_string(pattern_arity(kind)) +
                            " relation(s), got " +
                            std::to_string(relations.size()));
  }
  size_t d = table.dim;
  PatternResidual out;
  out.kind = kind;
  out.relations.assign(relations.begin(), relations.end());
  out.residual.resize(d);

  const double* r1 = table.relation_row(relations[0]).data();
  const double* r2 = relations.size() > 1
                         ? table.relation_row(relations[1]).data()
                         : nullptr;
  const double* r3 = relations.size() > 2
                         ? table.relation_row(relations[2]).data()
                         : nullptr;
  for (size_t i = 0; i < d; ++i) {
    double v = 0.0;
    switch (kind) {
      case PatternKind::Symmetry:
      case PatternKind::Antisymmetry:
        v = r1[i] * r1[i] - r1[d + i] * r1[d + i];
        break;
      case PatternKind::Inverse:
        v = r1[i] * r2[i] - r1[d + i] * r2[d + i];
        break;
      case PatternKind::Composition:
        v = r1[d + i] * r2[d + i] * r3[i] - r1[i] * r2[i] * r3[d + i];
        break;
      case PatternKind::Subrelation:
        v = r1[i] * r2[d + i] - r1[d + i] * r2[i];
        break;
    }
    out.residual[i] = v;
  }
  double sum = 0.0;
  for (double v : out.residual) {
    double a = std::abs(v);
    sum += a;
    out.max_abs = std::max(out.max_abs, a);
  }
  out.mean_abs = sum / static_cast<double>(d);
  return out;
}

std::vector<HistogramBin> build_histogram(std::span<const double> values,
                                          int bins) {
  if (bins < 1) fail(Status::Usage, "histogram needs at least one bin");
  if (values.empty()) fail(Status::Usage, "histogram of an empty value set");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (int b = 0; b < bins; ++b) {
    out[b].left = lo + width * b;
    out[b].right = (b == bins - 1) ? hi : lo + width * (b + 1);
  }
  for (double v : values) {
    size_t idx = static_cast<size_t>((v - lo) / width);
    if (idx >= static_cast<size_t>(bins)) idx = bins - 1;  // right-inclusive
    ++out[idx].count;
  }
  return out;
}

void export_histogram(const PatternResidual& residual, int bins,
                      const std::string& path) {
  std::vector<HistogramBin> hist = build_histogram(residual.residual, bins);
  std::string out;
  for (const HistogramBin& b : hist) {
    out += fmt_g17(b.left) + "\t" + fmt_g17(b.right) + "\t" +
           std::to_string(b.count) + "\n";
  }
  write_file(path, out);
}

}  // namespace pairre
