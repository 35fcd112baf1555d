#include "scoring.hpp"

#include <cmath>

#include "error.hpp"

namespace pairre {

namespace {

// Squared distance between the projected/translated/rotated head image and
// the tail image, per scorer. Scores derive from this single definition so
// score, score_batch and score_all agree bit for bit.
double squared_dist(const EmbeddingTable& table, const double* h,
                    const double* r, const double* t) {
  size_t d = table.dim;
  double acc = 0.0;
  switch (table.kind) {
    case ScorerKind::PairRE: {
      const double* rh = r;
      const double* rt = r + d;
      for (size_t i = 0; i < d; ++i) {
        double delta = h[i] * rh[i] - t[i] * rt[i];
        acc += delta * delta;
      }
      return acc;
    }
    case ScorerKind::TransE: {
      for (size_t i = 0; i < d; ++i) {
        double delta = h[i] + r[i] - t[i];
        acc += delta * delta;
      }
      return acc;
    }
    case ScorerKind::RotatE: {
      for (size_t k = 0; k < d / 2; ++k) {
        double c = std::cos(r[k]), s = std::sin(r[k]);
        double re = h[2 * k] * c - h[2 * k + 1] * s - t[2 * k];
        double im = h[2 * k] * s + h[2 * k + 1] * c - t[2 * k + 1];
        acc += re * re + im * im;
      }
      return acc;
    }
    case ScorerKind::RotatePaired: {
      const double* ph = r;          // head phases
      const double* pt = r + d / 2;  // tail phases
      for (size_t k = 0; k < d / 2; ++k) {
        double ch = std::cos(ph[k]), sh = std::sin(ph[k]);
        double ct = std::cos(pt[k]), st = std::sin(pt[k]);
        double re = (h[2 * k] * ch - h[2 * k + 1] * sh) -
                    (t[2 * k] * ct - t[2 * k + 1] * st);
        double im = (h[2 * k] * sh + h[2 * k + 1] * ch) -
                    (t[2 * k] * st + t[2 * k + 1] * ct);
        acc += re * re + im * im;
      }
      return acc;
    }
  }
  fail(Status::Internal, "unhandled scorer kind");
}

inline double to_score(double d2, bool squared) {
  return squared ? -d2 : -std::sqrt(d2);
}

}  // namespace

double score(const EmbeddingTable& table, uint32_t h, uint32_t r, uint32_t t) {
  double d2 = squared_dist(table, table.entity_row(h).data(),
                           table.relation_row(r).data(),
                           table.entity_row(t).data());
  return to_score(d2, table.squared_distance);
}

std::vector<double> score_batch(const EmbeddingTable& table,
                                std::span<const uint32_t> heads,
                                uint32_t relation,
                                std::span<const uint32_t> tails) {
  if (heads.size() != 1 && tails.size() != 1) {
    fail(Status::Usage, "score_batch needs a singleton on one side");
  }
  size_t n = heads.size() == 1 ? tails.size() : heads.size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    uint32_t h = heads.size() == 1 ? heads[0] : heads[i];
    uint32_t t = tails.size() == 1 ? tails[0] : tails[i];
    out[i] = score(table, h, relation, t);
  }
  return out;
}

void score_all(const EmbeddingTable& table, const Triple& triple, Side side,
               std::vector<double>& out) {
  out.resize(table.num_entities);
  const double* r = table.relation_row(triple.relation).data();
  const double* fixed = side == Side::Tail
                            ? table.entity_row(triple.head).data()
                            : table.entity_row(triple.tail).data();
  for (size_t e = 0; e < table.num_entities; ++e) {
    const double* cand = table.entity.data() + e * table.dim;
    const double* h = side == Side::Tail ? fixed : cand;
    const double* t = side == Side::Tail ? cand : fixed;
    out[e] = to_score(squared_dist(table, h, r, t), table.squared_distance);
  }
}

void accumulate_gradients(const EmbeddingTable& table, const Triple& triple,
                          double upstream, GradBuffer& grads) {
  size_t d = table.dim;
  const double* h = table.entity_row(triple.head).data();
  const double* r = table.relation_row(triple.relation).data();
  const double* t = table.entity_row(triple.tail).data();

  // Partials of -(squared distance) are accumulated, rescaled afterwards:
  // with f = -D the factor is 1; with f = -sqrt(D) the chain rule gives
  // 1 / (2 sqrt(D)), and exactly 0 at the non-differentiable point D = 0.
  double scale = upstream;
  if (!table.squared_distance) {
    double d2 = squared_dist(table, h, r, t);
    double dist = std::sqrt(d2);
    scale = dist > 0.0 ? upstream / (2.0 * dist) : 0.0;
  }
  // Materialize all three rows before taking spans: creating a row can grow
  // the buffer's storage and would invalidate spans taken earlier. Callers
  // also rely on touched rows existing even when the gradient is zero.
  grads.entity(triple.head);
  grads.entity(triple.tail);
  grads.relation(triple.relation);
  if (scale == 0.0) return;

  std::span<double> gh = grads.entity(triple.head);
  std::span<double> gr = grads.relation(triple.relation);
  // Self-loops (head == tail) alias gh and gt; both roles fold into one row.
  std::span<double> gt = grads.entity(triple.tail);

  switch (table.kind) {
    case ScorerKind::PairRE: {
      const double* rh = r;
      const double* rt = r + d;
      for (size_t i = 0; i < d; ++i) {
        double delta = h[i] * rh[i] - t[i] * rt[i];
        double g = -2.0 * scale * delta;
        gh[i] += g * rh[i];
        gt[i] -= g * rt[i];
        gr[i] += g * h[i];
        gr[d + i] -= g * t[i];
      }
      return;
    }
    case ScorerKind::TransE: {
      for (size_t i = 0; i < d; ++i) {
        double delta = h[i] + r[i] - t[i];
        double g = -2.0 * scale * delta;
        gh[i] += g;
        gr[i] += g;
        gt[i] -= g;
      }
      return;
    }
    case ScorerKind::RotatE: {
      for (size_t k = 0; k < d / 2; ++k) {
        double c = std::cos(r[k]), s = std::sin(r[k]);
        double hr_re = h[2 * k] * c - h[2 * k + 1] * s;
        double hr_im = h[2 * k] * s + h[2 * k + 1] * c;
        double dre = hr_re - t[2 * k];
        double dim = hr_im - t[2 * k + 1];
        gh[2 * k] += -2.0 * scale * (dre * c + dim * s);
        gh[2 * k + 1] += -2.0 * scale * (-dre * s + dim * c);
        gt[2 * k] += 2.0 * scale * dre;
        gt[2 * k + 1] += 2.0 * scale * dim;
        gr[k] += -2.0 * scale * (-dre * hr_im + dim * hr_re);
      }
      return;
    }
    case ScorerKind::RotatePaired: {
      const double* ph = r;
      const double* pt = r + d / 2;
      for (size_t k = 0; k < d / 2; ++k) {
        double ch = std::cos(ph[k]), sh = std::sin(ph[k]);
        double ct = std::cos(pt[k]), st = std::sin(pt[k]);
        double hr_re = h[2 * k] * ch - h[2 * k + 1] * sh;
        double hr_im = h[2 * k] * sh + h[2 * k + 1] * ch;
        double tr_re = t[2 * k] * ct - t[2 * k + 1] * st;
        double tr_im = t[2 * k] * st + t[2 * k + 1] * ct;
        double dre = hr_re - tr_re;
        double dim = hr_im - tr_im;
        gh[2 * k] += -2.0 * scale * (dre * ch + dim * sh);
        gh[2 * k + 1] += -2.0 * scale * (-dre * sh + dim * ch);
        gt[2 * k] += 2.0 * scale * (dre * ct + dim * st);
        gt[2 * k + 1] += 2.0 * scale * (-dre * st + dim * ct);
        gr[k] += -2.0 * scale * (-dre * hr_im + dim * hr_re);
        gr[d / 2 + k] += 2.0 * scale * (-dre * tr_im + dim * tr_re);
      }
      return;
    }
  }
  fail(Status::Internal, "unhandled scorer kind");
}

}  // namespace pairre
