#pragma once

// Contrastive training objectives: NT-Xent, SupCon, bounded contrastive
// regression against fixed prototypes, the geometry-guided localization
// term, and the combined objective with its balancing schedule.
//
// Every batch loss can also emit its analytic gradient with respect to the
// raw (pre-normalization) embedding rows; cosine similarities are computed
// with explicit norm division so finite-difference probes of arbitrary
// inputs agree with the analytic path.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "seeable/common.hpp"
#include "seeable/graph.hpp"
#include "seeable/labels.hpp"
#include "seeable/prototypes.hpp"

namespace seeable {

// N projector outputs with their class labels. h_norms carries the
// pre-projection feature norms for scoring-side bookkeeping; the losses
// ignore it.
struct EmbeddingBatch {
  int n = 0;
  int dim = 0;
  std::vector<double> z;        // n x dim, rows unit-norm in normal use
  std::vector<double> h_norms;  // n (optional, may be empty)
  std::vector<int> labels;      // n, class ids

  std::span<const double> row(int i) const {
    return {z.data() + static_cast<size_t>(i) * dim, static_cast<size_t>(dim)};
  }

  void validate() const {
    if (n < 2) throw std::invalid_argument("EmbeddingBatch: need n >= 2");
    if (z.size() != static_cast<size_t>(n) * dim || static_cast<int>(labels.size()) != n)
      throw std::invalid_argument("EmbeddingBatch: size mismatch");
    for (int i = 0; i < n; ++i) {
      if (std::abs(norm(row(i)) - 1.0) > 1e-6)
        throw NumericError("EmbeddingBatch: row " + std::to_string(i) + " not unit norm");
      if (labels[i] < 0) throw std::invalid_argument("EmbeddingBatch: negative label");
    }
  }
};

namespace detail {

// logsumexp of logits[i]/tau.
inline double lse_over_tau(std::span<const double> logits, double tau) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, v);
  double s = 0.0;
  for (double v : logits) s += std::exp((v - m) / tau);
  return m / tau + std::log(s);
}

// Accumulates coeff * d sim(a, b)/d a into ga (and symmetrically for b when
// gb is non-null). sab is the precomputed similarity, na/nb the norms.
inline void add_sim_grad(double coeff, std::span<const double> a, std::span<const double> b,
                         double sab, double na, double nb, std::span<double> ga,
                         std::span<double> gb = {}) {
  const double inv = 1.0 / (na * nb);
  for (size_t c = 0; c < a.size(); ++c) {
    ga[c] += coeff * (b[c] * inv - sab * a[c] / (na * na));
    if (!gb.empty()) gb[c] += coeff * (a[c] * inv - sab * b[c] / (nb * nb));
  }
}

struct BatchSims {
  std::vector<double> nz;  // row norms
  std::vector<double> s;   // n x n cosine sims (diag = 1)

  static BatchSims of(const EmbeddingBatch& b) {
    BatchSims out;
    out.nz.resize(b.n);
    for (int i = 0; i < b.n; ++i) {
      out.nz[i] = norm(b.row(i));
      if (out.nz[i] == 0.0) throw std::domain_error("loss: zero-norm embedding");
    }
    out.s.assign(static_cast<size_t>(b.n) * b.n, 1.0);
    for (int i = 0; i < b.n; ++i)
      for (int j = i + 1; j < b.n; ++j) {
        const double v = dot(b.row(i), b.row(j)) / (out.nz[i] * out.nz[j]);
        out.s[static_cast<size_t>(i) * b.n + j] = v;
        out.s[static_cast<size_t>(j) * b.n + i] = v;
      }
    return out;
  }

  double at(int i, int j, int n) const { return s[static_cast<size_t>(i) * n + j]; }
};

inline std::vector<int> positives_of(const EmbeddingBatch& b, int i) {
  std::vector<int> p;
  for (int j = 0; j < b.n; ++j)
    if (j != i && b.labels[j] == b.labels[i]) p.push_back(j);
  return p;
}

inline std::span<double> grad_row(std::vector<double>* grad, const EmbeddingBatch& b, int i) {
  return {grad->data() + static_cast<size_t>(i) * b.dim, static_cast<size_t>(b.dim)};
}

// SupCon over the batch; anchors without positives contribute zero. Returns
// the loss and reports whether any anchor had positives.
inline double supcon_impl(const EmbeddingBatch& b, double tau, std::vector<double>* grad,
                          bool* any_positive) {
  const BatchSims bs = BatchSims::of(b);
  *any_positive = false;
  double total = 0.0;
  std::vector<double> logits(b.n - 1);
  std::vector<double> w(b.n);
  for (int i = 0; i < b.n; ++i) {
    const auto pos = positives_of(b, i);
    if (pos.empty()) continue;
    *any_positive = true;

    int t = 0;
    for (int j = 0; j < b.n; ++j)
      if (j != i) logits[t++] = bs.at(i, j, b.n);
    const double lse = lse_over_tau(logits, tau);

    double mean_pos_sim = 0.0;
    for (int p : pos) mean_pos_sim += bs.at(i, p, b.n);
    total += lse - mean_pos_sim / (tau * static_cast<double>(pos.size()));

    if (grad) {
      // softmax weights over j != i
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < b.n; ++j)
        if (j != i) m = std::max(m, bs.at(i, j, b.n));
      double den = 0.0;
      for (int j = 0; j < b.n; ++j) {
        w[j] = (j == i) ? 0.0 : std::exp((bs.at(i, j, b.n) - m) / tau);
        den += w[j];
      }
      for (int j = 0; j < b.n; ++j) w[j] /= den;

      for (int j = 0; j < b.n; ++j) {
        if (j == i) continue;
        double coeff = w[j] / tau;  // from the log-denominator
        if (b.labels[j] == b.labels[i]) coeff -= 1.0 / (tau * static_cast<double>(pos.size()));
        if (coeff != 0.0)
          add_sim_grad(coeff, b.row(i), b.row(j), bs.at(i, j, b.n), bs.nz[i], bs.nz[j],
                       grad_row(grad, b, i), grad_row(grad, b, j));
      }
    }
  }
  return total;
}

}  // namespace detail

// NT-Xent for one (anchor, positive) pair. The denominator runs over the
// contrast set, which is the positive plus every provided negative.
inline double nt_xent(std::span<const double> anchor, std::span<const double> positive,
                      const std::vector<std::vector<double>>& negatives, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("nt_xent: tau must be positive");
  if (negatives.empty()) throw std::domain_error("nt_xent: empty contrast set");
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(cosine_similarity(anchor, positive));
  for (const auto& neg : negatives) logits.push_back(cosine_similarity(anchor, neg));
  return -logits[0] / tau + detail::lse_over_tau(logits, tau);
}

// Eq.-style SupCon: mean NT-Xent over each anchor's positive set, denominator
// over all other batch members. Throws if no anchor has a positive.
inline double supcon(const EmbeddingBatch& batch, double tau,
                     std::vector<double>* grad = nullptr) {
  if (tau <= 0.0) throw std::invalid_argument("supcon: tau must be positive");
  if (batch.n < 2) throw std::invalid_argument("supcon: need n >= 2");
  if (grad) grad->assign(batch.z.size(), 0.0);
  bool any = false;
  const double v = detail::supcon_impl(batch, tau, grad, &any);
  if (!any) throw DataError("supcon: degenerate batch (no positive pairs)");
  return v;
}

// SupCon that returns zero (no gradient) when the batch has no positive
// pairs; the baseline objective switch needs this since small batches over
// many classes routinely have none.
inline double supcon_lenient(const EmbeddingBatch& batch, double tau,
                             std::vector<double>* grad = nullptr) {
  if (tau <= 0.0) throw std::invalid_argument("supcon: tau must be positive");
  if (grad) grad->assign(batch.z.size(), 0.0);
  bool any = false;
  return detail::supcon_impl(batch, tau, grad, &any);
}

// Bounded contrastive regression: SupCon plus a prototype-anchored NT-Xent
// term per sample. The prototype term's contrast set is the target prototype,
// the other-class batch embeddings and the non-target prototypes; same-class
// embeddings are excluded, otherwise a collapsed positive would sit in the
// denominator at similarity 1 and put a log(2) floor under the term, making
// the all-prototypes configuration non-optimal. Scaled by 1/|P(i)| with
// empty positive sets counting 1.
inline double bcr(const EmbeddingBatch& batch, const PrototypeSet& protos, double tau,
                  std::vector<double>* grad = nullptr, int reserve_offset = 0) {
  if (tau <= 0.0) throw std::invalid_argument("bcr: tau must be positive");
  if (batch.n < 2) throw std::invalid_argument("bcr: need n >= 2");
  for (int i = 0; i < batch.n; ++i)
    if (batch.labels[i] + reserve_offset >= protos.count || batch.labels[i] < 0)
      throw std::invalid_argument("bcr: label has no prototype");
  if (batch.dim != protos.dim) throw std::invalid_argument("bcr: dimension mismatch");

  if (grad) grad->assign(batch.z.size(), 0.0);
  bool any = false;
  double total = detail::supcon_impl(batch, tau, grad, &any);

  const detail::BatchSims bs = detail::BatchSims::of(batch);
  std::vector<double> np(protos.count);
  for (int k = 0; k < protos.count; ++k) np[k] = norm(protos.row(k));

  std::vector<double> q(protos.count);  // sims to prototypes for one anchor
  std::vector<double> logits;
  for (int i = 0; i < batch.n; ++i) {
    const int target = batch.labels[i] + reserve_offset;
    for (int k = 0; k < protos.count; ++k)
      q[k] = dot(batch.row(i), protos.row(k)) / (bs.nz[i] * np[k]);

    logits.clear();
    logits.push_back(q[target]);
    for (int j = 0; j < batch.n; ++j)
      if (j != i && batch.labels[j] != batch.labels[i]) logits.push_back(bs.at(i, j, batch.n));
    for (int k = 0; k < protos.count; ++k)
      if (k != target) logits.push_back(q[k]);

    const double divisor = std::max<size_t>(detail::positives_of(batch, i).size(), 1);
    total += (-q[target] / tau + detail::lse_over_tau(logits, tau)) / divisor;

    if (grad) {
      double m = -std::numeric_limits<double>::infinity();
      for (double v : logits) m = std::max(m, v);
      double den = 0.0;
      for (double v : logits) den += std::exp((v - m) / tau);
      auto weight = [&](double s) { return std::exp((s - m) / tau) / den; };

      auto gi = detail::grad_row(grad, batch, i);
      // target prototype: numerator plus its denominator share
      detail::add_sim_grad((-1.0 / tau + weight(q[target]) / tau) / divisor, batch.row(i),
                   protos.row(target), q[target], bs.nz[i], np[target], gi);
      for (int j = 0; j < batch.n; ++j) {
        if (j == i || batch.labels[j] == batch.labels[i]) continue;
        detail::add_sim_grad(weight(bs.at(i, j, batch.n)) / tau / divisor, batch.row(i),
                             batch.row(j), bs.at(i, j, batch.n), bs.nz[i], bs.nz[j], gi,
                             detail::grad_row(grad, batch, j));
      }
      for (int k = 0; k < protos.count; ++k) {
        if (k == target) continue;
        detail::add_sim_grad(weight(q[k]) / tau / divisor, batch.row(i), protos.row(k), q[k], bs.nz[i],
                     np[k], gi);
      }
    }
  }
  return total;
}

// Predicted class of one embedding under prototype matching, restricted to
// the discrepancy-class block of the prototype set.
inline int match_class(std::span<const double> z, const PrototypeSet& protos, int n_classes,
                       int reserve_offset) {
  if (reserve_offset + n_classes > protos.count)
    throw std::invalid_argument("match_class: class block exceeds prototype count");
  int best = 0;
  double best_sim = cosine_similarity(z, protos.row(reserve_offset));
  for (int k = 1; k < n_classes; ++k) {
    const double s = cosine_similarity(z, protos.row(k + reserve_offset));
    if (s > best_sim) {
      best_sim = s;
      best = k;
    }
  }
  return best;
}

// Guidance loss: geometry-weighted prototype distances. The weight G uses
// the hard prototype-matching prediction, so gradients flow through r_i only.
inline double guidance_loss(const EmbeddingBatch& batch, const PrototypeSet& protos,
                            const PatchGraph& graph, int n_type,
                            std::vector<double>* grad = nullptr, int reserve_offset = 0) {
  const int n_cls = graph.n_nodes * n_type;
  if (n_cls + reserve_offset > protos.count)
    throw std::invalid_argument("guidance_loss: prototype set too small for class space");
  if (batch.dim != protos.dim) throw std::invalid_argument("guidance_loss: dimension mismatch");
  if (grad) grad->assign(batch.z.size(), 0.0);

  double total = 0.0;
  for (int i = 0; i < batch.n; ++i) {
    if (batch.labels[i] < 0 || batch.labels[i] >= n_cls)
      throw std::invalid_argument("guidance_loss: label out of class range");
    const int pred = match_class(batch.row(i), protos, n_cls, reserve_offset);
    const double g = guidance_weight(pred, batch.labels[i], graph, n_type);
    const auto p = protos.row(batch.labels[i] + reserve_offset);
    total += g * d_sim(batch.row(i), p);
    if (grad) {
      const double nz = norm(batch.row(i));
      const double npk = norm(p);
      const double s = dot(batch.row(i), p) / (nz * npk);
      detail::add_sim_grad(-g, batch.row(i), p, s, nz, npk, detail::grad_row(grad, batch, i));
    }
  }
  return total;
}

struct LossBreakdown {
  double bcr = 0.0;
  double guidance = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

// Combined objective: BCR + lambda * guidance.
inline LossBreakdown total_loss(const EmbeddingBatch& batch, const PrototypeSet& protos,
                                const PatchGraph& graph, double tau, double lambda,
                                std::vector<double>* grad = nullptr, int n_type = kNumTypes,
                                int reserve_offset = 0) {
  if (lambda < 0.0) throw std::invalid_argument("total_loss: lambda must be >= 0");
  LossBreakdown out;
  out.lambda = lambda;
  std::vector<double> g2;
  out.bcr = bcr(batch, protos, tau, grad, reserve_offset);
  out.guidance =
      guidance_loss(batch, protos, graph, n_type, grad ? &g2 : nullptr, reserve_offset);
  out.total = out.bcr + lambda * out.guidance;
  if (grad)
    for (size_t c = 0; c < grad->size(); ++c) (*grad)[c] += lambda * g2[c];
  return out;
}

// Linear ramp of the guidance weight: 0 at the first epoch, lambda_max at
// the last.
inline double lambda_schedule(int epoch, int total_epochs, double lambda_max) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs)
    throw std::invalid_argument("lambda_schedule: epoch out of range");
  if (total_epochs == 1) return lambda_max;
  return lambda_max * static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
}

// Cross-entropy over prototype-similarity logits; the classification
// baseline objective (shares the prototype geometry, no extra parameters).
inline double ce_prototype_loss(const EmbeddingBatch& batch, const PrototypeSet& protos,
                                double tau, int n_classes, int reserve_offset,
                                std::vector<double>* grad = nullptr) {
  if (n_classes + reserve_offset > protos.count)
    throw std::invalid_argument("ce_prototype_loss: class block exceeds prototype count");
  if (grad) grad->assign(batch.z.size(), 0.0);
  double total = 0.0;
  std::vector<double> q(n_classes);
  for (int i = 0; i < batch.n; ++i) {
    const double nz = norm(batch.row(i));
    for (int k = 0; k < n_classes; ++k) {
      const auto p = protos.row(k + reserve_offset);
      q[k] = dot(batch.row(i), p) / (nz * norm(p));
    }
    const int y = batch.labels[i];
    if (y < 0 || y >= n_classes) throw std::invalid_argument("ce_prototype_loss: bad label");
    total += -q[y] / tau + detail::lse_over_tau(q, tau);
    if (grad) {
      double m = -std::numeric_limits<double>::infinity();
      for (double v : q) m = std::max(m, v);
      double den = 0.0;
      for (double v : q) den += std::exp((v - m) / tau);
      auto gi = detail::grad_row(grad, batch, i);
      for (int k = 0; k < n_classes; ++k) {
        const double w = std::exp((q[k] - m) / tau) / den;
        const double coeff = (w - (k == y ? 1.0 : 0.0)) / tau;
        const auto p = protos.row(k + reserve_offset);
        detail::add_sim_grad(coeff, batch.row(i), p, q[k], nz, norm(p), gi);
      }
    }
  }
  return total;
}

}  // namespace seeable
