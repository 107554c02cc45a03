#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "greater/linalg.hpp"
#include "greater/rng.hpp"
#include "greater/text.hpp"

namespace greater {

// Per-position embedding rows (T x d) and encoder states (T x h).
using EmbeddingSeq = std::vector<Vec>;
using HiddenStates = std::vector<Vec>;

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  double learning_rate = 0.1;
  double label_smoothing = 0.1;  // alpha
};

struct LabelDistribution {
  std::array<double, 2> p{0.5, 0.5};  // p[0] = P(MGT), p[1] = P(HWT)

  double prob(Label l) const { return p[static_cast<int>(l)]; }
};

// Mean-pooled tanh encoder over tied token embeddings with a 2-way softmax
// head:  h_t = tanh(W e_t + b),  u = C * mean_t(h_t) + c0,  p = softmax(u).
// The embedding table doubles as the language-modeling head (tied weights).
struct ClassifierModel {
  ModelConfig cfg;
  Mat embed;   // |V| x d
  Mat enc_w;   // h x d
  Vec enc_b;   // h
  Mat cls_w;   // 2 x h
  Vec cls_b;   // 2

  std::size_t vocab_size() const { return embed.rows; }

  static ClassifierModel init(std::size_t vocab_size, const ModelConfig& cfg, Rng& rng) {
    if (vocab_size == 0 || cfg.embed_dim == 0 || cfg.hidden_dim == 0)
      throw Error(Errc::InvalidParameter, "model dimensions must be positive");
    if (cfg.label_smoothing < 0.0 || cfg.label_smoothing >= 1.0)
      throw Error(Errc::InvalidParameter, "label_smoothing must lie in [0, 1)");
    ClassifierModel m;
    m.cfg = cfg;
    m.embed = Mat(vocab_size, cfg.embed_dim);
    m.enc_w = Mat(cfg.hidden_dim, cfg.embed_dim);
    m.enc_b = Vec(cfg.hidden_dim, 0.0);
    m.cls_w = Mat(2, cfg.hidden_dim);
    m.cls_b = Vec(2, 0.0);
    fill_uniform(m.embed, rng, 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim)));
    fill_uniform(m.enc_w, rng, 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim)));
    fill_uniform(m.cls_w, rng, 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim)));
    return m;
  }

  bool finite() const {
    return all_finite(embed.data) && all_finite(enc_w.data) && all_finite(enc_b) &&
           all_finite(cls_w.data) && all_finite(cls_b);
  }
};

inline EmbeddingSeq embed(const Document& doc, const ClassifierModel& m) {
  if (doc.tokens.empty()) throw Error(Errc::EmptyText, "document has no tokens");
  EmbeddingSeq e;
  e.reserve(doc.tokens.size());
  for (TokenId id : doc.tokens) {
    if (id >= m.vocab_size()) throw Error(Errc::IdOutOfRange, "token id exceeds vocabulary");
    const auto row = m.embed.row(id);
    e.emplace_back(row.begin(), row.end());
  }
  return e;
}

struct ForwardResult {
  HiddenStates hidden;  // T x h
  Vec pooled;           // h
  Vec logits;           // 2
  LabelDistribution dist;
};

inline ForwardResult forward_from_embeddings(const EmbeddingSeq& e, const ClassifierModel& m) {
  if (e.empty()) throw Error(Errc::EmptyText, "empty embedding sequence");
  ForwardResult r;
  r.hidden.reserve(e.size());
  r.pooled.assign(m.cfg.hidden_dim, 0.0);
  for (const Vec& et : e) {
    if (et.size() != m.cfg.embed_dim)
      throw Error(Errc::WidthMismatch, "embedding width does not match model");
    Vec z = matvec(m.enc_w, et);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = std::tanh(z[j] + m.enc_b[j]);
    axpy(1.0, z, r.pooled);
    r.hidden.push_back(std::move(z));
  }
  const double inv_t = 1.0 / static_cast<double>(e.size());
  for (double& x : r.pooled) x *= inv_t;
  r.logits = matvec(m.cls_w, r.pooled);
  for (std::size_t j = 0; j < 2; ++j) r.logits[j] += m.cls_b[j];
  Vec p = softmax(r.logits);
  r.dist.p = {p[0], p[1]};
  return r;
}

inline ForwardResult forward(const Document& doc, const ClassifierModel& m) {
  return forward_from_embeddings(embed(doc, m), m);
}

// Projects the (possibly perturbed) embedding at position t back onto the
// vocabulary through the tied embedding table: softmax over embed_table * e_t.
inline Vec lm_project(const EmbeddingSeq& e, const ClassifierModel& m, std::size_t t) {
  if (t >= e.size()) throw Error(Errc::PositionOutOfRange, "lm_project position");
  if (e[t].size() != m.cfg.embed_dim)
    throw Error(Errc::WidthMismatch, "embedding width does not match model");
  Vec logits = matvec(m.embed, e[t]);
  return softmax(logits);
}

// Label-smoothed target distribution: the true class keeps 1 - alpha/2.
inline std::array<double, 2> smoothed_target(Label label, double alpha) {
  std::array<double, 2> q{alpha / 2.0, alpha / 2.0};
  q[static_cast<int>(label)] = 1.0 - alpha / 2.0;
  return q;
}

// Cross-entropy against an arbitrary 2-class target, probabilities clamped at
// 1e-12 before the log.
inline double cross_entropy(const LabelDistribution& dist, const std::array<double, 2>& target) {
  double loss = 0.0;
  for (int j = 0; j < 2; ++j) {
    if (target[j] > 0.0) loss -= target[j] * std::log(std::max(dist.p[j], 1e-12));
  }
  return loss;
}

struct ParamGrads {
  Mat d_embed;
  Mat d_enc_w;
  Vec d_enc_b;
  Mat d_cls_w;
  Vec d_cls_b;

  explicit ParamGrads(const ClassifierModel& m)
      : d_embed(m.embed.rows, m.embed.cols),
        d_enc_w(m.enc_w.rows, m.enc_w.cols),
        d_enc_b(m.enc_b.size(), 0.0),
        d_cls_w(m.cls_w.rows, m.cls_w.cols),
        d_cls_b(m.cls_b.size(), 0.0) {}
};

namespace detail {

// Shared backward pass. Given the forward result for one sequence and the
// gradient of the loss w.r.t. the two logits, accumulates parameter gradients
// (scaled by `scale`) and/or per-position input gradients dL/de_t.
//
//   dL/pooled = C^T dlogits
//   dL/h_t    = dL/pooled / T
//   dL/z_t    = dL/h_t * (1 - h_t^2)        (tanh')
//   dL/e_t    = W^T dL/z_t
//   dL/W     += sum_t dL/z_t e_t^T,  dL/b += sum_t dL/z_t
//   dL/C     += dlogits pooled^T,    dL/c0 += dlogits
inline void backprop_logits(const EmbeddingSeq& e, const ForwardResult& fwd,
                            const std::array<double, 2>& dlogits, const ClassifierModel& m,
                            const std::vector<TokenId>* tokens, double scale, ParamGrads* grads,
                            std::vector<Vec>* d_inputs) {
  const std::size_t t_len = e.size();
  const Vec dl{scale * dlogits[0], scale * dlogits[1]};
  if (grads) {
    add_outer(grads->d_cls_w, dl, fwd.pooled, 1.0);
    for (std::size_t j = 0; j < 2; ++j) grads->d_cls_b[j] += dl[j];
  }
  Vec d_pooled = mat_t_vec(m.cls_w, dl);
  const double inv_t = 1.0 / static_cast<double>(t_len);
  if (d_inputs) d_inputs->assign(t_len, Vec(m.cfg.embed_dim, 0.0));
  Vec dz(m.cfg.hidden_dim);
  for (std::size_t t = 0; t < t_len; ++t) {
    const Vec& h = fwd.hidden[t];
    for (std::size_t j = 0; j < m.cfg.hidden_dim; ++j)
      dz[j] = d_pooled[j] * inv_t * (1.0 - h[j] * h[j]);
    if (grads) {
      add_outer(grads->d_enc_w, dz, e[t], 1.0);
      axpy(1.0, dz, grads->d_enc_b);
      if (tokens) axpy(1.0, mat_t_vec(m.enc_w, dz), grads->d_embed.row((*tokens)[t]));
    }
    if (d_inputs) (*d_inputs)[t] = mat_t_vec(m.enc_w, dz);
  }
}

}  // namespace detail

// One SGD step on the mean label-smoothed cross-entropy over the batch.
// Returns the pre-step loss.
inline double train_step(ClassifierModel& m, const std::vector<const Document*>& batch) {
  if (batch.empty()) throw Error(Errc::EmptyBatch, "train_step: empty batch");
  ParamGrads grads(m);
  double loss = 0.0;
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  for (const Document* doc : batch) {
    const EmbeddingSeq e = embed(*doc, m);
    const ForwardResult fwd = forward_from_embeddings(e, m);
    const auto target = smoothed_target(doc->label, m.cfg.label_smoothing);
    loss += cross_entropy(fwd.dist, target) * inv_m;
    // d(ce)/d(logit_j) = p_j - q_j for softmax + cross-entropy
    const std::array<double, 2> dlogits{fwd.dist.p[0] - target[0], fwd.dist.p[1] - target[1]};
    detail::backprop_logits(e, fwd, dlogits, m, &doc->tokens, inv_m, &grads, nullptr);
  }
  const double lr = m.cfg.learning_rate;
  axpy(-lr, grads.d_embed.data, m.embed.data);
  axpy(-lr, grads.d_enc_w.data, m.enc_w.data);
  axpy(-lr, grads.d_enc_b, m.enc_b);
  axpy(-lr, grads.d_cls_w.data, m.cls_w.data);
  axpy(-lr, grads.d_cls_b, m.cls_b);
  if (!m.finite()) throw Error(Errc::ScoreOutOfRange, "non-finite parameter after train_step");
  return loss;
}

// Per-token importance ground truth: the L2 norm of the gradient of the plain
// (unsmoothed) cross-entropy w.r.t. each input embedding row.
inline Vec input_gradient_norms(const Document& doc, const ClassifierModel& m) {
  const EmbeddingSeq e = embed(doc, m);
  const ForwardResult fwd = forward_from_embeddings(e, m);
  const auto target = smoothed_target(doc.label, 0.0);
  const std::array<double, 2> dlogits{fwd.dist.p[0] - target[0], fwd.dist.p[1] - target[1]};
  std::vector<Vec> d_inputs;
  detail::backprop_logits(e, fwd, dlogits, m, nullptr, 1.0, nullptr, &d_inputs);
  Vec norms(e.size());
  for (std::size_t t = 0; t < e.size(); ++t) norms[t] = l2_norm(d_inputs[t]);
  return norms;
}

// KL(p || q) with q clamped at 1e-12; terms with p_i = 0 contribute zero.
inline double kl_divergence(const LabelDistribution& p, const LabelDistribution& q) {
  double kl = 0.0;
  for (int j = 0; j < 2; ++j) {
    if (p.p[j] > 0.0) kl += p.p[j] * (std::log(p.p[j]) - std::log(std::max(q.p[j], 1e-12)));
  }
  return kl;
}

// Gradient of KL(P(y|E) || P(y|E-with-delta-added-at-positions)) w.r.t. each
// delta row, returned in the order of `positions`. The reference distribution
// P(y|E) is a constant; the gradient flows through the perturbed forward pass
// only, and d/d(delta_t) equals d/d(e_t) at the perturbed point.
inline std::vector<Vec> kl_gradient_wrt_delta(const EmbeddingSeq& e,
                                              const std::vector<std::size_t>& positions,
                                              const std::vector<Vec>& delta,
                                              const ClassifierModel& m) {
  if (positions.empty()) throw Error(Errc::EmptyPositionSet, "kl_gradient_wrt_delta");
  if (positions.size() != delta.size())
    throw Error(Errc::LengthMismatch, "positions and delta rows differ");
  EmbeddingSeq pert = e;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= e.size())
      throw Error(Errc::PositionOutOfRange, "kl_gradient_wrt_delta position");
    if (delta[i].size() != m.cfg.embed_dim)
      throw Error(Errc::WidthMismatch, "delta width does not match model");
    axpy(1.0, delta[i], pert[positions[i]]);
  }
  const LabelDistribution p_ref = forward_from_embeddings(e, m).dist;
  const ForwardResult fwd = forward_from_embeddings(pert, m);
  // d KL / d logit_j of the perturbed pass = q_j - p_j
  const std::array<double, 2> dlogits{fwd.dist.p[0] - p_ref.p[0], fwd.dist.p[1] - p_ref.p[1]};
  std::vector<Vec> d_inputs;
  detail::backprop_logits(pert, fwd, dlogits, m, nullptr, 1.0, nullptr, &d_inputs);
  std::vector<Vec> out;
  out.reserve(positions.size());
  for (std::size_t pos : positions) out.push_back(d_inputs[pos]);
  return out;
}

inline double accuracy(const ClassifierModel& m, const std::vector<Document>& docs) {
  if (docs.empty()) throw Error(Errc::EmptyBatch, "accuracy: no documents");
  std::size_t correct = 0;
  for (const Document& d : docs) {
    const LabelDistribution dist = forward(d, m).dist;
    const Label pred = dist.p[0] >= 0.5 ? Label::Mgt : Label::Hwt;
    if (pred == d.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(docs.size());
}

}  // namespace greater
