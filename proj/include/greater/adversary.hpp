#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "greater/detector.hpp"
#include "greater/model.hpp"
#include "greater/rng.hpp"
#include "greater/text.hpp"

namespace greater {

inline Label flip(Label l) { return l == Label::Mgt ? Label::Hwt : Label::Mgt; }

// Token importance scorer: a linear head over the surrogate's hidden states,
// s_t = w . h_t + b, trained to regress the surrogate's input-gradient norms
// and pushed by adversarial guidance during co-training.
struct ScoringNetwork {
  Vec w;
  double b = 0.0;
  double learning_rate = 0.05;

  static ScoringNetwork init(std::size_t hidden_dim, Rng& rng, double lr = 0.05) {
    if (hidden_dim == 0) throw Error(Errc::InvalidParameter, "scorer hidden_dim must be positive");
    ScoringNetwork s;
    s.w.resize(hidden_dim);
    fill_uniform(s.w, rng, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
    s.b = 0.0;
    s.learning_rate = lr;
    return s;
  }

  double score(const Vec& h) const { return dot(w, h) + b; }

  bool finite() const { return all_finite(w) && std::isfinite(b); }
};

inline Vec score_tokens(const HiddenStates& hidden, const ScoringNetwork& net) {
  if (hidden.empty()) throw Error(Errc::EmptyText, "score_tokens: empty hidden states");
  Vec s;
  s.reserve(hidden.size());
  for (const Vec& h : hidden) s.push_back(net.score(h));
  return s;
}

// Indices of the k highest-scoring positions, in descending score order;
// ties break toward the earlier position. k is clamped to the sequence length.
inline std::vector<std::size_t> select_important(const Vec& scores, std::size_t k) {
  if (scores.empty()) throw Error(Errc::EmptyText, "select_important: empty scores");
  if (k == 0) throw Error(Errc::InvalidBudget, "select_important: k must be positive");
  k = std::min(k, scores.size());
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(k);
  return idx;
}

enum class AttackPolicy {
  Greater,         // importance-ordered substitution + pruning
  ScoredNoPrune,   // importance-ordered, no pruning
  RandomPrune,     // random positions + pruning
  RandomNoPrune,   // random positions, no pruning
  MaskToken,       // replace with the mask token (pruning applies)
  SynonymEmbed,    // nearest same-POS embedding neighbours, no perturbation step
};

inline std::string_view policy_name(AttackPolicy p) {
  switch (p) {
    case AttackPolicy::Greater: return "greater";
    case AttackPolicy::ScoredNoPrune: return "scored-noprune";
    case AttackPolicy::RandomPrune: return "random-prune";
    case AttackPolicy::RandomNoPrune: return "random-noprune";
    case AttackPolicy::MaskToken: return "mask";
    case AttackPolicy::SynonymEmbed: return "synonym";
  }
  return "greater";
}

inline AttackPolicy policy_from_name(std::string_view s) {
  if (s == "greater") return AttackPolicy::Greater;
  if (s == "scored-noprune") return AttackPolicy::ScoredNoPrune;
  if (s == "random-prune") return AttackPolicy::RandomPrune;
  if (s == "random-noprune") return AttackPolicy::RandomNoPrune;
  if (s == "mask") return AttackPolicy::MaskToken;
  if (s == "synonym") return AttackPolicy::SynonymEmbed;
  throw Error(Errc::ConfigError, "unknown attack policy: " + std::string(s));
}

inline bool policy_prunes(AttackPolicy p) {
  return p != AttackPolicy::ScoredNoPrune && p != AttackPolicy::RandomNoPrune;
}

struct PerturbationConfig {
  double init_scale = 0.01;    // xi: L2 norm of the initial random draw
  double step_scale = 0.3;     // epsilon: L2 norm of the gradient step
  double uniform_low = -0.5;   // bounds of the initial uniform draw
  double uniform_high = 0.5;
  std::size_t candidate_count = 50;  // m: vocabulary projection depth
  std::size_t budget = 1;            // Z: max positions visited by the search
  AttackPolicy policy = AttackPolicy::Greater;

  void validate(std::size_t seq_len) const {
    if (!(init_scale > 0.0) || !(step_scale > 0.0))
      throw Error(Errc::InvalidParameter, "perturbation scales must be positive");
    if (!(uniform_low < uniform_high))
      throw Error(Errc::InvalidParameter, "uniform bounds must satisfy low < high");
    if (candidate_count == 0) throw Error(Errc::InvalidParameter, "candidate_count must be >= 1");
    if (budget < 1 || budget > seq_len)
      throw Error(Errc::InvalidBudget, "budget must lie in [1, sequence length]");
  }
};

// Initial perturbation: a uniform draw rescaled to L2 norm init_scale exactly.
// A (vanishingly unlikely) near-zero draw is retried a bounded number of times.
inline Vec init_perturbation(const PerturbationConfig& cfg, std::size_t dim, Rng& rng) {
  if (dim == 0) throw Error(Errc::InvalidParameter, "init_perturbation: dim must be positive");
  for (int attempt = 0; attempt < 16; ++attempt) {
    Vec d(dim);
    for (double& x : d) x = rng.uniform(cfg.uniform_low, cfg.uniform_high);
    const double n = l2_norm(d);
    if (n > 1e-12) {
      const double s = cfg.init_scale / n;
      for (double& x : d) x *= s;
      return d;
    }
  }
  throw Error(Errc::DegenerateDraw, "init_perturbation drew a zero vector repeatedly");
}

// Embedding-space perturbation for the given positions: start from a small
// random draw, then step along the gradient of KL(P(y|E) || P(y|E+delta)),
// rescaled to step_scale. A zero KL gradient falls back to the scaled
// initial draw so the caller always receives a norm-step_scale direction.
inline std::vector<Vec> compute_perturbation(const EmbeddingSeq& e,
                                             const std::vector<std::size_t>& positions,
                                             const PerturbationConfig& cfg,
                                             const ClassifierModel& surrogate, Rng& rng) {
  if (positions.empty()) throw Error(Errc::EmptyPositionSet, "compute_perturbation");
  std::vector<Vec> delta0;
  delta0.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    delta0.push_back(init_perturbation(cfg, surrogate.cfg.embed_dim, rng));
  std::vector<Vec> grads = kl_gradient_wrt_delta(e, positions, delta0, surrogate);
  std::vector<Vec> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double gn = l2_norm(grads[i]);
    if (gn > 1e-12) {
      out[i] = grads[i];
      const double s = cfg.step_scale / gn;
      for (double& x : out[i]) x *= s;
    } else {
      out[i] = delta0[i];
      const double s = cfg.step_scale / cfg.init_scale;
      for (double& x : out[i]) x *= s;
    }
  }
  return out;
}

// Candidate substitutes at position t: the top-m vocabulary tokens under the
// tied-head projection of the perturbed embedding, minus the original token,
// filtered to the original token's POS tag. Order: descending probability,
// ties toward the smaller id.
inline std::vector<TokenId> generate_candidates(const EmbeddingSeq& perturbed, std::size_t t,
                                                std::size_t m_count, PosTag original_tag,
                                                TokenId original_token,
                                                const ClassifierModel& surrogate,
                                                const Vocabulary& vocab) {
  const Vec probs = lm_project(perturbed, surrogate, t);
  std::vector<TokenId> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  m_count = std::min(m_count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m_count), idx.end(),
                    [&](TokenId a, TokenId b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  idx.resize(m_count);
  std::vector<TokenId> out;
  out.reserve(m_count);
  for (TokenId id : idx) {
    if (id == original_token) continue;
    if (vocab.tag(id) != original_tag) continue;
    out.push_back(id);
  }
  return out;
}

// Candidates for the embedding-synonym policy: same-POS tokens nearest to the
// ORIGINAL token's embedding by cosine similarity (no perturbation involved).
inline std::vector<TokenId> synonym_candidates(TokenId original_token, std::size_t m_count,
                                               const ClassifierModel& surrogate,
                                               const Vocabulary& vocab) {
  const auto origin = surrogate.embed.row(original_token);
  const double on = l2_norm(origin);
  const PosTag tag = vocab.tag(original_token);
  std::vector<std::pair<double, TokenId>> sims;
  for (TokenId id = 0; id < surrogate.vocab_size(); ++id) {
    if (id == original_token || vocab.tag(id) != tag) continue;
    const auto row = surrogate.embed.row(id);
    const double rn = l2_norm(row);
    const double sim = (on > 1e-12 && rn > 1e-12) ? dot(origin, row) / (on * rn) : -1.0;
    sims.emplace_back(sim, id);
  }
  std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (sims.size() > m_count) sims.resize(m_count);
  std::vector<TokenId> out;
  out.reserve(sims.size());
  for (const auto& [sim, id] : sims) out.push_back(id);
  return out;
}

struct AttackTrace {
  Document original;
  Document adversarial;
  std::vector<std::size_t> perturbed_positions;  // in search (importance) order
  std::uint64_t queries_search = 0;
  std::uint64_t queries_prune = 0;
  bool success = false;
  AttackPolicy policy = AttackPolicy::Greater;

  std::uint64_t total_queries() const { return queries_search + queries_prune; }
};

// Greedy substitution over the given position order. Each round perturbs the
// ORIGINAL embedding at one position, projects it back to the vocabulary,
// substitutes the best admissible candidate and spends one metered query; the
// search stops at the first HWT verdict. Rounds with no admissible candidate
// are skipped for free. Throws NotDetectedAsMgt when the setup probe (which is
// not metered) does not flag the original text.
inline AttackTrace greedy_search(const Document& doc, const std::vector<std::size_t>& order,
                                 DetectorOracle& oracle, const PerturbationConfig& cfg,
                                 const ClassifierModel& surrogate, const Vocabulary& vocab,
                                 Rng& rng) {
  AttackTrace trace;
  trace.original = doc;
  trace.policy = cfg.policy;
  const Verdict setup = oracle.probe(detokenize(doc.tokens, vocab));
  if (setup.label != Label::Mgt)
    throw Error(Errc::NotDetectedAsMgt, "setup probe classified document " + doc.id + " as HWT");

  const EmbeddingSeq e = embed(doc, surrogate);
  std::vector<TokenId> working = doc.tokens;
  for (std::size_t t : order) {
    if (t >= doc.tokens.size()) throw Error(Errc::PositionOutOfRange, "search position");
    const TokenId original_token = doc.tokens[t];
    std::vector<TokenId> candidates;
    switch (cfg.policy) {
      case AttackPolicy::MaskToken: {
        if (original_token != vocab.mask_id()) candidates.push_back(vocab.mask_id());
        break;
      }
      case AttackPolicy::SynonymEmbed: {
        candidates = synonym_candidates(original_token, cfg.candidate_count, surrogate, vocab);
        break;
      }
      default: {
        const std::vector<std::size_t> pos{t};
        const std::vector<Vec> delta = compute_perturbation(e, pos, cfg, surrogate, rng);
        EmbeddingSeq perturbed = e;
        axpy(1.0, delta[0], perturbed[t]);
        candidates = generate_candidates(perturbed, t, cfg.candidate_count, vocab.tag(original_token),
                                         original_token, surrogate, vocab);
        break;
      }
    }
    if (candidates.empty()) continue;  // nothing admissible here; no query spent
    working[t] = candidates.front();
    trace.perturbed_positions.push_back(t);
    const Verdict v = oracle.classify(detokenize(working, vocab));
    ++trace.queries_search;
    if (v.label != Label::Mgt) {
      trace.success = true;
      break;
    }
  }
  trace.adversarial.id = doc.id;
  trace.adversarial.tokens = std::move(working);
  trace.adversarial.raw_text = detokenize(trace.adversarial.tokens, vocab);
  trace.adversarial.label = doc.label;
  return trace;
}

// Reverts substitutions one at a time (in search order, i.e. most important
// first) and keeps each revert only if the text stays adversarial. Every
// attempted revert costs one metered query. Failed searches pass through
// untouched.
inline AttackTrace greedy_prune(AttackTrace trace, DetectorOracle& oracle,
                                const Vocabulary& vocab) {
  if (!trace.success || trace.perturbed_positions.empty()) return trace;
  std::vector<TokenId> working = trace.adversarial.tokens;
  std::vector<std::size_t> kept;
  for (std::size_t t : trace.perturbed_positions) {
    const TokenId substituted = working[t];
    working[t] = trace.original.tokens[t];
    const Verdict v = oracle.classify(detokenize(working, vocab));
    ++trace.queries_prune;
    if (v.label == Label::Mgt) {
      working[t] = substituted;  // revert broke the attack; restore
      kept.push_back(t);
    }
  }
  trace.perturbed_positions = std::move(kept);
  trace.adversarial.tokens = std::move(working);
  trace.adversarial.raw_text = detokenize(trace.adversarial.tokens, vocab);
  return trace;
}

// Full black-box attack: score positions with the scoring network (or draw a
// random order for the random policies), run the greedy search, then prune if
// the policy calls for it. Deterministic given (seed, config, models).
inline AttackTrace attack(const Document& doc, DetectorOracle& oracle,
                          const PerturbationConfig& cfg, const ClassifierModel& surrogate,
                          const ScoringNetwork& scorer, const Vocabulary& vocab,
                          std::uint64_t seed) {
  cfg.validate(doc.tokens.size());
  Rng rng(derive_seed(seed, "attack"));
  std::vector<std::size_t> order;
  if (cfg.policy == AttackPolicy::RandomPrune || cfg.policy == AttackPolicy::RandomNoPrune) {
    order.resize(doc.tokens.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    order.resize(std::min(cfg.budget, order.size()));
  } else {
    const ForwardResult fwd = forward(doc, surrogate);
    const Vec scores = score_tokens(fwd.hidden, scorer);
    order = select_important(scores, cfg.budget);
  }
  AttackTrace trace = greedy_search(doc, order, oracle, cfg, surrogate, vocab, rng);
  if (policy_prunes(cfg.policy)) trace = greedy_prune(std::move(trace), oracle, vocab);
  return trace;
}

// ---- adversary losses ----------------------------------------------------

// Mean over documents of the per-position MSE between predicted scores and
// gradient-norm targets.
inline double importance_regression_loss(const std::vector<Vec>& scores,
                                         const std::vector<Vec>& targets) {
  if (scores.empty()) throw Error(Errc::EmptyBatch, "importance_regression_loss: empty batch");
  if (scores.size() != targets.size())
    throw Error(Errc::LengthMismatch, "scores/targets batch size mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != targets[i].size() || scores[i].empty())
      throw Error(Errc::LengthMismatch, "scores/targets length mismatch");
    double mse = 0.0;
    for (std::size_t t = 0; t < scores[i].size(); ++t) {
      const double d = scores[i][t] - targets[i][t];
      mse += d * d;
    }
    loss += mse / static_cast<double>(scores[i].size());
  }
  return loss / static_cast<double>(scores.size());
}

// Mean over attacked documents of -log P_target(flipped label | adversarial).
inline double adversarial_guidance_loss(const std::vector<LabelDistribution>& target_outputs,
                                        const std::vector<Label>& labels) {
  if (target_outputs.empty())
    throw Error(Errc::EmptyBatch, "adversarial_guidance_loss: empty batch");
  if (target_outputs.size() != labels.size())
    throw Error(Errc::LengthMismatch, "outputs/labels batch size mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < target_outputs.size(); ++i)
    loss -= std::log(std::max(target_outputs[i].prob(flip(labels[i])), 1e-12));
  return loss / static_cast<double>(target_outputs.size());
}

inline double adversary_total_loss(double l_adv, double l_imp, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw Error(Errc::LambdaOutOfRange, "lambda must lie in [0, 1]");
  return lambda * l_adv + (1.0 - lambda) * l_imp;
}

// One scorer-update example. `hidden`/`targets` come from the surrogate on the
// ORIGINAL document; the adversarial fields are filled for attacked rows.
struct ScorerExample {
  const HiddenStates* hidden = nullptr;  // T x h
  const Vec* targets = nullptr;          // s* per position
  bool attacked = false;
  bool success = false;
  std::vector<std::size_t> substituted;  // positions substituted by the attack
  double adv_nll = 0.0;                  // -log P_target(flipped | adversarial)
};

struct ScorerUpdate {
  double loss_imp = 0.0;
  double loss_adv = 0.0;
  double loss_total = 0.0;      // lambda * loss_adv + (1 - lambda) * loss_imp
  double surrogate_value = 0.0; // the differentiable objective actually descended
};

namespace detail {

// The guidance term itself is a discrete search outcome, so its gradient uses
// a REINFORCE-style surrogate: for each successful attack, the scores of the
// substituted positions are pushed up with weight adv_nll (descending
// -mean(score) * adv_nll). The reported loss_adv stays the literal guidance
// value; surrogate_value is what the gradient belongs to.
inline ScorerUpdate scorer_objective(const ScoringNetwork& net,
                                     const std::vector<ScorerExample>& batch, double lambda,
                                     Vec* grad_w, double* grad_b) {
  if (batch.empty()) throw Error(Errc::EmptyBatch, "scorer update: empty batch");
  if (lambda < 0.0 || lambda > 1.0)
    throw Error(Errc::LambdaOutOfRange, "lambda must lie in [0, 1]");
  if (grad_w) grad_w->assign(net.w.size(), 0.0);
  if (grad_b) *grad_b = 0.0;
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  double l_imp = 0.0, l_adv = 0.0, reinforce = 0.0;
  std::size_t attacked = 0;
  for (const ScorerExample& ex : batch) {
    if (!ex.hidden || !ex.targets || ex.hidden->size() != ex.targets->size() ||
        ex.hidden->empty())
      throw Error(Errc::LengthMismatch, "scorer example hidden/target mismatch");
    const std::size_t seq = ex.hidden->size();
    const double inv_t = 1.0 / static_cast<double>(seq);
    for (std::size_t t = 0; t < seq; ++t) {
      const double s = net.score((*ex.hidden)[t]);
      const double d = s - (*ex.targets)[t];
      l_imp += d * d * inv_t * inv_m;
      if (grad_w && grad_b) {
        const double coeff = (1.0 - lambda) * 2.0 * d * inv_t * inv_m;
        axpy(coeff, (*ex.hidden)[t], *grad_w);
        *grad_b += coeff;
      }
    }
    if (ex.attacked) {
      ++attacked;
      l_adv += ex.adv_nll;
      if (ex.success && !ex.substituted.empty()) {
        const double inv_s = 1.0 / static_cast<double>(ex.substituted.size());
        double mean_score = 0.0;
        for (std::size_t t : ex.substituted) {
          if (t >= seq) throw Error(Errc::PositionOutOfRange, "substituted position");
          mean_score += net.score((*ex.hidden)[t]) * inv_s;
        }
        reinforce -= ex.adv_nll * mean_score * inv_m;
        if (grad_w && grad_b) {
          const double coeff = -lambda * ex.adv_nll * inv_s * inv_m;
          for (std::size_t t : ex.substituted) {
            axpy(coeff, (*ex.hidden)[t], *grad_w);
            *grad_b += coeff;
          }
        }
      }
    }
  }
  l_adv = attacked ? l_adv / static_cast<double>(attacked) : 0.0;
  ScorerUpdate u;
  u.loss_imp = l_imp;
  u.loss_adv = l_adv;
  u.loss_total = adversary_total_loss(l_adv, l_imp, lambda);
  u.surrogate_value = lambda * reinforce + (1.0 - lambda) * l_imp;
  return u;
}

}  // namespace detail

inline ScorerUpdate scorer_objective_value(const ScoringNetwork& net,
                                           const std::vector<ScorerExample>& batch,
                                           double lambda) {
  return detail::scorer_objective(net, batch, lambda, nullptr, nullptr);
}

// One SGD step on the combined adversary objective. Returns the pre-step
// losses.
inline ScorerUpdate update_scorer(ScoringNetwork& net, const std::vector<ScorerExample>& batch,
                                  double lambda) {
  Vec grad_w;
  double grad_b = 0.0;
  const ScorerUpdate u = detail::scorer_objective(net, batch, lambda, &grad_w, &grad_b);
  axpy(-net.learning_rate, grad_w, net.w);
  net.b -= net.learning_rate * grad_b;
  if (!net.finite()) throw Error(Errc::ScoreOutOfRange, "non-finite scorer after update");
  return u;
}

}  // namespace greater
