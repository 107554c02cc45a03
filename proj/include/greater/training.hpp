#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "greater/adversary.hpp"
#include "greater/detector.hpp"
#include "greater/model.hpp"
#include "greater/rng.hpp"
#include "greater/text.hpp"

namespace greater {

struct TrainingConfig {
  std::size_t epochs = 6;            // N
  std::size_t batch_size = 50;       // M
  double lambda = 0.05;              // mix of guidance vs regression in L_A
  double attack_strength = 1.0;      // scales the effective budget Z_eff
  double adversarial_fraction = 0.2; // share of MGT rows attacked per batch
  double budget_fraction = 0.3;      // Z = round(budget_fraction * T)
  double holdout_fraction = 0.2;
  std::size_t probe_size = 100;      // held-out MGT docs probed per epoch
  std::uint64_t seed = 1;
  PerturbationConfig attack;         // budget is overwritten per document

  void validate() const {
    if (epochs < 1) throw Error(Errc::InvalidParameter, "epochs must be >= 1");
    if (batch_size < 1) throw Error(Errc::InvalidParameter, "batch_size must be >= 1");
    if (lambda < 0.0 || lambda > 1.0) throw Error(Errc::LambdaOutOfRange, "lambda in [0,1]");
    if (attack_strength < 0.0 || attack_strength > 1.0)
      throw Error(Errc::InvalidParameter, "attack_strength must lie in [0, 1]");
    if (!(adversarial_fraction > 0.0) || adversarial_fraction > 1.0)
      throw Error(Errc::InvalidParameter, "adversarial_fraction must lie in (0, 1]");
    if (!(budget_fraction > 0.0) || budget_fraction > 1.0)
      throw Error(Errc::InvalidParameter, "budget_fraction must lie in (0, 1]");
    if (!(holdout_fraction > 0.0) || holdout_fraction >= 1.0)
      throw Error(Errc::InvalidParameter, "holdout_fraction must lie in (0, 1)");
    if (probe_size < 1) throw Error(Errc::InvalidParameter, "probe_size must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double clean_acc = 0.0;      // held-out accuracy, both classes
  double asr = 0.0;            // probe ASR vs the current detector, percent
  double mean_queries = 0.0;   // mean search+prune queries over probe attacks
  double detector_loss = 0.0;  // L_D, epoch mean
  double adversary_loss = 0.0; // L_A, epoch mean
};

struct TrainingReport {
  std::vector<EpochRecord> records;
};

struct TrainingResult {
  ClassifierModel detector;
  ScoringNetwork scorer;
  TrainingReport report;
};

// Adversarial examples frozen against an initial detector, keyed by document
// id (the static-baseline ablation's input).
using FrozenAdversarialSet = std::unordered_map<std::string, AttackTrace>;

namespace detail {

struct Split {
  std::vector<const Document*> train;
  std::vector<const Document*> heldout;
  std::vector<const Document*> probe;  // MGT subset of heldout
};

inline Split split_dataset(const std::vector<Document>& docs, const TrainingConfig& cfg) {
  bool has_mgt = false, has_hwt = false;
  for (const Document& d : docs) (d.label == Label::Mgt ? has_mgt : has_hwt) = true;
  if (!has_mgt || !has_hwt)
    throw Error(Errc::SingleClassDataset, "training data must contain both labels");
  std::vector<const Document*> all;
  all.reserve(docs.size());
  for (const Document& d : docs) all.push_back(&d);
  Rng rng(derive_seed(cfg.seed, "split"));
  rng.shuffle(all);
  std::size_t n_held = static_cast<std::size_t>(
      std::floor(static_cast<double>(docs.size()) * cfg.holdout_fraction + 0.5));
  n_held = std::min(std::max<std::size_t>(n_held, 1), docs.size() - 1);
  Split s;
  s.heldout.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_held));
  s.train.assign(all.begin() + static_cast<std::ptrdiff_t>(n_held), all.end());
  for (const Document* d : s.heldout) {
    if (d->label == Label::Mgt && s.probe.size() < cfg.probe_size) s.probe.push_back(d);
  }
  return s;
}

inline std::size_t effective_budget(const TrainingConfig& cfg, std::size_t seq_len) {
  const double z = cfg.attack_strength * cfg.budget_fraction * static_cast<double>(seq_len);
  const auto rounded = static_cast<std::size_t>(std::floor(z + 0.5));
  return std::min(rounded, seq_len);
}

inline double accuracy_over(const ClassifierModel& m, const std::vector<const Document*>& docs) {
  if (docs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Document* d : docs) {
    const Label pred = verdict_label(forward(*d, m).dist.p[0]);
    if (pred == d->label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(docs.size());
}

// Epoch-end robustness probe: attack the fixed held-out MGT set at full
// budget against the current detector. Per-document seeds do not involve the
// epoch, so successive epochs face exactly the same attack randomness.
inline void run_probe(const ClassifierModel& detector, const ClassifierModel& surrogate,
                      const ScoringNetwork& scorer, const Vocabulary& vocab,
                      const TrainingConfig& cfg, const std::vector<const Document*>& probe,
                      EpochRecord& rec) {
  LocalDetectorOracle oracle(detector, vocab);
  std::size_t attempted = 0, wins = 0;
  double queries = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const Document& doc = *probe[i];
    PerturbationConfig pc = cfg.attack;
    pc.budget = std::max<std::size_t>(
        1, std::min(doc.tokens.size(),
                    static_cast<std::size_t>(
                        std::floor(cfg.budget_fraction * static_cast<double>(doc.tokens.size()) +
                                   0.5))));
    try {
      const AttackTrace tr =
          attack(doc, oracle, pc, surrogate, scorer, vocab, derive_seed(cfg.seed, "probe", i));
      ++attempted;
      wins += tr.success ? 1 : 0;
      queries += static_cast<double>(tr.total_queries());
    } catch (const Error& e) {
      if (e.code() != Errc::NotDetectedAsMgt) throw;
      // detector already treats this probe document as human text; not part
      // of the ASR denominator
    }
  }
  rec.asr = attempted ? 100.0 * static_cast<double>(wins) / static_cast<double>(attempted) : 0.0;
  rec.mean_queries = attempted ? queries / static_cast<double>(attempted) : 0.0;
}

// One pass of Algorithm-1-style co-training. When `frozen` is non-null the
// adversarial examples come from that set instead of fresh attacks (the
// static-baseline ablation); everything else is identical.
inline TrainingResult run_training(const std::vector<Document>& docs,
                                   const ClassifierModel& surrogate, ClassifierModel detector,
                                   ScoringNetwork scorer, const TrainingConfig& cfg,
                                   const Vocabulary& vocab,
                                   const FrozenAdversarialSet* frozen) {
  cfg.validate();
  const Split split = split_dataset(docs, cfg);
  TrainingResult result{std::move(detector), std::move(scorer), {}};

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<const Document*> order = split.train;
    Rng order_rng(derive_seed(cfg.seed, "order", epoch));
    order_rng.shuffle(order);

    double sum_ld = 0.0, sum_la = 0.0;
    std::size_t n_ld = 0, n_la = 0;
    for (std::size_t start = 0, batch_idx = 0; start < order.size();
         start += cfg.batch_size, ++batch_idx) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Document*> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      // the adversary only ever sees the detector as it stood when the step
      // began
      const ClassifierModel snapshot = result.detector;
      LocalDetectorOracle oracle(snapshot, vocab);

      std::vector<std::size_t> mgt_rows;
      for (std::size_t i = 0; i < batch.size(); ++i)
        if (batch[i]->label == Label::Mgt) mgt_rows.push_back(i);
      const auto n_attack = std::min<std::size_t>(
          mgt_rows.size(),
          static_cast<std::size_t>(std::floor(
              cfg.adversarial_fraction * static_cast<double>(mgt_rows.size()) + 0.5)));
      Rng sel_rng(derive_seed(cfg.seed, "select", epoch, batch_idx));
      sel_rng.shuffle(mgt_rows);
      mgt_rows.resize(n_attack);

      // fresh (or frozen) adversarial examples for the selected rows
      struct AttackedRow {
        std::size_t row;
        AttackTrace trace;
      };
      std::vector<AttackedRow> attacked;
      for (std::size_t k = 0; k < mgt_rows.size(); ++k) {
        const std::size_t row = mgt_rows[k];
        const Document& doc = *batch[row];
        const std::size_t z_eff = effective_budget(cfg, doc.tokens.size());
        if (z_eff == 0) continue;  // attack_strength 0 degenerates to plain training
        if (frozen) {
          const auto it = frozen->find(doc.id);
          if (it != frozen->end()) attacked.push_back({row, it->second});
          continue;
        }
        PerturbationConfig pc = cfg.attack;
        pc.budget = z_eff;
        try {
          attacked.push_back(
              {row, attack(doc, oracle, pc, surrogate, result.scorer, vocab,
                           derive_seed(cfg.seed, "train-attack", epoch, batch_idx, row))});
        } catch (const Error& e) {
          if (e.code() != Errc::NotDetectedAsMgt) throw;
        }
      }

      // scorer step (adversary's turn); the detector stays frozen here
      if (!attacked.empty()) {
        std::vector<HiddenStates> hidden(attacked.size());
        std::vector<Vec> targets(attacked.size());
        std::vector<ScorerExample> examples(attacked.size());
        for (std::size_t k = 0; k < attacked.size(); ++k) {
          const Document& doc = *batch[attacked[k].row];
          hidden[k] = forward(doc, surrogate).hidden;
          targets[k] = input_gradient_norms(doc, surrogate);
          const LabelDistribution adv_dist =
              forward(attacked[k].trace.adversarial, snapshot).dist;
          ScorerExample& ex = examples[k];
          ex.hidden = &hidden[k];
          ex.targets = &targets[k];
          ex.attacked = true;
          ex.success = verdict_label(adv_dist.p[0]) != Label::Mgt;
          ex.substituted = attacked[k].trace.perturbed_positions;
          ex.adv_nll = -std::log(std::max(adv_dist.prob(flip(doc.label)), 1e-12));
        }
        const ScorerUpdate u = update_scorer(result.scorer, examples, cfg.lambda);
        sum_la += u.loss_total;
        ++n_la;
      }

      // detector step on clean + adversarial rows
      std::vector<DetectorExample> det_batch(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) det_batch[i] = {batch[i], nullptr};
      for (const AttackedRow& ar : attacked)
        det_batch[ar.row].x_tilde = &ar.trace.adversarial;
      sum_ld += update_detector(result.detector, det_batch);
      ++n_ld;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.clean_acc = accuracy_over(result.detector, split.heldout);
    rec.detector_loss = n_ld ? sum_ld / static_cast<double>(n_ld) : 0.0;
    rec.adversary_loss = n_la ? sum_la / static_cast<double>(n_la) : 0.0;
    run_probe(result.detector, surrogate, result.scorer, vocab, cfg, split.probe, rec);
    result.report.records.push_back(rec);
  }
  return result;
}

}  // namespace detail

struct BaselineConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 50;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 1;
  ModelConfig model;
};

struct BaselineResult {
  ClassifierModel model;
  double heldout_accuracy = 0.0;
  double final_loss = 0.0;
  std::size_t n_train = 0;
  std::size_t n_heldout = 0;
};

// Plain classifier training (no adversary); produces both the surrogate and
// the pre-attack target detector.
inline BaselineResult train_baseline(const std::vector<Document>& docs, const BaselineConfig& cfg,
                                     std::size_t vocab_size) {
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw Error(Errc::InvalidParameter, "epochs and batch_size must be >= 1");
  if (!(cfg.holdout_fraction > 0.0) || cfg.holdout_fraction >= 1.0)
    throw Error(Errc::InvalidParameter, "holdout_fraction must lie in (0, 1)");
  TrainingConfig split_cfg;
  split_cfg.holdout_fraction = cfg.holdout_fraction;
  split_cfg.probe_size = 1;
  split_cfg.seed = cfg.seed;
  const detail::Split split = detail::split_dataset(docs, split_cfg);
  Rng init_rng(derive_seed(cfg.seed, "baseline-init"));
  BaselineResult res;
  res.model = ClassifierModel::init(vocab_size, cfg.model, init_rng);
  res.n_train = split.train.size();
  res.n_heldout = split.heldout.size();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<const Document*> order = split.train;
    Rng order_rng(derive_seed(cfg.seed, "baseline-order", epoch));
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::vector<const Document*> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
      res.final_loss = train_step(res.model, batch);
    }
  }
  res.heldout_accuracy = detail::accuracy_over(res.model, split.heldout);
  return res;
}

// Synchronous co-training: every step attacks the step-start detector with
// the current adversary, then updates scorer and detector in that order.
inline TrainingResult run_adversarial_training(const std::vector<Document>& docs,
                                               const ClassifierModel& surrogate,
                                               ClassifierModel detector, ScoringNetwork scorer,
                                               const TrainingConfig& cfg,
                                               const Vocabulary& vocab) {
  return detail::run_training(docs, surrogate, std::move(detector), std::move(scorer), cfg, vocab,
                              nullptr);
}

// Attacks every MGT training document once against the given (initial)
// detector; the result feeds run_static_baseline.
inline FrozenAdversarialSet pregenerate_static_set(const std::vector<Document>& docs,
                                                   const ClassifierModel& initial_detector,
                                                   const ClassifierModel& surrogate,
                                                   const ScoringNetwork& scorer,
                                                   const TrainingConfig& cfg,
                                                   const Vocabulary& vocab) {
  cfg.validate();
  FrozenAdversarialSet out;
  LocalDetectorOracle oracle(initial_detector, vocab);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Document& doc = docs[i];
    if (doc.label != Label::Mgt) continue;
    const std::size_t z_eff = detail::effective_budget(cfg, doc.tokens.size());
    if (z_eff == 0) continue;
    PerturbationConfig pc = cfg.attack;
    pc.budget = z_eff;
    try {
      out.emplace(doc.id, attack(doc, oracle, pc, surrogate, scorer, vocab,
                                 derive_seed(cfg.seed, "static", i)));
    } catch (const Error& e) {
      if (e.code() != Errc::NotDetectedAsMgt) throw;
    }
  }
  return out;
}

// Ablation control: the same loop, but adversarial examples come from the
// frozen set and are never regenerated. An empty frozen set degenerates to
// plain classifier training.
inline TrainingResult run_static_baseline(const std::vector<Document>& docs,
                                          const ClassifierModel& surrogate,
                                          ClassifierModel detector, ScoringNetwork scorer,
                                          const TrainingConfig& cfg, const Vocabulary& vocab,
                                          const FrozenAdversarialSet& frozen) {
  return detail::run_training(docs, surrogate, std::move(detector), std::move(scorer), cfg, vocab,
                              &frozen);
}

}  // namespace greater
