#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "greater/model.hpp"
#include "greater/text.hpp"

namespace greater {

struct Verdict {
  Label label = Label::Mgt;
  double score = 0.5;  // P(MGT)
};

// Ties (score exactly 0.5) go to MGT so an uninformative detector flags
// machine text rather than waving it through.
inline Label verdict_label(double score_mgt) {
  return score_mgt >= 0.5 ? Label::Mgt : Label::Hwt;
}

inline Verdict predict(const std::string& text, const ClassifierModel& m, const Vocabulary& vocab) {
  Document doc = make_document("query", text, Label::Mgt, vocab);
  const double score = forward(doc, m).dist.p[0];
  return Verdict{verdict_label(score), score};
}

// Black-box detector interface. classify() is the metered entry point — every
// call counts against the attacker's query budget. probe() runs the same
// classification without touching the meter; attacks use it once to check the
// setup precondition (spec'd as a free setup query).
class DetectorOracle {
 public:
  virtual ~DetectorOracle() = default;

  Verdict classify(const std::string& text) {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return do_classify(text);
  }

  Verdict probe(const std::string& text) { return do_classify(text); }

  std::uint64_t query_count() const { return queries_.load(std::memory_order_relaxed); }

 protected:
  virtual Verdict do_classify(const std::string& text) = 0;

 private:
  std::atomic<std::uint64_t> queries_{0};
};

class LocalDetectorOracle : public DetectorOracle {
 public:
  LocalDetectorOracle(const ClassifierModel& model, const Vocabulary& vocab)
      : model_(&model), vocab_(&vocab) {}

 protected:
  Verdict do_classify(const std::string& text) override { return predict(text, *model_, *vocab_); }

 private:
  const ClassifierModel* model_;
  const Vocabulary* vocab_;
};

// One detector training row: the clean document plus its adversarial
// counterpart. Rows without an adversarial version point x_tilde at x.
struct DetectorExample {
  const Document* x = nullptr;
  const Document* x_tilde = nullptr;

  const Document& adversarial() const { return *(x_tilde ? x_tilde : x); }
};

// Detector objective: mean over rows of the label-smoothed cross-entropy on
// the clean document plus the same on the adversarial one.
inline double detector_loss(const std::vector<DetectorExample>& batch, const ClassifierModel& m) {
  if (batch.empty()) throw Error(Errc::EmptyBatch, "detector_loss: empty batch");
  double loss = 0.0;
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  for (const DetectorExample& ex : batch) {
    const auto target = smoothed_target(ex.x->label, m.cfg.label_smoothing);
    loss += cross_entropy(forward(*ex.x, m).dist, target) * inv_m;
    loss += cross_entropy(forward(ex.adversarial(), m).dist, target) * inv_m;
  }
  return loss;
}

// One SGD step on detector_loss. Returns the pre-step loss.
inline double update_detector(ClassifierModel& m, const std::vector<DetectorExample>& batch) {
  if (batch.empty()) throw Error(Errc::EmptyBatch, "update_detector: empty batch");
  ParamGrads grads(m);
  double loss = 0.0;
  const double inv_m = 1.0 / static_cast<double>(batch.size());
  for (const DetectorExample& ex : batch) {
    for (const Document* doc : {ex.x, &ex.adversarial()}) {
      const EmbeddingSeq e = embed(*doc, m);
      const ForwardResult fwd = forward_from_embeddings(e, m);
      const auto target = smoothed_target(ex.x->label, m.cfg.label_smoothing);
      loss += cross_entropy(fwd.dist, target) * inv_m;
      const std::array<double, 2> dlogits{fwd.dist.p[0] - target[0], fwd.dist.p[1] - target[1]};
      detail::backprop_logits(e, fwd, dlogits, m, &doc->tokens, inv_m, &grads, nullptr);
    }
  }
  const double lr = m.cfg.learning_rate;
  axpy(-lr, grads.d_embed.data, m.embed.data);
  axpy(-lr, grads.d_enc_w.data, m.enc_w.data);
  axpy(-lr, grads.d_enc_b, m.enc_b);
  axpy(-lr, grads.d_cls_w.data, m.cls_w.data);
  axpy(-lr, grads.d_cls_b, m.cls_b);
  if (!m.finite()) throw Error(Errc::ScoreOutOfRange, "non-finite parameter after update_detector");
  return loss;
}

}  // namespace greater
