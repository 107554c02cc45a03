#include "greater/detector.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"

namespace {

using namespace greater;
using testutil::central_diff;
using testutil::doc_from_ids;
using testutil::rel_err;
using testutil::small_model;
using testutil::small_vocab;

TEST(VerdictTest, ThresholdTiesGoToMgt) {
  EXPECT_EQ(verdict_label(0.51), Label::Mgt);
  EXPECT_EQ(verdict_label(0.5), Label::Mgt);
  EXPECT_EQ(verdict_label(0.49), Label::Hwt);
  EXPECT_EQ(verdict_label(0.0), Label::Hwt);
  EXPECT_EQ(verdict_label(1.0), Label::Mgt);
}

TEST(PredictTest, ScoreIsProbabilityOfMgt) {
  const Vocabulary v = small_vocab();
  const ClassifierModel m = small_model(v.size(), 21);
  const Verdict got = predict("cat ran dog", m, v);
  const Document d = make_document("q", "cat ran dog", Label::Mgt, v);
  const double p_mgt = forward(d, m).dist.p[0];
  EXPECT_DOUBLE_EQ(got.score, p_mgt);
  EXPECT_EQ(got.label, verdict_label(p_mgt));
}

TEST(DetectorOracleTest, MetersClassifyButNotProbe) {
  const Vocabulary v = small_vocab();
  const ClassifierModel m = small_model(v.size(), 4);
  LocalDetectorOracle oracle(m, v);
  EXPECT_EQ(oracle.query_count(), 0u);
  oracle.probe("cat");
  oracle.probe("dog");
  oracle.probe("ran");
  EXPECT_EQ(oracle.query_count(), 0u);
  oracle.classify("cat");
  oracle.classify("dog");
  EXPECT_EQ(oracle.query_count(), 2u);
  // probe and classify agree on the verdict itself
  EXPECT_EQ(oracle.probe("feline").label, oracle.classify("feline").label);
}

TEST(DetectorLossTest, UniformHeadGivesTwiceLogTwo) {
  const Vocabulary v = small_vocab();
  ClassifierModel m = small_model(v.size(), 5);
  std::fill(m.cls_w.data.begin(), m.cls_w.data.end(), 0.0);
  std::fill(m.cls_b.begin(), m.cls_b.end(), 0.0);
  const Document d = doc_from_ids("a", {2, 3}, Label::Mgt, v);
  // with no adversarial counterpart the clean term is charged twice; a
  // uniform predictive distribution prices each term at exactly log 2
  EXPECT_NEAR(detector_loss({{&d, nullptr}}, m), 2.0 * std::log(2.0), 1e-12);
}

TEST(DetectorLossTest, MatchesHandRecomputation) {
  const Vocabulary v = small_vocab();
  const ClassifierModel m = small_model(v.size(), 6);
  const Document x0 = doc_from_ids("a", {2, 3}, Label::Mgt, v);
  const Document x0_adv = doc_from_ids("a", {4, 3}, Label::Mgt, v);
  const Document x1 = doc_from_ids("b", {5, 5}, Label::Hwt, v);
  const std::vector<DetectorExample> batch{{&x0, &x0_adv}, {&x1, nullptr}};

  auto ce = [&](const Document& doc, Label label) {
    return cross_entropy(forward(doc, m).dist, smoothed_target(label, m.cfg.label_smoothing));
  };
  const double want = 0.5 * (ce(x0, Label::Mgt) + ce(x0_adv, Label::Mgt)) +
                      0.5 * (ce(x1, Label::Hwt) + ce(x1, Label::Hwt));
  EXPECT_NEAR(detector_loss(batch, m), want, 1e-12);
  EXPECT_GREATER_ERROR(detector_loss({}, m), Errc::EmptyBatch);
}

TEST(UpdateDetectorTest, GradientsMatchCentralFiniteDifferences) {
  const Vocabulary v = small_vocab();
  ClassifierModel reference = small_model(v.size(), 31);
  const Document x0 = doc_from_ids("a", {2, 3, 2}, Label::Mgt, v);
  const Document x0_adv = doc_from_ids("a", {4, 3, 2}, Label::Mgt, v);
  const Document x1 = doc_from_ids("b", {5, 4}, Label::Hwt, v);
  const std::vector<DetectorExample> batch{{&x0, &x0_adv}, {&x1, nullptr}};

  ClassifierModel stepped = reference;
  const double reported = update_detector(stepped, batch);
  EXPECT_NEAR(reported, detector_loss(batch, reference), 1e-12);

  std::vector<double*> ref_params = testutil::all_params(reference);
  std::vector<double*> new_params = testutil::all_params(stepped);
  ClassifierModel probe = reference;
  std::vector<double*> probe_params = testutil::all_params(probe);
  const double h = 1e-5;
  for (std::size_t i = 0; i < ref_params.size(); ++i) {
    const double analytic = (*ref_params[i] - *new_params[i]) / reference.cfg.learning_rate;
    const double fd =
        central_diff(probe_params[i], h, [&] { return detector_loss(batch, probe); });
    EXPECT_LT(rel_err(analytic, fd), 1e-4)
        << "parameter " << i << ": analytic " << analytic << " vs fd " << fd;
  }
}

TEST(UpdateDetectorTest, RepeatedStepsReduceLoss) {
  const Vocabulary v = small_vocab();
  ClassifierModel m = small_model(v.size(), 8);
  const Document x0 = doc_from_ids("a", {2, 2, 3}, Label::Mgt, v);
  const Document x1 = doc_from_ids("b", {4, 4, 5}, Label::Hwt, v);
  const std::vector<DetectorExample> batch{{&x0, nullptr}, {&x1, nullptr}};
  const double initial = detector_loss(batch, m);
  for (int i = 0; i < 100; ++i) update_detector(m, batch);
  EXPECT_LT(detector_loss(batch, m), initial);
  EXPECT_GREATER_ERROR(update_detector(m, {}), Errc::EmptyBatch);
}

TEST(DetectorExampleTest, AdversarialFallsBackToClean) {
  const Vocabulary v = small_vocab();
  const Document x = doc_from_ids("a", {2}, Label::Mgt, v);
  const Document adv = doc_from_ids("a", {3}, Label::Mgt, v);
  DetectorExample plain{&x, nullptr};
  DetectorExample paired{&x, &adv};
  EXPECT_EQ(&plain.adversarial(), &x);
  EXPECT_EQ(&paired.adversarial(), &adv);
}

}  // namespace
