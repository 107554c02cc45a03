#include "greater/bounds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "test_util.hpp"

namespace {

using namespace greater;
using testutil::doc_from_ids;
using testutil::small_vocab;

constexpr double kPi = 3.14159265358979323846;

TEST(NormalTest, PdfAndCdfReferencePoints) {
  EXPECT_DOUBLE_EQ(normal_pdf(0.0), 1.0 / std::sqrt(2.0 * kPi));
  EXPECT_DOUBLE_EQ(normal_pdf(1.5), normal_pdf(-1.5));
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021048517795, 1e-12);
  EXPECT_NEAR(normal_cdf(-1.0), 1.0 - normal_cdf(1.0), 1e-15);
}

TEST(TruncatedNormalTest, HalfNormalMeanIsSqrtTwoOverPi) {
  TruncatedNormalSpec s;
  s.mu = 0.0;
  s.sigma = 1.0;
  s.lower = 0.0;
  s.upper = 1e9;
  EXPECT_NEAR(truncated_normal_mean(s), std::sqrt(2.0 / kPi), 1e-12);
}

TEST(TruncatedNormalTest, SymmetricIntervalKeepsTheMean) {
  TruncatedNormalSpec s;
  s.mu = 3.0;
  s.sigma = 2.0;
  s.lower = 1.0;
  s.upper = 5.0;
  EXPECT_NEAR(truncated_normal_mean(s), 3.0, 1e-12);
}

// Independent oracle: rejection-sample the same truncated normal and compare
// the analytic mean against the Monte-Carlo estimate.
TEST(TruncatedNormalTest, MatchesRejectionSampling) {
  TruncatedNormalSpec s;
  s.mu = 0.5;
  s.sigma = 1.2;
  s.lower = 1.0;
  s.upper = 2.0;
  const double analytic = truncated_normal_mean(s);

  Rng rng(2024);
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < 400000; ++i) {
    const double x = s.mu + s.sigma * rng.normal();
    if (x >= s.lower && x <= s.upper) {
      sum += x;
      ++kept;
    }
  }
  ASSERT_GT(kept, 50000u);
  EXPECT_NEAR(analytic, sum / static_cast<double>(kept), 0.01);
  EXPECT_GE(analytic, s.lower);
  EXPECT_LE(analytic, s.upper);
}

TEST(TruncatedNormalTest, RejectsDegenerateSpecs) {
  TruncatedNormalSpec s;
  s.sigma = 0.0;
  EXPECT_GREATER_ERROR(truncated_normal_mean(s), Errc::InvalidParameter);
  s = TruncatedNormalSpec{};
  s.lower = 1.0;
  s.upper = 1.0;
  EXPECT_GREATER_ERROR(truncated_normal_mean(s), Errc::DegenerateInterval);
  s = TruncatedNormalSpec{};
  s.lower = 50.0;  // interval carries no mass under N(0, 1)
  s.upper = 51.0;
  EXPECT_GREATER_ERROR(truncated_normal_mean(s), Errc::DegenerateInterval);
}

TEST(SimulationConfigTest, ValidatesEveryField) {
  SimulationConfig cfg;
  cfg.validate();
  cfg.t_tokens = 0;
  EXPECT_GREATER_ERROR(cfg.validate(), Errc::InvalidParameter);
  cfg = SimulationConfig{};
  cfg.budget = 0;
  EXPECT_GREATER_ERROR(cfg.validate(), Errc::InvalidBudget);
  cfg = SimulationConfig{};
  cfg.budget = cfg.t_tokens + 1;
  EXPECT_GREATER_ERROR(cfg.validate(), Errc::InvalidBudget);
  cfg = SimulationConfig{};
  cfg.trials = 0;
  EXPECT_GREATER_ERROR(cfg.validate(), Errc::InvalidParameter);
  cfg = SimulationConfig{};
  cfg.histogram_bins = 0;
  EXPECT_GREATER_ERROR(cfg.validate(), Errc::InvalidParameter);
}

// With the symmetric defaults (E[P] = (Z+1)/2, E[Y] = 1/2) the mean perturbation
// rate should sit at the analytic pivot (Z+1)/(4T) up to clamping bias.
TEST(SimulationTest, DefaultsLandOnTheAnalyticPivot) {
  SimulationConfig cfg;  // T=100, Z=30, 1e5 trials
  const SimulationResult res = simulate_perturbation_rate(cfg);
  EXPECT_EQ(res.trials, cfg.trials);
  EXPECT_DOUBLE_EQ(res.pivot, 31.0 / 400.0);
  EXPECT_NEAR(res.mean_rho, res.pivot, 0.004);
  EXPECT_NEAR(res.mean_p, 15.5, 0.15);
  EXPECT_NEAR(res.mean_y, 0.5, 0.01);
  EXPECT_GE(res.min_rho, 1.0 / 100.0 - 1e-15);
  EXPECT_LE(res.max_rho, 30.0 / 100.0 + 1e-15);

  ASSERT_EQ(res.histogram.size(), 40u);
  std::uint64_t total = 0;
  EXPECT_DOUBLE_EQ(res.histogram.front().low, 0.01);
  EXPECT_DOUBLE_EQ(res.histogram.back().high, 0.30);
  for (std::size_t i = 0; i < res.histogram.size(); ++i) {
    total += res.histogram[i].count;
    if (i > 0) EXPECT_DOUBLE_EQ(res.histogram[i].low, res.histogram[i - 1].high);
  }
  EXPECT_EQ(total, cfg.trials);
}

TEST(SimulationTest, DeterministicForFixedSeed) {
  SimulationConfig cfg;
  cfg.trials = 20000;
  const SimulationResult a = simulate_perturbation_rate(cfg);
  const SimulationResult b = simulate_perturbation_rate(cfg);
  EXPECT_DOUBLE_EQ(a.mean_rho, b.mean_rho);
  for (std::size_t i = 0; i < a.histogram.size(); ++i) {
    EXPECT_EQ(a.histogram[i].count, b.histogram[i].count);
  }
  cfg.seed = 2;
  const SimulationResult c = simulate_perturbation_rate(cfg);
  EXPECT_NE(a.mean_rho, c.mean_rho);
}

TEST(SimulationTest, PositiveCouplingRaisesTheMeanRate) {
  SimulationConfig base;
  base.trials = 200000;
  SimulationConfig pos = base;
  pos.covariance = 0.5;  // correlation 0.6 with the default sigmas
  SimulationConfig neg = base;
  neg.covariance = -0.5;
  const double mid = simulate_perturbation_rate(base).mean_rho;
  const double up = simulate_perturbation_rate(pos).mean_rho;
  const double down = simulate_perturbation_rate(neg).mean_rho;
  EXPECT_GT(up, mid);
  EXPECT_GT(mid, down);
}

TEST(SimulationTest, OverUnityCorrelationIsRejected) {
  SimulationConfig cfg;
  cfg.covariance = 2.0;  // sigma_p * sigma_y = 5/6, so |r| > 1
  EXPECT_GREATER_ERROR(simulate_perturbation_rate(cfg), Errc::InvalidParameter);
}

TEST(SimulationTest, FullBudgetEdgeStaysInRange) {
  SimulationConfig cfg;
  cfg.t_tokens = 10;
  cfg.budget = 10;
  cfg.trials = 2000;
  const SimulationResult res = simulate_perturbation_rate(cfg);
  EXPECT_GE(res.min_rho, 0.1 - 1e-15);
  EXPECT_LE(res.max_rho, 1.0 + 1e-15);
}

// ---- trace-level bound verification ------------------------------------------

AttackTrace bound_trace(const Vocabulary& v, const std::string& id, std::size_t t_len,
                        bool success, std::vector<std::size_t> positions,
                        std::uint64_t q_search, std::uint64_t q_prune) {
  AttackTrace t;
  t.original = doc_from_ids(id, std::vector<TokenId>(t_len, 2), Label::Mgt, v);
  t.adversarial = t.original;
  for (std::size_t p : positions) t.adversarial.tokens[p] = 3;
  t.adversarial.raw_text = detokenize(t.adversarial.tokens, v);
  t.success = success;
  t.perturbed_positions = std::move(positions);
  t.queries_search = q_search;
  t.queries_prune = q_prune;
  return t;
}

TEST(VerifyTraceBoundsTest, FlagsExactlyTheOutOfEnvelopeTraces) {
  const Vocabulary v = small_vocab();
  // T = 10 and fraction 0.3 give Z = 3, so queries must lie in [1, 6] and a
  // successful trace must keep between 1 and 3 substitutions.
  const std::vector<AttackTrace> traces{
      bound_trace(v, "t1", 10, true, {0, 1}, 3, 1),        // in bounds
      bound_trace(v, "t2", 10, true, {0, 1, 2, 3}, 4, 1),  // kept 4 > Z
      bound_trace(v, "t3", 10, false, {}, 7, 0),           // 7 > 2Z
      bound_trace(v, "t4", 10, false, {}, 0, 0),           // zero queries
  };
  const BoundsReport rep = verify_trace_bounds(traces, 0.3);
  EXPECT_EQ(rep.n_traces, 4u);
  EXPECT_EQ(rep.n_success, 2u);
  EXPECT_DOUBLE_EQ(rep.budget_fraction, 0.3);
  EXPECT_DOUBLE_EQ(rep.empirical_mean_rho, 0.3);   // mean of 0.2 and 0.4
  EXPECT_DOUBLE_EQ(rep.theoretical_pivot, 0.1);    // (3+1)/(4*10)
  EXPECT_DOUBLE_EQ(rep.min_rho, 0.2);
  EXPECT_DOUBLE_EQ(rep.max_rho, 0.4);
  EXPECT_EQ(rep.min_queries, 0u);
  EXPECT_EQ(rep.max_queries, 7u);

  ASSERT_EQ(rep.violations.size(), 3u);
  std::size_t query_kind = 0, rho_kind = 0;
  for (const BoundsViolation& viol : rep.violations) {
    if (viol.kind == "query_bound") ++query_kind;
    if (viol.kind == "rho_bound") {
      ++rho_kind;
      EXPECT_EQ(viol.trace_id, "t2");
      EXPECT_DOUBLE_EQ(viol.value, 0.4);
    }
  }
  EXPECT_EQ(query_kind, 2u);
  EXPECT_EQ(rho_kind, 1u);
}

TEST(VerifyTraceBoundsTest, BoundaryValuesAreLegal) {
  const Vocabulary v = small_vocab();
  const std::vector<AttackTrace> traces{
      bound_trace(v, "lo", 10, true, {4}, 1, 0),           // q = 1, kept = 1
      bound_trace(v, "hi", 10, true, {0, 1, 2}, 3, 3),     // q = 6 = 2Z, kept = Z
  };
  const BoundsReport rep = verify_trace_bounds(traces, 0.3);
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_DOUBLE_EQ(rep.min_rho, 0.1);
  EXPECT_DOUBLE_EQ(rep.max_rho, 0.3);
}

TEST(VerifyTraceBoundsTest, AllFailedLeavesRateFieldsZero) {
  const Vocabulary v = small_vocab();
  const BoundsReport rep =
      verify_trace_bounds({bound_trace(v, "f", 10, false, {}, 2, 0)}, 0.3);
  EXPECT_EQ(rep.n_success, 0u);
  EXPECT_DOUBLE_EQ(rep.empirical_mean_rho, 0.0);
  EXPECT_DOUBLE_EQ(rep.theoretical_pivot, 0.0);
  EXPECT_TRUE(rep.violations.empty());
}

TEST(VerifyTraceBoundsTest, RejectsBadInput) {
  const Vocabulary v = small_vocab();
  EXPECT_GREATER_ERROR(verify_trace_bounds({}, 0.3), Errc::EmptyTraceList);
  const std::vector<AttackTrace> one{bound_trace(v, "a", 10, false, {}, 2, 0)};
  EXPECT_GREATER_ERROR(verify_trace_bounds(one, 0.0), Errc::InvalidParameter);
  EXPECT_GREATER_ERROR(verify_trace_bounds(one, 1.5), Errc::InvalidParameter);
  AttackTrace empty_doc;
  empty_doc.original.id = "e";
  EXPECT_GREATER_ERROR(verify_trace_bounds({empty_doc}, 0.3), Errc::EmptyText);
}

}  // namespace
