#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "greater/adversary.hpp"
#include "greater/rng.hpp"

namespace greater {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct TruncatedNormalSpec {
  double mu = 0.0;
  double sigma = 1.0;
  double lower = -1.0;
  double upper = 1.0;

  void validate() const {
    if (!(sigma > 0.0)) throw Error(Errc::InvalidParameter, "sigma must be positive");
    if (!(lower < upper)) throw Error(Errc::DegenerateInterval, "requires lower < upper");
  }
};

// E[X] for X ~ N(mu, sigma^2) truncated to [lower, upper]:
//   mu + sigma * (phi(a) - phi(b)) / (Phi(b) - Phi(a)),
// with a, b the standardized bounds. Throws when the interval carries no mass.
inline double truncated_normal_mean(const TruncatedNormalSpec& s) {
  s.validate();
  const double a = (s.lower - s.mu) / s.sigma;
  const double b = (s.upper - s.mu) / s.sigma;
  const double mass = normal_cdf(b) - normal_cdf(a);
  if (!(mass > 1e-300))
    throw Error(Errc::DegenerateInterval, "truncation interval carries no probability mass");
  return s.mu + s.sigma * (normal_pdf(a) - normal_pdf(b)) / mass;
}

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::uint64_t count = 0;
};

struct SimulationConfig {
  std::size_t t_tokens = 100;  // T
  std::size_t budget = 30;     // Z
  double mu_p = 0.0, sigma_p = 0.0;  // 0 => symmetric defaults ((Z+1)/2, Z/6)
  double mu_y = 0.5, sigma_y = 1.0 / 6.0;
  double covariance = 0.0;  // cov(P draw, Y draw) before clamping
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  std::size_t histogram_bins = 40;

  void validate() const {
    if (t_tokens == 0) throw Error(Errc::InvalidParameter, "t_tokens must be positive");
    if (budget < 1 || budget > t_tokens)
      throw Error(Errc::InvalidBudget, "budget must lie in [1, t_tokens]");
    if (trials == 0) throw Error(Errc::InvalidParameter, "trials must be positive");
    if (histogram_bins == 0) throw Error(Errc::InvalidParameter, "histogram_bins must be positive");
  }
};

struct SimulationResult {
  double mean_rho = 0.0;
  double min_rho = 0.0;
  double max_rho = 0.0;
  double mean_p = 0.0;
  double mean_y = 0.0;
  double pivot = 0.0;  // (Z+1) / (4T)
  std::size_t trials = 0;
  std::vector<HistogramBin> histogram;
};

// Monte-Carlo model of the perturbation rate rho = (retained modifications)/T.
// P (positions visited) is a rounded, clamped normal on [1, Z]; Y (the surviving
// fraction) a clamped normal on [0, 1]; the two draws share a Gaussian copula
// with the configured covariance. The retained count P*Y is clamped to [1, Z]
// (at least one modification survives a successful attack; never more than the
// budget), so every sample lands in [1/T, Z/T].
inline SimulationResult simulate_perturbation_rate(const SimulationConfig& cfg) {
  cfg.validate();
  const double z = static_cast<double>(cfg.budget);
  const double t = static_cast<double>(cfg.t_tokens);
  const double mu_p = cfg.sigma_p > 0.0 ? cfg.mu_p : (z + 1.0) / 2.0;
  const double sigma_p = cfg.sigma_p > 0.0 ? cfg.sigma_p : std::max(z / 6.0, 1e-9);
  const double mu_y = cfg.mu_y;
  const double sigma_y = cfg.sigma_y > 0.0 ? cfg.sigma_y : 1e-9;
  const double r = cfg.covariance / (sigma_p * sigma_y);
  if (std::abs(r) > 1.0)
    throw Error(Errc::InvalidParameter, "covariance implies correlation outside [-1, 1]");
  const double rt = std::sqrt(std::max(0.0, 1.0 - r * r));

  Rng rng(cfg.seed);
  const double lo = 1.0 / t;
  const double hi = z / t;
  SimulationResult res;
  res.trials = cfg.trials;
  res.pivot = (z + 1.0) / (4.0 * t);
  res.min_rho = hi;
  res.max_rho = lo;
  res.histogram.resize(cfg.histogram_bins);
  const double width = (hi - lo) / static_cast<double>(cfg.histogram_bins);
  for (std::size_t i = 0; i < cfg.histogram_bins; ++i) {
    res.histogram[i].low = lo + width * static_cast<double>(i);
    res.histogram[i].high = lo + width * static_cast<double>(i + 1);
  }
  res.histogram.back().high = hi;

  double sum_rho = 0.0, sum_p = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    const double u = rng.normal();
    const double w = rng.normal();
    const double v = r * u + rt * w;
    const double p = std::clamp(std::floor(mu_p + sigma_p * u + 0.5), 1.0, z);
    const double y = std::clamp(mu_y + sigma_y * v, 0.0, 1.0);
    const double kept = std::clamp(p * y, 1.0, z);
    const double rho = kept / t;
    sum_rho += rho;
    sum_p += p;
    sum_y += y;
    res.min_rho = std::min(res.min_rho, rho);
    res.max_rho = std::max(res.max_rho, rho);
    std::size_t bin = 0;
    if (width > 0.0) {
      bin = static_cast<std::size_t>((rho - lo) / width);
      bin = std::min(bin, cfg.histogram_bins - 1);
    }
    ++res.histogram[bin].count;
  }
  const double inv = 1.0 / static_cast<double>(cfg.trials);
  res.mean_rho = sum_rho * inv;
  res.mean_p = sum_p * inv;
  res.mean_y = sum_y * inv;
  return res;
}

struct BoundsViolation {
  std::string trace_id;
  std::string kind;  // "query_bound" | "rho_bound"
  double value = 0.0;
};

struct BoundsReport {
  std::size_t n_traces = 0;
  std::size_t n_success = 0;
  double budget_fraction = 0.3;
  double empirical_mean_rho = 0.0;  // successful traces
  double theoretical_pivot = 0.0;   // mean over successful of (Z_i+1)/(4 T_i)
  double min_rho = 0.0;
  double max_rho = 0.0;
  std::uint64_t min_queries = 0;
  std::uint64_t max_queries = 0;
  std::vector<BoundsViolation> violations;
};

// Checks every trace against the theoretical envelopes: total queries in
// [1, 2*Z_i] and, for successful attacks, perturbation rate in [1/T_i, Z_i/T_i],
// where Z_i = max(1, round(budget_fraction * T_i)). Also reports the empirical
// mean rate next to the analytic pivot for eyeballing.
inline BoundsReport verify_trace_bounds(const std::vector<AttackTrace>& traces,
                                        double budget_fraction = 0.3) {
  if (traces.empty()) throw Error(Errc::EmptyTraceList, "verify_trace_bounds");
  if (!(budget_fraction > 0.0) || budget_fraction > 1.0)
    throw Error(Errc::InvalidParameter, "budget_fraction must lie in (0, 1]");
  BoundsReport rep;
  rep.budget_fraction = budget_fraction;
  rep.n_traces = traces.size();
  rep.min_queries = traces.front().total_queries();
  rep.max_queries = rep.min_queries;
  double sum_rho = 0.0, sum_pivot = 0.0;
  double min_rho = 1.0, max_rho = 0.0;
  for (const AttackTrace& tr : traces) {
    const double t_len = static_cast<double>(tr.original.tokens.size());
    if (t_len == 0.0) throw Error(Errc::EmptyText, "trace with empty original");
    const double z = std::max(1.0, std::floor(budget_fraction * t_len + 0.5));
    const std::uint64_t q = tr.total_queries();
    rep.min_queries = std::min(rep.min_queries, q);
    rep.max_queries = std::max(rep.max_queries, q);
    if (q < 1 || static_cast<double>(q) > 2.0 * z) {
      rep.violations.push_back({tr.original.id, "query_bound", static_cast<double>(q)});
    }
    if (!tr.success) continue;
    ++rep.n_success;
    const double kept = static_cast<double>(tr.perturbed_positions.size());
    const double rho = kept / t_len;
    sum_rho += rho;
    sum_pivot += (z + 1.0) / (4.0 * t_len);
    min_rho = std::min(min_rho, rho);
    max_rho = std::max(max_rho, rho);
    if (kept < 1.0 || kept > z) {
      rep.violations.push_back({tr.original.id, "rho_bound", rho});
    }
  }
  if (rep.n_success > 0) {
    const double inv = 1.0 / static_cast<double>(rep.n_success);
    rep.empirical_mean_rho = sum_rho * inv;
    rep.theoretical_pivot = sum_pivot * inv;
    rep.min_rho = min_rho;
    rep.max_rho = max_rho;
  }
  return rep;
}

}  // namespace greater
