#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "greater/adversary.hpp"
#include "greater/model.hpp"
#include "greater/text.hpp"

namespace greater {

// Add-one (Laplace) smoothed bigram language model used as the perplexity
// proxy. A synthetic begin-of-sequence context precedes the first token.
class NGramScorer {
 public:
  explicit NGramScorer(std::size_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size == 0) throw Error(Errc::InvalidParameter, "NGramScorer: empty vocabulary");
  }

  std::size_t bos_context() const { return vocab_size_; }  // one past the last id

  void add(const std::vector<TokenId>& tokens) {
    std::size_t prev = bos_context();
    for (TokenId id : tokens) {
      if (id >= vocab_size_) throw Error(Errc::IdOutOfRange, "NGramScorer: token id");
      ++bigram_[key(prev, id)];
      ++context_[prev];
      prev = id;
    }
  }

  void fit(const std::vector<Document>& docs) {
    for (const Document& d : docs) add(d.tokens);
  }

  // P(cur | prev) with add-one smoothing: (c(prev,cur) + 1) / (c(prev) + |V|).
  double prob(std::size_t prev, TokenId cur) const {
    if (cur >= vocab_size_) throw Error(Errc::IdOutOfRange, "NGramScorer: token id");
    const auto b = bigram_.find(key(prev, cur));
    const auto c = context_.find(prev);
    const double num = 1.0 + (b == bigram_.end() ? 0.0 : static_cast<double>(b->second));
    const double den = static_cast<double>(vocab_size_) +
                       (c == context_.end() ? 0.0 : static_cast<double>(c->second));
    return num / den;
  }

  // exp(-(1/N) sum log P(w_i | w_{i-1})). An untrained scorer returns exactly
  // |V| (every conditional is 1/|V|).
  double perplexity(const std::vector<TokenId>& tokens) const {
    if (tokens.empty()) throw Error(Errc::EmptyText, "perplexity of empty sequence");
    double log_sum = 0.0;
    std::size_t prev = bos_context();
    for (TokenId id : tokens) {
      log_sum += std::log(prob(prev, id));
      prev = id;
    }
    return std::exp(-log_sum / static_cast<double>(tokens.size()));
  }

 private:
  static std::uint64_t key(std::size_t prev, TokenId cur) {
    return (static_cast<std::uint64_t>(prev) << 32) | cur;
  }

  std::size_t vocab_size_;
  std::unordered_map<std::uint64_t, std::uint64_t> bigram_;
  std::unordered_map<std::uint64_t, std::uint64_t> context_;
};

inline double proxy_perplexity(const std::string& text, const NGramScorer& lm,
                               const Vocabulary& vocab) {
  return lm.perplexity(tokenize(text, vocab));
}

// Semantic similarity proxy: cosine between the mean-pooled embedding rows of
// the two token sequences. Degenerate (near-zero) pooled vectors score 0.
inline double semantic_similarity(const std::string& a, const std::string& b,
                                  const ClassifierModel& m, const Vocabulary& vocab) {
  auto pool = [&](const std::string& text) {
    const std::vector<TokenId> ids = tokenize(text, vocab);
    Vec v(m.cfg.embed_dim, 0.0);
    for (TokenId id : ids) {
      if (id >= m.vocab_size()) throw Error(Errc::IdOutOfRange, "similarity token id");
      axpy(1.0, m.embed.row(id), v);
    }
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (double& x : v) x *= inv;
    return v;
  };
  const Vec va = pool(a);
  const Vec vb = pool(b);
  const double na = l2_norm(va), nb = l2_norm(vb);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  const double cosine = dot(va, vb) / (na * nb);
  return std::clamp(cosine, -1.0, 1.0);
}

inline double delta_readability(const std::string& original, const std::string& adversarial) {
  return std::abs(flesch_reading_ease(original) - flesch_reading_ease(adversarial));
}

// Share of successful traces, in percent, over all traces handed in. Traces
// whose setup probe failed never become traces at all, so the denominator is
// exactly the attacked-and-detected population.
inline double attack_success_rate(const std::vector<AttackTrace>& traces) {
  if (traces.empty()) throw Error(Errc::EmptyTraceList, "attack_success_rate");
  std::size_t wins = 0;
  for (const AttackTrace& t : traces) wins += t.success ? 1 : 0;
  return 100.0 * static_cast<double>(wins) / static_cast<double>(traces.size());
}

// Percentage of positions perturbed in the final adversarial text.
inline double perturbation_rate(const AttackTrace& trace) {
  if (trace.original.tokens.empty()) throw Error(Errc::EmptyText, "perturbation_rate");
  return 100.0 * static_cast<double>(trace.perturbed_positions.size()) /
         static_cast<double>(trace.original.tokens.size());
}

struct EvaluationResult {
  std::size_t n_traces = 0;
  std::size_t n_success = 0;
  double asr = 0.0;            // percent, over all traces
  double mean_queries = 0.0;   // search + prune, over all traces
  double mean_pert_rate = 0.0; // percent, successful traces only
  double mean_delta_ppl = 0.0; // proxy, successful traces only
  double mean_similarity = 0.0;  // proxy, successful traces only
  double mean_delta_readability = 0.0;  // successful traces only
};

// Aggregates attack quality. ASR and query counts cover every trace; the text
// quality metrics (perturbation rate, perplexity shift, similarity,
// readability shift) are averaged over successful traces only, since a failed
// attack leaves no adversarial text worth measuring.
inline EvaluationResult evaluate(const std::vector<AttackTrace>& traces, const NGramScorer& lm,
                                 const ClassifierModel& m, const Vocabulary& vocab) {
  if (traces.empty()) throw Error(Errc::EmptyTraceList, "evaluate: no traces");
  EvaluationResult r;
  r.n_traces = traces.size();
  double pert = 0.0, dppl = 0.0, sim = 0.0, dread = 0.0, queries = 0.0;
  for (const AttackTrace& t : traces) {
    queries += static_cast<double>(t.total_queries());
    if (!t.success) continue;
    ++r.n_success;
    pert += perturbation_rate(t);
    dppl += proxy_perplexity(t.adversarial.raw_text, lm, vocab) -
            proxy_perplexity(t.original.raw_text, lm, vocab);
    sim += semantic_similarity(t.original.raw_text, t.adversarial.raw_text, m, vocab);
    dread += delta_readability(t.original.raw_text, t.adversarial.raw_text);
  }
  r.asr = attack_success_rate(traces);
  r.mean_queries = queries / static_cast<double>(r.n_traces);
  if (r.n_success > 0) {
    const double inv = 1.0 / static_cast<double>(r.n_success);
    r.mean_pert_rate = pert * inv;
    r.mean_delta_ppl = dppl * inv;
    r.mean_similarity = sim * inv;
    r.mean_delta_readability = dread * inv;
  }
  return r;
}

// Fixed-width text table, one row per result. Column order mirrors the usual
// attack-evaluation layout: queries first, then success rate, then the text
// quality columns.
inline std::string format_table(const std::vector<std::pair<std::string, EvaluationResult>>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "run" << std::right << std::setw(12) << "avg_queries"
     << std::setw(10) << "asr_pct" << std::setw(10) << "pert_pct" << std::setw(12) << "d_ppl"
     << std::setw(12) << "similarity" << std::setw(10) << "d_read" << '\n';
  os << std::string(84, '-') << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& [name, r] : rows) {
    os << std::left << std::setw(18) << name << std::right << std::setw(12) << r.mean_queries
       << std::setw(10) << r.asr << std::setw(10) << r.mean_pert_rate << std::setw(12)
       << r.mean_delta_ppl << std::setw(12) << std::setprecision(4) << r.mean_similarity
       << std::setprecision(2) << std::setw(10) << r.mean_delta_readability << '\n';
  }
  return os.str();
}

}  // namespace greater
