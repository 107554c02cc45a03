#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "greater/adversary.hpp"
#include "greater/bounds.hpp"
#include "greater/metrics.hpp"
#include "greater/model.hpp"
#include "greater/text.hpp"

namespace greater {

// ordered_json keeps insertion order, which makes every emitted artifact
// byte-stable across runs.
using ojson = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;
constexpr std::string_view kCodeVersion = "0.1.0";

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open for write: " + path);
  out << content;
  if (!out) throw Error(Errc::IoError, "write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open for read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void dump_json(const std::string& path, const ojson& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---- model / scorer checkpoints -------------------------------------------

inline ojson model_to_json(const ClassifierModel& m) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "classifier";
  j["embed_dim"] = m.cfg.embed_dim;
  j["hidden_dim"] = m.cfg.hidden_dim;
  j["vocab_size"] = m.vocab_size();
  j["label_smoothing"] = m.cfg.label_smoothing;
  j["learning_rate"] = m.cfg.learning_rate;
  j["embed_table"] = m.embed.data;
  j["encoder_w"] = m.enc_w.data;
  j["encoder_b"] = m.enc_b;
  j["class_w"] = m.cls_w.data;
  j["class_b"] = m.cls_b;
  return j;
}

inline ClassifierModel model_from_json(const ojson& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw Error(Errc::ConfigError, "unsupported checkpoint format_version");
    if (j.at("kind").get<std::string>() != "classifier")
      throw Error(Errc::ConfigError, "checkpoint kind is not 'classifier'");
    ClassifierModel m;
    m.cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
    m.cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    m.cfg.label_smoothing = j.at("label_smoothing").get<double>();
    m.cfg.learning_rate = j.at("learning_rate").get<double>();
    const std::size_t v = j.at("vocab_size").get<std::size_t>();
    m.embed = Mat(v, m.cfg.embed_dim);
    m.embed.data = j.at("embed_table").get<Vec>();
    m.enc_w = Mat(m.cfg.hidden_dim, m.cfg.embed_dim);
    m.enc_w.data = j.at("encoder_w").get<Vec>();
    m.enc_b = j.at("encoder_b").get<Vec>();
    m.cls_w = Mat(2, m.cfg.hidden_dim);
    m.cls_w.data = j.at("class_w").get<Vec>();
    m.cls_b = j.at("class_b").get<Vec>();
    if (m.embed.data.size() != v * m.cfg.embed_dim ||
        m.enc_w.data.size() != m.cfg.hidden_dim * m.cfg.embed_dim ||
        m.enc_b.size() != m.cfg.hidden_dim || m.cls_w.data.size() != 2 * m.cfg.hidden_dim ||
        m.cls_b.size() != 2)
      throw Error(Errc::MalformedRow, "checkpoint array sizes do not match header");
    return m;
  } catch (const ojson::exception& e) {
    throw Error(Errc::MalformedRow, std::string("bad checkpoint: ") + e.what());
  }
}

inline void save_model(const std::string& path, const ClassifierModel& m) {
  dump_json(path, model_to_json(m));
}

inline ClassifierModel load_model(const std::string& path) {
  ojson j;
  try {
    j = ojson::parse(read_text_file(path));
  } catch (const ojson::exception& e) {
    throw Error(Errc::MalformedRow, path + ": " + e.what());
  }
  return model_from_json(j);
}

inline ojson scorer_to_json(const ScoringNetwork& s) {
  ojson j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "scorer";
  j["hidden_dim"] = s.w.size();
  j["learning_rate"] = s.learning_rate;
  j["weights"] = s.w;
  j["bias"] = s.b;
  return j;
}

inline ScoringNetwork scorer_from_json(const ojson& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw Error(Errc::ConfigError, "unsupported checkpoint format_version");
    if (j.at("kind").get<std::string>() != "scorer")
      throw Error(Errc::ConfigError, "checkpoint kind is not 'scorer'");
    ScoringNetwork s;
    s.w = j.at("weights").get<Vec>();
    s.b = j.at("bias").get<double>();
    s.learning_rate = j.at("learning_rate").get<double>();
    if (s.w.size() != j.at("hidden_dim").get<std::size_t>() || s.w.empty())
      throw Error(Errc::MalformedRow, "scorer checkpoint sizes do not match header");
    return s;
  } catch (const ojson::exception& e) {
    throw Error(Errc::MalformedRow, std::string("bad checkpoint: ") + e.what());
  }
}

inline void save_scorer(const std::string& path, const ScoringNetwork& s) {
  dump_json(path, scorer_to_json(s));
}

inline ScoringNetwork load_scorer(const std::string& path) {
  ojson j;
  try {
    j = ojson::parse(read_text_file(path));
  } catch (const ojson::exception& e) {
    throw Error(Errc::MalformedRow, path + ": " + e.what());
  }
  return scorer_from_json(j);
}

// ---- corpus JSONL ----------------------------------------------------------

inline void save_corpus_jsonl(const std::string& path, const std::vector<Document>& docs) {
  std::string out;
  for (const Document& d : docs) {
    ojson j;
    j["id"] = d.id;
    j["text"] = d.raw_text;
    j["label"] = d.label == Label::Mgt ? "mgt" : "hwt";
    out += j.dump();
    out.push_back('\n');
  }
  write_text_file(path, out);
}

inline std::vector<Document> load_corpus_jsonl(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open corpus: " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    ojson j;
    try {
      j = ojson::parse(line);
      const std::string label_s = j.at("label").get<std::string>();
      Label label;
      if (label_s == "mgt") label = Label::Mgt;
      else if (label_s == "hwt") label = Label::Hwt;
      else throw Error(Errc::UnknownLabel, "label '" + label_s + "' at " + where);
      docs.push_back(make_document(j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                                   label, vocab));
    } catch (const ojson::exception& e) {
      throw Error(Errc::MalformedRow, where + ": " + e.what());
    }
  }
  return docs;
}

// ---- attack trace JSONL -----------------------------------------------------

inline ojson trace_to_json(const AttackTrace& t) {
  std::vector<std::size_t> positions = t.perturbed_positions;
  std::sort(positions.begin(), positions.end());
  ojson j;
  j["id"] = t.original.id;
  j["original_text"] = t.original.raw_text;
  j["adversarial_text"] = t.adversarial.raw_text;
  j["perturbed_positions"] = positions;
  j["queries_search"] = t.queries_search;
  j["queries_prune"] = t.queries_prune;
  j["success"] = t.success;
  j["policy"] = std::string(policy_name(t.policy));
  return j;
}

inline void save_traces_jsonl(const std::string& path, const std::vector<AttackTrace>& traces) {
  std::string out;
  for (const AttackTrace& t : traces) {
    out += trace_to_json(t).dump();
    out.push_back('\n');
  }
  write_text_file(path, out);
}

inline std::vector<AttackTrace> load_traces_jsonl(const std::string& path,
                                                  const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open traces: " + path);
  std::vector<AttackTrace> traces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    try {
      const ojson j = ojson::parse(line);
      AttackTrace t;
      t.original = make_document(j.at("id").get<std::string>(),
                                 j.at("original_text").get<std::string>(), Label::Mgt, vocab);
      t.adversarial = make_document(j.at("id").get<std::string>(),
                                    j.at("adversarial_text").get<std::string>(), Label::Mgt, vocab);
      t.perturbed_positions = j.at("perturbed_positions").get<std::vector<std::size_t>>();
      t.queries_search = j.at("queries_search").get<std::uint64_t>();
      t.queries_prune = j.at("queries_prune").get<std::uint64_t>();
      t.success = j.at("success").get<bool>();
      t.policy = policy_from_name(j.at("policy").get<std::string>());
      for (std::size_t p : t.perturbed_positions) {
        if (p >= t.original.tokens.size())
          throw Error(Errc::MalformedRow, "perturbed position out of range at " + where);
      }
      traces.push_back(std::move(t));
    } catch (const ojson::exception& e) {
      throw Error(Errc::MalformedRow, where + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::ConfigError)  // unknown policy string
        throw Error(Errc::MalformedRow, where + ": " + e.what());
      throw;
    }
  }
  return traces;
}

// ---- reports ---------------------------------------------------------------

inline ojson evaluation_to_json(const EvaluationResult& r) {
  ojson j;
  j["n_traces"] = r.n_traces;
  j["n_success"] = r.n_success;
  j["mean_queries"] = r.mean_queries;
  j["asr"] = r.asr;
  j["mean_pert_rate"] = r.mean_pert_rate;
  j["delta_ppl"] = r.mean_delta_ppl;
  j["similarity"] = r.mean_similarity;
  j["delta_readability"] = r.mean_delta_readability;
  j["notes"] = ojson{{"quality_metrics_over", "successful traces only"},
                     {"perplexity", "add-one bigram proxy"},
                     {"similarity", "mean-pooled embedding cosine proxy"}};
  return j;
}

inline ojson bounds_report_to_json(const BoundsReport& r) {
  ojson j;
  j["n_traces"] = r.n_traces;
  j["n_success"] = r.n_success;
  j["budget_fraction"] = r.budget_fraction;
  j["empirical_mean_rho"] = r.empirical_mean_rho;
  j["theoretical_pivot"] = r.theoretical_pivot;
  j["min_rho"] = r.min_rho;
  j["max_rho"] = r.max_rho;
  j["min_queries"] = r.min_queries;
  j["max_queries"] = r.max_queries;
  ojson v = ojson::array();
  for (const BoundsViolation& x : r.violations)
    v.push_back(ojson{{"id", x.trace_id}, {"kind", x.kind}, {"value", x.value}});
  j["violations"] = v;
  return j;
}

namespace detail {
// %.17g round-trips doubles exactly and never depends on locale or stream
// state, which keeps the CSV artifacts byte-identical across runs.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace detail

inline std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "bin_low,bin_high,count\n";
  for (const HistogramBin& b : bins) {
    out += detail::fmt_double(b.low);
    out.push_back(',');
    out += detail::fmt_double(b.high);
    out.push_back(',');
    out += std::to_string(b.count);
    out.push_back('\n');
  }
  return out;
}

}  // namespace greater
