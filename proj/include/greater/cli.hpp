#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "greater/artifacts.hpp"
#include "greater/bounds.hpp"
#include "greater/config.hpp"
#include "greater/corpus.hpp"
#include "greater/metrics.hpp"
#include "greater/remote.hpp"
#include "greater/serialize.hpp"
#include "greater/training.hpp"

namespace greater {
namespace cli {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out;
  std::int64_t seed = -1;
  bool seed_set = false;
};

// Loads the config and folds the --seed override into it (so the manifest
// hash reflects what actually ran). Returns the effective seed.
inline std::uint64_t resolve_seed(RunConfig& cfg, const CommonArgs& args) {
  if (args.seed_set) cfg.set("seed", std::to_string(args.seed));
  return static_cast<std::uint64_t>(cfg.get_int("seed", 1));
}

inline std::string resolve_out(const RunConfig& cfg, const CommonArgs& args,
                               const std::string& fallback) {
  if (!args.out.empty()) return args.out;
  return cfg.get_string("out", fallback);
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create output directory " + dir + ": " + ec.message());
}

inline std::string sibling_path(const std::string& path, const std::string& old_ext,
                                const std::string& new_suffix) {
  if (path.size() >= old_ext.size() &&
      path.compare(path.size() - old_ext.size(), old_ext.size(), old_ext) == 0)
    return path.substr(0, path.size() - old_ext.size()) + new_suffix;
  return path + new_suffix;
}

inline PerturbationConfig perturbation_from_config(const RunConfig& cfg) {
  PerturbationConfig pc;
  pc.init_scale = cfg.get_double("xi", 0.01);
  pc.step_scale = cfg.get_double("epsilon", 0.3);
  pc.uniform_low = cfg.get_double("uniform_low", -0.5);
  pc.uniform_high = cfg.get_double("uniform_high", 0.5);
  pc.candidate_count = static_cast<std::size_t>(cfg.get_int("candidate_count", 50));
  pc.policy = policy_from_name(cfg.get_string("policy", "greater"));
  return pc;
}

inline double budget_fraction_from(const RunConfig& cfg) {
  const double frac = cfg.get_double("budget_fraction", 0.3);
  if (!(frac > 0.0 && frac <= 1.0))
    throw Error(Errc::ConfigError, "budget_fraction must be in (0, 1]");
  return frac;
}

inline std::size_t budget_for(const RunConfig& cfg, std::size_t seq_len) {
  const std::int64_t fixed = cfg.get_int("budget", 0);
  if (fixed > 0) return std::min<std::size_t>(static_cast<std::size_t>(fixed), seq_len);
  const double frac = budget_fraction_from(cfg);
  const auto z = static_cast<std::size_t>(
      std::floor(frac * static_cast<double>(seq_len) + 0.5));
  return std::max<std::size_t>(1, std::min(z, seq_len));
}

// ---- subcommands ------------------------------------------------------------

inline void cmd_gen_corpus(RunConfig& cfg, const CommonArgs& args) {
  const std::uint64_t seed = resolve_seed(cfg, args);
  const std::string out = resolve_out(cfg, args, "corpus-out");
  SyntheticCorpusSpec spec;
  spec.n_docs = static_cast<std::size_t>(cfg.get_int("n_docs", 600));
  spec.min_length = static_cast<std::size_t>(cfg.get_int("min_length", 30));
  spec.max_length = static_cast<std::size_t>(cfg.get_int("max_length", 60));
  spec.mgt_fraction = cfg.get_double("mgt_fraction", 0.5);
  spec.seed = seed;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  ensure_dir(out);
  corpus.vocab.save((fs::path(out) / "vocab.tsv").string());
  save_corpus_jsonl((fs::path(out) / "corpus.jsonl").string(), corpus.docs);
  dump_json((fs::path(out) / "manifest.json").string(), make_manifest(cfg, "gen-corpus", seed));
  std::cerr << "gen-corpus: " << corpus.docs.size() << " documents, vocabulary "
            << corpus.vocab.size() << " -> " << out << "\n";
}

inline void cmd_train_baseline(RunConfig& cfg, const CommonArgs& args) {
  const std::uint64_t seed = resolve_seed(cfg, args);
  const std::string out = resolve_out(cfg, args, "baseline-out");
  const Vocabulary vocab = Vocabulary::load(cfg.get_string("vocab"));
  const std::vector<Document> docs = load_corpus_jsonl(cfg.get_string("corpus"), vocab);
  BaselineConfig bc;
  bc.epochs = static_cast<std::size_t>(cfg.get_int("epochs", 30));
  bc.batch_size = static_cast<std::size_t>(cfg.get_int("batch_size", 50));
  bc.holdout_fraction = cfg.get_double("holdout_fraction", 0.2);
  bc.seed = seed;
  bc.model.embed_dim = static_cast<std::size_t>(cfg.get_int("embed_dim", 32));
  bc.model.hidden_dim = static_cast<std::size_t>(cfg.get_int("hidden_dim", 64));
  bc.model.learning_rate = cfg.get_double("learning_rate", 0.1);
  bc.model.label_smoothing = cfg.get_double("label_smoothing", 0.1);
  const BaselineResult res = train_baseline(docs, bc, vocab.size());
  ensure_dir(out);
  save_model((fs::path(out) / "model.json").string(), res.model);
  ojson metrics;
  metrics["epochs"] = bc.epochs;
  metrics["train_docs"] = res.n_train;
  metrics["heldout_docs"] = res.n_heldout;
  metrics["heldout_accuracy"] = res.heldout_accuracy;
  metrics["final_loss"] = res.final_loss;
  dump_json((fs::path(out) / "metrics.json").string(), metrics);
  dump_json((fs::path(out) / "manifest.json").string(),
            make_manifest(cfg, "train-baseline", seed));
  std::cerr << "train-baseline: heldout accuracy " << res.heldout_accuracy << " -> " << out
            << "\n";
}

inline TrainingConfig training_from_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainingConfig tc;
  tc.epochs = static_cast<std::size_t>(cfg.get_int("epochs", 6));
  tc.batch_size = static_cast<std::size_t>(cfg.get_int("batch_size", 50));
  tc.lambda = cfg.get_double("lambda", 0.05);
  tc.attack_strength = cfg.get_double("attack_strength", 1.0);
  tc.adversarial_fraction = cfg.get_double("adversarial_fraction", 0.2);
  tc.budget_fraction = cfg.get_double("budget_fraction", 0.3);
  tc.holdout_fraction = cfg.get_double("holdout_fraction", 0.2);
  tc.probe_size = static_cast<std::size_t>(cfg.get_int("probe_size", 100));
  tc.seed = seed;
  tc.attack = perturbation_from_config(cfg);
  return tc;
}

inline std::string training_report_csv(const TrainingReport& report) {
  std::string csv = "epoch,clean_acc,asr,mean_queries,L_D,L_A\n";
  for (const EpochRecord& r : report.records) {
    csv += std::to_string(r.epoch);
    for (const double v :
         {r.clean_acc, r.asr, r.mean_queries, r.detector_loss, r.adversary_loss}) {
      csv.push_back(',');
      csv += detail::fmt_double(v);
    }
    csv.push_back('\n');
  }
  return csv;
}

inline ojson training_report_json(const TrainingReport& report, const std::string& mode) {
  ojson arr = ojson::array();
  for (const EpochRecord& r : report.records) {
    arr.push_back(ojson{{"epoch", r.epoch},
                        {"clean_acc", r.clean_acc},
                        {"asr", r.asr},
                        {"mean_queries", r.mean_queries},
                        {"L_D", r.detector_loss},
                        {"L_A", r.adversary_loss}});
  }
  return ojson{{"mode", mode}, {"epochs", arr}};
}

inline void cmd_adv_train(RunConfig& cfg, const CommonArgs& args) {
  const std::uint64_t seed = resolve_seed(cfg, args);
  const std::string out = resolve_out(cfg, args, "adv-train-out");
  const Vocabulary vocab = Vocabulary::load(cfg.get_string("vocab"));
  const std::vector<Document> docs = load_corpus_jsonl(cfg.get_string("corpus"), vocab);
  const ClassifierModel surrogate = load_model(cfg.get_string("surrogate"));
  const std::string mode = cfg.get_string("mode", "synchronous");
  if (mode != "synchronous" && mode != "static")
    throw Error(Errc::ConfigError, "mode must be 'synchronous' or 'static'");
  const TrainingConfig tc = training_from_config(cfg, seed);

  ModelConfig mc;
  mc.embed_dim = static_cast<std::size_t>(cfg.get_int("embed_dim", 32));
  mc.hidden_dim = static_cast<std::size_t>(cfg.get_int("hidden_dim", 64));
  mc.learning_rate = cfg.get_double("detector_learning_rate", 0.1);
  mc.label_smoothing = cfg.get_double("label_smoothing", 0.1);
  Rng det_rng(derive_seed(seed, "detector-init"));
  ClassifierModel detector = ClassifierModel::init(vocab.size(), mc, det_rng);
  Rng scorer_rng(derive_seed(seed, "scorer-init"));
  ScoringNetwork scorer = ScoringNetwork::init(surrogate.cfg.hidden_dim, scorer_rng,
                                               cfg.get_double("scorer_learning_rate", 0.05));

  TrainingResult result = [&] {
    if (mode == "static") {
      const FrozenAdversarialSet frozen =
          pregenerate_static_set(docs, detector, surrogate, scorer, tc, vocab);
      return run_static_baseline(docs, surrogate, std::move(detector), std::move(scorer), tc,
                                 vocab, frozen);
    }
    return run_adversarial_training(docs, surrogate, std::move(detector), std::move(scorer), tc,
                                    vocab);
  }();

  ensure_dir(out);
  save_model((fs::path(out) / "detector.json").string(), result.detector);
  save_scorer((fs::path(out) / "scorer.json").string(), result.scorer);
  write_text_file((fs::path(out) / "report.csv").string(), training_report_csv(result.report));
  dump_json((fs::path(out) / "report.json").string(), training_report_json(result.report, mode));
  dump_json((fs::path(out) / "manifest.json").string(), make_manifest(cfg, "adv-train", seed));
  const EpochRecord& last = result.report.records.back();
  std::cerr << "adv-train(" << mode << "): final clean_acc " << last.clean_acc << ", probe ASR "
            << last.asr << " -> " << out << "\n";
}

inline void cmd_attack(RunConfig& cfg, const CommonArgs& args) {
  const std::uint64_t seed = resolve_seed(cfg, args);
  const std::string out = resolve_out(cfg, args, "traces.jsonl");
  const Vocabulary vocab = Vocabulary::load(cfg.get_string("vocab"));
  const std::vector<Document> docs = load_corpus_jsonl(cfg.get_string("corpus"), vocab);
  const ClassifierModel surrogate = load_model(cfg.get_string("surrogate"));
  ScoringNetwork scorer = [&] {
    if (cfg.has("scorer")) return load_scorer(cfg.get_string("scorer"));
    Rng rng(derive_seed(seed, "scorer-init"));
    return ScoringNetwork::init(surrogate.cfg.hidden_dim, rng);
  }();

  // the local detector model must outlive the oracle
  std::unique_ptr<ClassifierModel> local_model;
  std::unique_ptr<DetectorOracle> oracle;
  const std::string detector_mode = cfg.get_string("detector_mode", "local");
  if (detector_mode == "local") {
    local_model = std::make_unique<ClassifierModel>(load_model(cfg.get_string("detector")));
    oracle = std::make_unique<LocalDetectorOracle>(*local_model, vocab);
  } else if (detector_mode == "remote") {
    RemoteDetectorEndpoint ep;
    ep.base_url = cfg.get_string("base_url");
    ep.timeout_ms = static_cast<int>(cfg.get_int("timeout_ms", 5000));
    ep.max_retries = static_cast<int>(cfg.get_int("max_retries", 3));
    ep.backoff_ms = static_cast<int>(cfg.get_int("backoff_ms", 50));
    ep.auth_header = cfg.get_string("auth_header", "");
    oracle = std::make_unique<RemoteDetectorOracle>(ep);
  } else {
    throw Error(Errc::ConfigError, "detector_mode must be 'local' or 'remote'");
  }

  const auto max_docs = static_cast<std::size_t>(cfg.get_int("max_docs", 0));
  PerturbationConfig pc = perturbation_from_config(cfg);
  std::vector<AttackTrace> traces;
  std::size_t skipped = 0, attacked_docs = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Document& doc = docs[i];
    if (doc.label != Label::Mgt) continue;
    if (max_docs > 0 && attacked_docs >= max_docs) break;
    ++attacked_docs;
    pc.budget = budget_for(cfg, doc.tokens.size());
    try {
      traces.push_back(
          attack(doc, *oracle, pc, surrogate, scorer, vocab, derive_seed(seed, "doc", i)));
    } catch (const Error& e) {
      if (e.code() != Errc::NotDetectedAsMgt) throw;
      ++skipped;  // not detected as MGT: no trace, excluded from ASR
    }
  }
  save_traces_jsonl(out, traces);
  dump_json(out + ".manifest.json", make_manifest(cfg, "attack", seed));
  std::cerr << "attack: " << traces.size() << " traces (" << skipped
            << " documents skipped by the setup probe) -> " << out << "\n";
}

inline void cmd_evaluate(RunConfig& cfg, const CommonArgs& args) {
  const std::uint64_t seed = resolve_seed(cfg, args);
  const std::string out = resolve_out(cfg, args, "evaluation.json");
  const Vocabulary vocab = Vocabulary::load(cfg.get_string("vocab"));
  const std::vector<AttackTrace> traces = load_traces_jsonl(cfg.get_string("traces"), vocab);
  const std::vector<Document> corpus = load_corpus_jsonl(cfg.get_string("corpus"), vocab);
  const ClassifierModel model = load_model(cfg.get_string("model"));
  NGramScorer lm(vocab.size());
  lm.fit(corpus);
  const EvaluationResult result = evaluate(traces, lm, model, vocab);
  dump_json(out, evaluation_to_json(result));
  const std::string label = traces.empty() ? "all" : std::string(policy_name(traces[0].policy));
  write_text_file(sibling_path(out, ".json", ".txt"), format_table({{label, result}}));
  dump_json(out + ".manifest.json", make_manifest(cfg, "evaluate", seed));
  std::cerr << "evaluate: ASR " << result.asr << "%, mean queries " << result.mean_queries
            << " -> " << out << "\n";
}

inline void cmd_simulate_bounds(RunConfig& cfg, const CommonArgs& args) {
  const std::uint64_t seed = resolve_seed(cfg, args);
  const std::string out = resolve_out(cfg, args, "bounds.json");
  SimulationConfig sc;
  sc.t_tokens = static_cast<std::size_t>(cfg.get_int("t_tokens", 100));
  if (cfg.get_int("budget", 0) > 0) {
    sc.budget = static_cast<std::size_t>(cfg.get_int("budget"));
  } else {
    const double frac = budget_fraction_from(cfg);
    sc.budget = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::floor(frac * static_cast<double>(sc.t_tokens) + 0.5)));
  }
  sc.mu_p = cfg.get_double("mu_p", 0.0);
  sc.sigma_p = cfg.get_double("sigma_p", 0.0);  // 0 => symmetric default
  sc.mu_y = cfg.get_double("mu_y", 0.5);
  sc.sigma_y = cfg.get_double("sigma_y", 1.0 / 6.0);
  sc.covariance = cfg.get_double("covariance", 0.0);
  sc.trials = static_cast<std::size_t>(cfg.get_int("trials", 100000));
  sc.histogram_bins = static_cast<std::size_t>(cfg.get_int("histogram_bins", 40));
  sc.seed = seed;
  const SimulationResult sim = simulate_perturbation_rate(sc);

  ojson j;
  j["t_tokens"] = sc.t_tokens;
  j["budget"] = sc.budget;
  j["trials"] = sim.trials;
  j["pivot"] = sim.pivot;
  j["mean_rho"] = sim.mean_rho;
  j["min_rho"] = sim.min_rho;
  j["max_rho"] = sim.max_rho;
  j["mean_p"] = sim.mean_p;
  j["mean_y"] = sim.mean_y;
  if (cfg.has("traces")) {
    const Vocabulary vocab = Vocabulary::load(cfg.get_string("vocab"));
    const std::vector<AttackTrace> traces = load_traces_jsonl(cfg.get_string("traces"), vocab);
    j["trace_check"] =
        bounds_report_to_json(verify_trace_bounds(traces, cfg.get_double("budget_fraction", 0.3)));
  } else {
    j["trace_check"] = nullptr;
  }
  dump_json(out, j);
  write_text_file(sibling_path(out, ".json", "-histogram.csv"), histogram_to_csv(sim.histogram));
  dump_json(out + ".manifest.json", make_manifest(cfg, "simulate-bounds", seed));
  std::cerr << "simulate-bounds: mean rho " << sim.mean_rho << " vs pivot " << sim.pivot << " -> "
            << out << "\n";
}

}  // namespace cli

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 validation/config error, 2 runtime failure.
inline int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"query-efficient adversarial evaluation for machine-text detectors"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    cli::CommonArgs args;
    void (*fn)(RunConfig&, const cli::CommonArgs&);
  };
  std::vector<Sub> subs;
  const std::pair<const char*, void (*)(RunConfig&, const cli::CommonArgs&)> table[] = {
      {"gen-corpus", cli::cmd_gen_corpus},     {"train-baseline", cli::cmd_train_baseline},
      {"adv-train", cli::cmd_adv_train},       {"attack", cli::cmd_attack},
      {"evaluate", cli::cmd_evaluate},         {"simulate-bounds", cli::cmd_simulate_bounds},
  };
  subs.reserve(std::size(table));
  for (const auto& [name, fn] : table) {
    CLI::App* cmd = app.add_subcommand(name);
    subs.push_back({cmd, {}, fn});
    cli::CommonArgs& a = subs.back().args;
    cmd->add_option("--config", a.config_path, "run configuration file")->required();
    cmd->add_option("--out", a.out, "output file or directory (overrides config)");
    cmd->add_option("--seed", a.seed, "seed override");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    for (Sub& s : subs) {
      if (s.cmd->parsed()) {
        s.args.seed_set = s.cmd->count("--seed") > 0;
        RunConfig cfg = RunConfig::parse_file(s.args.config_path);
        s.fn(cfg, s.args);
        return 0;
      }
    }
    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace greater
