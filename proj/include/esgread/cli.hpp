#pragma once

// Command-line front end. `dispatch` returns the process exit code:
// 0 success, 1 usage error, 2 data or runtime error.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "esgread/ablation.hpp"
#include "esgread/corpus.hpp"
#include "esgread/error.hpp"
#include "esgread/eval.hpp"
#include "esgread/fileio.hpp"
#include "esgread/llm_client.hpp"
#include "esgread/manifest.hpp"
#include "esgread/numeric_io.hpp"
#include "esgread/pipeline.hpp"

namespace esgread::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct TrainArgs {
  std::string model = "syntax";
  std::string corpus;
  std::string conllu;
  int64_t seed = 0;
  std::string out;
  std::string lix_form = "sum";
  std::string hkps_path;
  bool no_oversample = false;
  std::vector<std::string> remove;
  mlp::TrainConfig mlp;
  gbt::GbtParams gbt;
};

inline void add_train_flags(CLI::App* c, TrainArgs& a, bool with_model) {
  if (with_model) {
    c->add_option("--model", a.model, "length, formulae or syntax")
        ->required()
        ->check(CLI::IsMember({"length", "formulae", "syntax"}));
  }
  c->add_option("--corpus", a.corpus, "corpus JSONL")->required();
  c->add_option("--conllu", a.conllu, "CoNLL-U parses of the targets");
  c->add_option("--seed", a.seed, "master seed")->required();
  c->add_option("--out", a.out, "output directory")->required();
  c->add_option("--lix-form", a.lix_form, "sum or product")
      ->check(CLI::IsMember({"sum", "product"}));
  c->add_option("--hkps-coefficients", a.hkps_path,
                "HKPS coefficient file (name value per line)");
  c->add_flag("--no-oversample", a.no_oversample,
              "train on the raw class distribution");
  c->add_option("--remove", a.remove, "feature group to drop (syntax)");
  c->add_option("--epochs", a.mlp.epochs)->check(CLI::PositiveNumber);
  c->add_option("--batch-size", a.mlp.batch_size)->check(CLI::PositiveNumber);
  c->add_option("--lr", a.mlp.learning_rate)->check(CLI::PositiveNumber);
  c->add_option("--patience", a.mlp.patience)->check(CLI::NonNegativeNumber);
  c->add_option("--weight-decay", a.mlp.weight_decay)
      ->check(CLI::NonNegativeNumber);
  c->add_option("--gbt-trees", a.gbt.n_trees)->check(CLI::NonNegativeNumber);
  c->add_option("--gbt-lr", a.gbt.learning_rate)->check(CLI::PositiveNumber);
  c->add_option("--gbt-depth", a.gbt.max_depth)->check(CLI::PositiveNumber);
}

inline pipeline::TrainOptions resolve(const TrainArgs& a) {
  if (a.seed < 0) throw UsageError("--seed must be non-negative");
  pipeline::TrainOptions o;
  o.kind = pipeline::parse_model_kind(a.model);
  o.seed = static_cast<uint64_t>(a.seed);
  o.oversample = !a.no_oversample;
  o.formula.lix_form = formulae::parse_lix_form(a.lix_form);
  if (!a.hkps_path.empty()) {
    o.formula.hkps = formulae::HkpsCoefficients::load(a.hkps_path);
  }
  o.mlp = a.mlp;
  o.gbt = a.gbt;
  for (const auto& g : a.remove) {
    o.mask.remove(syntax_model::parse_feature_group(g));
  }
  return o;
}

inline void record(RunManifest& m, const pipeline::TrainOptions& o) {
  m.seed = static_cast<int64_t>(o.seed);
  m.set("model", std::string(pipeline::to_string(o.kind)));
  m.set("oversample", o.oversample ? "1" : "0");
  m.set("seed.oversample", std::to_string(o.seed));
  m.set("seed.mlp", std::to_string(o.seed + 1));
  if (o.kind == pipeline::ModelKind::kFormulae) {
    m.set("lix_form", std::string(formulae::to_string(o.formula.lix_form)));
    m.set("hkps.version", o.formula.hkps.version);
    m.set("hkps.digest", sha256_hex(o.formula.hkps.serialize()));
    m.set("gbt.n_trees", std::to_string(o.gbt.n_trees));
    m.set("gbt.learning_rate", format_double(o.gbt.learning_rate));
    m.set("gbt.max_depth", std::to_string(o.gbt.max_depth));
  }
  if (o.kind == pipeline::ModelKind::kSyntax) {
    m.set("feature_mask", o.mask.to_string());
    m.set("mlp.epochs", std::to_string(o.mlp.epochs));
    m.set("mlp.batch_size", std::to_string(o.mlp.batch_size));
    m.set("mlp.learning_rate", format_double(o.mlp.learning_rate));
    m.set("mlp.patience", std::to_string(o.mlp.patience));
    m.set("mlp.weight_decay", format_double(o.mlp.weight_decay));
  }
}

inline RunManifest new_manifest(std::string command) {
  RunManifest m;
  m.command = std::move(command);
  m.artifact_version = std::string(pipeline::kArtifactVersion);
  return m;
}

inline void require_conllu(const pipeline::TrainOptions& o,
                           const std::string& conllu) {
  if (o.kind == pipeline::ModelKind::kSyntax && conllu.empty()) {
    throw UsageError("the syntax model needs --conllu");
  }
}

// Splits present in corpus order of first appearance: train, dev, eval.
inline std::vector<corpus::Split> present_splits(
    const std::vector<corpus::Record>& rs) {
  std::vector<corpus::Split> out;
  for (auto s : {corpus::Split::kTrain, corpus::Split::kDev,
                 corpus::Split::kEval}) {
    for (const auto& r : rs) {
      if (r.split == s) {
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

inline corpus::Split require_split(const std::string& s) {
  auto sp = corpus::parse_split(s);
  if (!sp) throw UsageError("unknown split '" + s + "'");
  return *sp;
}

// --- subcommands -------------------------------------------------------------

struct StatsArgs {
  std::string corpus;
  std::string split;
  std::string out;
};

inline int run_stats(const StatsArgs& a, std::ostream& out) {
  const auto records = corpus::load_corpus(a.corpus);
  std::vector<corpus::Split> splits =
      a.split.empty() ? present_splits(records)
                      : std::vector<corpus::Split>{require_split(a.split)};
  std::vector<std::pair<std::string, corpus::SplitStats>> cols;
  nlohmann::ordered_json j;
  for (auto s : splits) {
    const auto part = corpus::filter_split(records, s);
    if (part.empty()) {
      throw DataError("split '" + std::string(corpus::to_string(s)) +
                      "' has no records");
    }
    cols.emplace_back(std::string(corpus::to_string(s)),
                      corpus::split_stats(part));
    j[cols.back().first] = corpus::stats_to_json(cols.back().second);
  }
  const auto table = corpus::format_stats_table(cols);
  out << table;
  if (!a.out.empty()) {
    write_file(a.out + "/stats.txt", table);
    write_file(a.out + "/stats.json", j.dump(2) + "\n");
    auto m = new_manifest("stats");
    m.set("split", a.split.empty() ? "all" : a.split);
    m.add_input(a.corpus);
    m.save(a.out + "/manifest.txt");
  }
  return kExitOk;
}

inline int run_train(const TrainArgs& a, std::ostream& out) {
  const auto o = resolve(a);
  require_conllu(o, a.conllu);
  const auto data = pipeline::load_data(
      a.corpus, o.kind == pipeline::ModelKind::kSyntax ? a.conllu : "");
  const auto model = pipeline::train_model(data, o);
  pipeline::save_model(model, a.out);
  auto m = new_manifest("train");
  record(m, o);
  m.add_input(a.corpus);
  if (o.kind == pipeline::ModelKind::kSyntax) m.add_input(a.conllu);
  m.save(a.out + "/manifest.txt");
  out << "trained " << pipeline::to_string(o.kind) << " model -> " << a.out
      << "/model.artifact\n";
  if (o.kind == pipeline::ModelKind::kSyntax) {
    out << "epochs run " << model.epochs_run << ", best epoch "
        << model.best_epoch << "\n";
  }
  return kExitOk;
}

struct PredictArgs {
  std::string model_dir;
  std::string corpus;
  std::string conllu;
  std::string out;
  std::string split;
  bool time = false;
  unsigned jobs = 1;
};

inline int run_predict(const PredictArgs& a, std::ostream& out) {
  const auto predictor = pipeline::Predictor::load(a.model_dir);
  if (predictor.needs_parses() && a.conllu.empty()) {
    throw UsageError("this model needs --conllu");
  }
  const auto data = pipeline::load_data(
      a.corpus, predictor.needs_parses() ? a.conllu : "");
  const auto records =
      a.split.empty() ? data.records : data.split(require_split(a.split));
  const auto run = pipeline::predict_all(predictor, data, records, a.time,
                                         a.jobs);
  eval::save_predictions(a.out, run.predictions);
  if (run.avg_time_per_sentence_s) {
    nlohmann::ordered_json t;
    t["avg_time_per_sentence_s"] = *run.avg_time_per_sentence_s;
    t["n"] = records.size();
    write_file(a.out + ".timing.json", t.dump(2) + "\n");
  }
  auto m = new_manifest("predict");
  m.set("split", a.split.empty() ? "all" : a.split);
  m.set("time", a.time ? "1" : "0");
  m.add_input(a.model_dir + "/model.artifact");
  if (predictor.needs_parses()) {
    m.add_input(a.model_dir + "/vocab.txt");
    m.add_input(a.conllu);
  }
  m.add_input(a.corpus);
  m.save(a.out + ".manifest.txt");
  out << "wrote " << run.predictions.size() << " predictions -> " << a.out
      << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::vector<std::string> preds;
  std::string corpus;
  std::string split = "eval";
  std::string out;
};

inline std::optional<double> read_timing(const std::string& pred_path) {
  const std::string p = pred_path + ".timing.json";
  if (!fs::exists(p)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_file(p));
    return j.at("avg_time_per_sentence_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p + ": " + e.what());
  }
}

inline int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto records = corpus::load_corpus(a.corpus);
  const auto part = corpus::filter_split(records, require_split(a.split));
  if (part.empty()) throw DataError("split '" + a.split + "' has no records");
  const auto gold = pipeline::gold_labels(part);
  std::vector<eval::EvalReport> reports;
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& path : a.preds) {
    const auto preds = eval::load_predictions(path);
    try {
      reports.push_back(eval::evaluate(preds, gold, read_timing(path),
                                       fs::path(path).stem().string()));
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
    j.push_back(eval::report_to_json(reports.back()));
  }
  const auto table = eval::format_report_table(reports);
  out << table;
  for (const auto& r : reports) {
    if (!r.kendall_tau_b) out << r.name << ": tau_b " << r.tau_note << "\n";
  }
  if (!a.out.empty()) {
    write_file(a.out + "/report.txt", table);
    write_file(a.out + "/report.json", j.dump(2) + "\n");
    auto m = new_manifest("evaluate");
    m.set("split", a.split);
    for (const auto& p : a.preds) m.add_input(p);
    m.add_input(a.corpus);
    m.save(a.out + "/manifest.txt");
  }
  return kExitOk;
}

struct AblateArgs {
  TrainArgs train;
  std::vector<std::string> groups;
};

inline int run_ablate(const AblateArgs& a, std::ostream& out) {
  auto o = resolve(a.train);
  o.kind = pipeline::ModelKind::kSyntax;
  require_conllu(o, a.train.conllu);
  std::vector<syntax_model::FeatureMask> masks;
  for (const auto& g : a.groups) {
    if (g == "all") {
      for (auto fg : syntax_model::kAllGroups) masks.push_back({fg});
    } else {
      masks.push_back({syntax_model::parse_feature_group(g)});
    }
  }
  const auto data = pipeline::load_data(a.train.corpus, a.train.conllu);
  const auto rep = ablation::ablate(data, o, masks);
  const auto table = ablation::format_ablation_table(rep);
  out << table;
  write_file(a.train.out + "/ablation.txt", table);
  write_file(a.train.out + "/ablation.json",
             ablation::ablation_to_json(rep).dump(2) + "\n");
  auto m = new_manifest("ablate");
  record(m, o);
  std::string gs;
  for (const auto& g : a.groups) gs += (gs.empty() ? "" : ",") + g;
  m.set("groups", gs);
  m.add_input(a.train.corpus);
  m.add_input(a.train.conllu);
  m.save(a.train.out + "/manifest.txt");
  return kExitOk;
}

struct EnsembleArgs {
  std::vector<std::string> preds;
  std::string out;
};

inline int run_ensemble(const EnsembleArgs& a, std::ostream& out) {
  std::vector<std::vector<eval::Prediction>> sets;
  for (const auto& p : a.preds) sets.push_back(eval::load_predictions(p));
  const auto mean = eval::ensemble_mean(sets);
  eval::save_predictions(a.out, mean);
  auto m = new_manifest("ensemble");
  m.set("members", std::to_string(a.preds.size()));
  for (const auto& p : a.preds) m.add_input(p);
  m.save(a.out + ".manifest.txt");
  out << "wrote " << mean.size() << " averaged predictions -> " << a.out
      << "\n";
  return kExitOk;
}

struct LlmArgs {
  llm::EndpointConfig endpoint;
  std::string corpus;
  std::string split = "eval";
  std::string out;
  std::string failures;
  int64_t shot_seed = 0;
};

inline int run_llm_score(const LlmArgs& a, std::ostream& out) {
  if (a.shot_seed < 0) throw UsageError("--shot-seed must be non-negative");
  const auto records = corpus::load_corpus(a.corpus);
  const auto train =
      corpus::label_all(corpus::filter_split(records, corpus::Split::kTrain));
  const auto& shot = llm::pick_shot(train, static_cast<uint64_t>(a.shot_seed));
  const auto targets = corpus::filter_split(records, require_split(a.split));
  const auto res = llm::score_remote(a.endpoint, llm::http_transport(a.endpoint),
                                     targets, shot);
  const std::string failures =
      a.failures.empty() ? a.out + ".failures.tsv" : a.failures;
  eval::save_predictions(a.out, res.predictions);
  write_file(failures, llm::serialize_failures(res.failures));
  auto m = new_manifest("llm-score");
  m.seed = a.shot_seed;
  m.set("endpoint", a.endpoint.url);
  m.set("model_name", a.endpoint.model_name);
  m.set("split", a.split);
  m.set("shot_id", res.shot_id);
  m.set("temperature", "0");
  m.set("max_parallel", std::to_string(a.endpoint.max_parallel));
  m.set("timeout_s", format_double(a.endpoint.timeout_s));
  m.add_input(a.corpus);
  m.save(a.out + ".manifest.txt");
  out << "scored " << res.predictions.size() << " of " << targets.size()
      << " sentences (shot " << res.shot_id << ")";
  if (!res.failures.empty()) {
    out << ", " << res.failures.size() << " unparseable -> " << failures;
  }
  if (!res.fallback_ids.empty()) {
    out << ", " << res.fallback_ids.size() << " parsed without marker";
  }
  out << "\n";
  return kExitOk;
}

// --- dispatch ------------------------------------------------------------------

inline int dispatch(int argc, const char* const* argv,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Readability assessment toolkit for German ESG sentences",
               "esgread"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "corpus statistics per split");
  c_stats->add_option("--corpus", stats.corpus)->required();
  c_stats->add_option("--split", stats.split, "train, dev or eval");
  c_stats->add_option("--out", stats.out, "also write stats and manifest here");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train a predictor");
  add_train_flags(c_train, train, true);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "score sentences");
  c_pred->add_option("--model-dir", pred.model_dir)->required();
  c_pred->add_option("--corpus", pred.corpus)->required();
  c_pred->add_option("--conllu", pred.conllu);
  c_pred->add_option("--out", pred.out, "prediction CSV")->required();
  c_pred->add_option("--split", pred.split, "only this split");
  c_pred->add_flag("--time", pred.time,
                   "single-threaded timing, written to <out>.timing.json");
  c_pred->add_option("--jobs", pred.jobs)->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "MSE, MAE and Kendall tau-b");
  c_eval->add_option("--pred", ev.preds)->required();
  c_eval->add_option("--corpus", ev.corpus)->required();
  c_eval->add_option("--split", ev.split);
  c_eval->add_option("--out", ev.out, "also write report and manifest here");

  AblateArgs ab;
  auto* c_ab = app.add_subcommand("ablate", "feature-group ablation");
  c_ab->add_option("--group", ab.groups, "group name or 'all'")->required();
  add_train_flags(c_ab, ab.train, false);

  EnsembleArgs ens;
  auto* c_ens = app.add_subcommand("ensemble", "average prediction files");
  c_ens->add_option("--pred", ens.preds)->required();
  c_ens->add_option("--out", ens.out)->required();

  LlmArgs llm_args;
  auto* c_llm = app.add_subcommand("llm-score", "one-shot LLM scoring");
  c_llm->add_option("--endpoint", llm_args.endpoint.url)->required();
  c_llm->add_option("--model-name", llm_args.endpoint.model_name)->required();
  c_llm->add_option("--shot-seed", llm_args.shot_seed);
  c_llm->add_option("--max-parallel", llm_args.endpoint.max_parallel)
      ->check(CLI::PositiveNumber);
  c_llm->add_option("--timeout-s", llm_args.endpoint.timeout_s)
      ->check(CLI::PositiveNumber);
  c_llm->add_option("--min-interval-ms", llm_args.endpoint.min_interval_ms)
      ->check(CLI::NonNegativeNumber);
  c_llm->add_option("--api-key-env", llm_args.endpoint.api_key_env);
  c_llm->add_option("--corpus", llm_args.corpus)->required();
  c_llm->add_option("--split", llm_args.split);
  c_llm->add_option("--out", llm_args.out, "prediction CSV")->required();
  c_llm->add_option("--failures", llm_args.failures,
                    "failure log (default <out>.failures.tsv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*c_stats) return run_stats(stats, out);
    if (*c_train) return run_train(train, out);
    if (*c_pred) return run_predict(pred, out);
    if (*c_eval) return run_evaluate(ev, out);
    if (*c_ab) return run_ablate(ab, out);
    if (*c_ens) return run_ensemble(ens, out);
    if (*c_llm) return run_llm_score(llm_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace esgread::cli
