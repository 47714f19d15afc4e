#pragma once

// Training and prediction for the three predictor families on a corpus plus
// its CoNLL-U parses. Shared by the CLI, the ablation harness and the
// acceptance suite.

#include <algorithm>
#include <chrono>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "esgread/artifact.hpp"
#include "esgread/conllu.hpp"
#include "esgread/corpus.hpp"
#include "esgread/error.hpp"
#include "esgread/eval.hpp"
#include "esgread/features.hpp"
#include "esgread/formulae.hpp"
#include "esgread/gbt.hpp"
#include "esgread/length_model.hpp"
#include "esgread/mlp.hpp"
#include "esgread/model_io.hpp"
#include "esgread/syntax_model.hpp"

namespace esgread::pipeline {

inline constexpr std::string_view kArtifactVersion = "esgread-0.3.0";

using conllu::ParsedSentence;
using corpus::LabeledRecord;
using corpus::Record;
using corpus::Split;

struct CorpusData {
  std::vector<Record> records;
  std::unordered_map<std::string, ParsedSentence> parses;

  const ParsedSentence& parse_for(const std::string& id) const {
    auto it = parses.find(id);
    if (it == parses.end()) {
      throw DataError("no CoNLL-U parse for record '" + id + "'");
    }
    return it->second;
  }

  std::vector<Record> split(Split s) const {
    return corpus::filter_split(records, s);
  }
};

// Every sentence is validated; a broken tree is a data error.
inline std::unordered_map<std::string, ParsedSentence> index_parses(
    std::vector<ParsedSentence> sents) {
  std::unordered_map<std::string, ParsedSentence> out;
  for (auto& s : sents) {
    conllu::validate_or_throw(s);
    std::string id = s.sent_id;
    out.emplace(std::move(id), std::move(s));
  }
  return out;
}

inline CorpusData load_data(const std::string& corpus_path,
                            const std::string& conllu_path) {
  CorpusData d;
  d.records = corpus::load_corpus(corpus_path);
  if (!conllu_path.empty()) {
    d.parses = index_parses(conllu::load_conllu(conllu_path));
  }
  return d;
}

enum class ModelKind { kLength, kFormulae, kSyntax };

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "length") return ModelKind::kLength;
  if (s == "formulae") return ModelKind::kFormulae;
  if (s == "syntax") return ModelKind::kSyntax;
  throw UsageError("unknown model '" + std::string(s) +
                   "' (expected length, formulae or syntax)");
}

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kLength: return "length";
    case ModelKind::kFormulae: return "formulae";
    case ModelKind::kSyntax: return "syntax";
  }
  return "?";
}

struct TrainOptions {
  ModelKind kind = ModelKind::kSyntax;
  uint64_t seed = 0;
  bool oversample = true;
  formulae::FormulaOptions formula;
  gbt::GbtParams gbt;
  mlp::TrainConfig mlp;  // seed is overridden by seed + 1
  syntax_model::FeatureMask mask;
};

struct TrainedModel {
  ModelKind kind = ModelKind::kSyntax;
  Artifact artifact;
  std::optional<features::NgramVocabulary> vocab;  // syntax only
  int epochs_run = 0;
  int best_epoch = 0;
};

// Training split labels, oversampled with `seed` when requested.
inline std::vector<LabeledRecord> training_items(const CorpusData& d,
                                                 const TrainOptions& o) {
  auto train = corpus::label_all(d.split(Split::kTrain));
  if (train.empty()) throw DataError("corpus has no train records");
  return o.oversample ? corpus::oversample(train, o.seed) : train;
}

inline mlp::Dataset syntax_dataset(const CorpusData& d,
                                   const std::vector<LabeledRecord>& items,
                                   const features::NgramVocabulary& vocab,
                                   const syntax_model::FeatureMask& mask) {
  mlp::Dataset ds;
  ds.ngram_dim = syntax_model::ngram_dim(vocab, mask);
  ds.other_dim = syntax_model::other_dim(vocab, mask);
  std::unordered_map<std::string, mlp::MlpInput> cache;
  for (const auto& it : items) {
    auto c = cache.find(it.record.id);
    if (c == cache.end()) {
      const auto fv = features::featurize(d.parse_for(it.record.id), vocab);
      c = cache.emplace(it.record.id,
                        syntax_model::to_mlp_input(fv, vocab, mask))
              .first;
    }
    ds.inputs.push_back(c->second);
    ds.targets.push_back(it.label.normalized);
  }
  return ds;
}

inline TrainedModel train_model(const CorpusData& d, const TrainOptions& o) {
  const auto items = training_items(d, o);
  TrainedModel tm;
  tm.kind = o.kind;
  Artifact& a = tm.artifact;
  switch (o.kind) {
    case ModelKind::kLength: {
      std::vector<double> x, y;
      for (const auto& it : items) {
        x.push_back(static_cast<double>(text::count_words(it.record.target)));
        y.push_back(it.label.normalized);
      }
      const auto fit = length_model::fit_length_baseline(x, y);
      model_io::store(a, fit.model);
      a.set("degenerate", fit.degenerate ? "1" : "0");
      break;
    }
    case ModelKind::kFormulae: {
      std::vector<std::vector<double>> x;
      std::vector<double> y;
      for (const auto& it : items) {
        x.push_back(
            formulae::formula_scores(it.record.target, o.formula).as_row());
        y.push_back(it.label.normalized);
      }
      model_io::store(a, gbt::gbt_train(x, y, o.gbt));
      model_io::store(a, o.formula);
      break;
    }
    case ModelKind::kSyntax: {
      std::vector<ParsedSentence> train_parses;
      for (const auto& r : d.split(Split::kTrain)) {
        train_parses.push_back(d.parse_for(r.id));
      }
      auto vocab = features::build_vocab(train_parses);
      const auto train = syntax_dataset(d, items, vocab, o.mask);
      const auto dev =
          syntax_dataset(d, corpus::label_all(d.split(Split::kDev)), vocab,
                         o.mask);
      mlp::TrainConfig cfg = o.mlp;
      cfg.seed = o.seed + 1;
      auto result = mlp::mlp_train(train, dev, cfg, vocab.fingerprint());
      model_io::store(a, result.model, cfg);
      a.set("feature_mask", o.mask.to_string());
      a.set("train.epochs_run", std::to_string(result.epochs_run));
      a.set("train.best_epoch", std::to_string(result.best_epoch));
      tm.epochs_run = result.epochs_run;
      tm.best_epoch = result.best_epoch;
      tm.vocab = std::move(vocab);
      break;
    }
  }
  a.set("artifact_version", std::string(kArtifactVersion));
  a.set("seed", std::to_string(o.seed));
  a.set("oversample", o.oversample ? "1" : "0");
  a.set("tokenizer", "whitespace-strip-punct-v1");
  return tm;
}

inline void save_model(const TrainedModel& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  m.artifact.save(dir + "/model.artifact");
  if (m.vocab) m.vocab->save(dir + "/vocab.txt");
}

// A loaded model ready for per-sentence scoring. Raw outputs are unclamped;
// clamping happens when predictions are written.
class Predictor {
 public:
  static Predictor from_model(const TrainedModel& m) {
    Predictor p;
    p.kind_ = m.kind;
    p.init(m.artifact, m.vocab);
    return p;
  }

  static Predictor load(const std::string& dir) {
    const auto a = Artifact::load(dir + "/model.artifact");
    std::optional<features::NgramVocabulary> vocab;
    if (a.kind == model_io::kSyntaxKind) {
      vocab = features::NgramVocabulary::load(dir + "/vocab.txt");
    }
    Predictor p;
    p.init(a, vocab);
    return p;
  }

  ModelKind kind() const { return kind_; }
  bool needs_parses() const { return kind_ == ModelKind::kSyntax; }

  double score(const Record& r, const ParsedSentence* parse) const {
    switch (kind_) {
      case ModelKind::kLength:
        return linear_.predict(
            static_cast<double>(text::count_words(r.target)));
      case ModelKind::kFormulae:
        return gbt::gbt_predict(
            gbt_, formulae::formula_scores(r.target, formula_).as_row());
      case ModelKind::kSyntax: {
        if (!parse) throw DataError("syntax model needs a parse for '" +
                                    r.id + "'");
        const auto fv = features::featurize(*parse, *vocab_);
        return mlp::mlp_forward(mlp_,
                                syntax_model::to_mlp_input(fv, *vocab_, mask_));
      }
    }
    return 0;
  }

 private:
  void init(const Artifact& a,
            const std::optional<features::NgramVocabulary>& vocab) {
    if (a.kind == model_io::kLengthKind) {
      kind_ = ModelKind::kLength;
      linear_ = model_io::load_linear(a);
    } else if (a.kind == model_io::kFormulaeKind) {
      kind_ = ModelKind::kFormulae;
      gbt_ = model_io::load_gbt(a);
      formula_ = model_io::load_formula_options(a);
    } else if (a.kind == model_io::kSyntaxKind) {
      kind_ = ModelKind::kSyntax;
      mlp_ = model_io::load_mlp(a);
      mask_ = syntax_model::FeatureMask::parse(a.get("feature_mask"));
      if (!vocab) throw DataError("syntax model without vocabulary");
      if (vocab->fingerprint() != mlp_.vocab_fingerprint) {
        throw DataError(
            "vocabulary fingerprint does not match the trained model");
      }
      vocab_ = vocab;
    } else {
      throw DataError("unknown artifact kind '" + a.kind + "'");
    }
  }

  ModelKind kind_ = ModelKind::kLength;
  length_model::LinearModel linear_;
  gbt::GbtModel gbt_;
  formulae::FormulaOptions formula_;
  mlp::MlpModel mlp_;
  syntax_model::FeatureMask mask_;
  std::optional<features::NgramVocabulary> vocab_;
};

struct PredictionRun {
  std::vector<eval::Prediction> predictions;
  std::optional<double> avg_time_per_sentence_s;
};

// Scores `records` in order. With `time`, runs single-threaded, excludes one
// warm-up call, and averages the wall-clock time of each predict call.
inline PredictionRun predict_all(const Predictor& p, const CorpusData& d,
                                 const std::vector<Record>& records,
                                 bool time = false, unsigned jobs = 1) {
  PredictionRun run;
  run.predictions.resize(records.size());
  auto parse_of = [&](const Record& r) -> const ParsedSentence* {
    return p.needs_parses() ? &d.parse_for(r.id) : nullptr;
  };
  if (time) {
    if (!records.empty()) (void)p.score(records.front(), parse_of(records.front()));
    double total = 0;
    for (size_t i = 0; i < records.size(); ++i) {
      const auto* parse = parse_of(records[i]);
      const auto t0 = std::chrono::steady_clock::now();
      const double s = p.score(records[i], parse);
      const auto t1 = std::chrono::steady_clock::now();
      total += std::chrono::duration<double>(t1 - t0).count();
      run.predictions[i] = {records[i].id, s};
    }
    if (!records.empty()) {
      run.avg_time_per_sentence_s = total / static_cast<double>(records.size());
    }
    return run;
  }
  jobs = std::max(1u, std::min<unsigned>(jobs, records.size() ? records.size() : 1));
  std::vector<std::exception_ptr> errors(jobs);
  auto work = [&](unsigned w) {
    try {
      for (size_t i = w; i < records.size(); i += jobs) {
        run.predictions[i] = {records[i].id,
                              p.score(records[i], parse_of(records[i]))};
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return run;
}

inline std::vector<std::pair<std::string, double>> gold_labels(
    const std::vector<Record>& records) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& r : records) {
    out.emplace_back(r.id, corpus::aggregate(r.ratings).normalized);
  }
  return out;
}

// Train, predict the eval split, clamp as the prediction file would, and
// evaluate.
inline eval::EvalReport train_and_evaluate(const CorpusData& d,
                                           const TrainOptions& o,
                                           std::string name = {}) {
  const auto model = train_model(d, o);
  const auto predictor = Predictor::from_model(model);
  const auto eval_records = d.split(Split::kEval);
  if (eval_records.empty()) throw DataError("corpus has no eval records");
  auto run = predict_all(predictor, d, eval_records);
  for (auto& p : run.predictions) p.score = std::clamp(p.score, 0.0, 1.0);
  return eval::evaluate(run.predictions, gold_labels(eval_records),
                        std::nullopt, std::move(name));
}

}  // namespace esgread::pipeline
