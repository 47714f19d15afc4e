#pragma once

// Model <-> Artifact conversion for the three predictor families.

#include <string>

#include "esgread/artifact.hpp"
#include "esgread/formulae.hpp"
#include "esgread/gbt.hpp"
#include "esgread/length_model.hpp"
#include "esgread/mlp.hpp"
#include "esgread/syntax_model.hpp"

namespace esgread::model_io {

inline constexpr std::string_view kLengthKind = "length";
inline constexpr std::string_view kFormulaeKind = "formulae";
inline constexpr std::string_view kSyntaxKind = "syntax";

inline void require_kind(const Artifact& a, std::string_view kind) {
  if (a.kind != kind) {
    throw DataError("artifact kind '" + a.kind + "', expected '" +
                    std::string(kind) + "'");
  }
}

// --- length baseline -------------------------------------------------------

inline void store(Artifact& a, const length_model::LinearModel& m) {
  a.kind = kLengthKind;
  a.add_tensor("linear", {m.weight, m.bias});
}

inline length_model::LinearModel load_linear(const Artifact& a) {
  require_kind(a, kLengthKind);
  const auto& t = a.tensor("linear");
  if (t.size() != 2) throw DataError("artifact: linear tensor needs 2 values");
  return {t[0], t[1]};
}

// --- formula options (HKPS stamp, LIX form) --------------------------------

inline void store(Artifact& a, const formulae::FormulaOptions& o) {
  a.set("lix_form", std::string(formulae::to_string(o.lix_form)));
  const auto& k = o.hkps;
  a.set("hkps.version", k.version);
  a.set("hkps.intercept", format_double(k.intercept));
  a.set("hkps.asl", format_double(k.asl));
  a.set("hkps.word_length", format_double(k.word_length));
  a.set("hkps.long_pct", format_double(k.long_pct));
  a.set("hkps.poly_prop", format_double(k.poly_prop));
  a.set("hkps.clamp_min", format_double(k.clamp_min));
  a.set("hkps.clamp_max", format_double(k.clamp_max));
}

inline formulae::FormulaOptions load_formula_options(const Artifact& a) {
  formulae::FormulaOptions o;
  o.lix_form = formulae::parse_lix_form(a.get("lix_form"));
  auto& k = o.hkps;
  k.version = a.get("hkps.version");
  k.intercept = a.get_double("hkps.intercept");
  k.asl = a.get_double("hkps.asl");
  k.word_length = a.get_double("hkps.word_length");
  k.long_pct = a.get_double("hkps.long_pct");
  k.poly_prop = a.get_double("hkps.poly_prop");
  k.clamp_min = a.get_double("hkps.clamp_min");
  k.clamp_max = a.get_double("hkps.clamp_max");
  return o;
}

// --- boosted trees ---------------------------------------------------------

inline void store(Artifact& a, const gbt::GbtModel& m) {
  a.kind = kFormulaeKind;
  a.set("gbt.base_score", format_double(m.base_score));
  a.set("gbt.n_features", std::to_string(m.n_features));
  a.set("gbt.n_trees", std::to_string(m.params.n_trees));
  a.set("gbt.learning_rate", format_double(m.params.learning_rate));
  a.set("gbt.max_depth", std::to_string(m.params.max_depth));
  a.set("gbt.min_samples_leaf", std::to_string(m.params.min_samples_leaf));
  for (size_t t = 0; t < m.trees.size(); ++t) {
    std::vector<double> flat;
    for (const auto& n : m.trees[t].nodes) {
      flat.insert(flat.end(), {static_cast<double>(n.feature), n.threshold,
                               static_cast<double>(n.left),
                               static_cast<double>(n.right), n.value});
    }
    a.add_tensor("tree." + std::to_string(t), std::move(flat));
  }
}

inline gbt::GbtModel load_gbt(const Artifact& a) {
  require_kind(a, kFormulaeKind);
  gbt::GbtModel m;
  m.base_score = a.get_double("gbt.base_score");
  m.n_features = static_cast<size_t>(a.get_int("gbt.n_features"));
  m.params.n_trees = static_cast<int>(a.get_int("gbt.n_trees"));
  m.params.learning_rate = a.get_double("gbt.learning_rate");
  m.params.max_depth = static_cast<int>(a.get_int("gbt.max_depth"));
  m.params.min_samples_leaf =
      static_cast<size_t>(a.get_int("gbt.min_samples_leaf"));
  for (int t = 0; t < m.params.n_trees; ++t) {
    const auto& flat = a.tensor("tree." + std::to_string(t));
    if (flat.empty() || flat.size() % 5 != 0) {
      throw DataError("artifact: malformed tree " + std::to_string(t));
    }
    gbt::Tree tree;
    const int n_nodes = static_cast<int>(flat.size() / 5);
    for (size_t i = 0; i < flat.size(); i += 5) {
      gbt::Node n;
      n.feature = static_cast<int>(flat[i]);
      n.threshold = flat[i + 1];
      n.left = static_cast<int>(flat[i + 2]);
      n.right = static_cast<int>(flat[i + 3]);
      n.value = flat[i + 4];
      if (n.feature >= static_cast<int>(m.n_features) ||
          (!n.is_leaf() && (n.left <= 0 || n.left >= n_nodes ||
                            n.right <= 0 || n.right >= n_nodes))) {
        throw DataError("artifact: bad node in tree " + std::to_string(t));
      }
      tree.nodes.push_back(n);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

// --- MLP -------------------------------------------------------------------

inline void store(Artifact& a, const mlp::MlpModel& m,
                  const mlp::TrainConfig& cfg) {
  a.kind = kSyntaxKind;
  a.set("mlp.ngram_dim", std::to_string(m.ngram_dim()));
  a.set("mlp.other_dim", std::to_string(m.other_dim()));
  a.set("mlp.dropout_rate", format_double(m.dropout_rate));
  a.set("vocab_fingerprint",
        m.vocab_fingerprint.empty() ? "-" : m.vocab_fingerprint);
  a.set("train.batch_size", std::to_string(cfg.batch_size));
  a.set("train.epochs", std::to_string(cfg.epochs));
  a.set("train.learning_rate", format_double(cfg.learning_rate));
  a.set("train.patience", std::to_string(cfg.patience));
  a.set("train.seed", std::to_string(cfg.seed));
  a.set("train.weight_decay", format_double(cfg.weight_decay));
  const auto names = mlp::parameter_names();
  const auto params = m.parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    a.add_tensor(names[i],
                 std::vector<double>(params[i].begin(), params[i].end()));
  }
}

inline mlp::MlpModel load_mlp(const Artifact& a) {
  require_kind(a, kSyntaxKind);
  const auto nd = static_cast<size_t>(a.get_int("mlp.ngram_dim"));
  const auto od = static_cast<size_t>(a.get_int("mlp.other_dim"));
  mlp::MlpModel m = mlp::mlp_init(nd, od, 0);
  m.dropout_rate = a.get_double("mlp.dropout_rate");
  const auto& fp = a.get("vocab_fingerprint");
  m.vocab_fingerprint = fp == "-" ? "" : fp;
  const auto names = mlp::parameter_names();
  auto params = m.parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& t = a.tensor(names[i]);
    if (t.size() != params[i].size()) {
      throw DataError(std::string("artifact: tensor ") + names[i] +
                      " has wrong size");
    }
    std::copy(t.begin(), t.end(), params[i].begin());
  }
  return m;
}

inline mlp::TrainConfig load_train_config(const Artifact& a) {
  mlp::TrainConfig c;
  c.batch_size = static_cast<size_t>(a.get_int("train.batch_size"));
  c.epochs = static_cast<int>(a.get_int("train.epochs"));
  c.learning_rate = a.get_double("train.learning_rate");
  c.patience = static_cast<int>(a.get_int("train.patience"));
  c.seed = static_cast<uint64_t>(a.get_int("train.seed"));
  c.weight_decay = a.get_double("train.weight_decay");
  return c;
}

}  // namespace esgread::model_io
