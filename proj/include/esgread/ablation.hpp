#pragma once

// Feature-group ablation of the syntax model: retrain without a group and
// report (ablated - full) for MSE, MAE and tau-b on the eval split.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "esgread/eval.hpp"
#include "esgread/pipeline.hpp"
#include "esgread/syntax_model.hpp"

namespace esgread::ablation {

using syntax_model::FeatureGroup;
using syntax_model::FeatureMask;

struct AblationRow {
  std::string label;  // group name(s) removed
  eval::EvalReport ablated;
  double d_mse = 0;
  double d_mae = 0;
  std::optional<double> d_tau;  // empty if either tau is undefined
};

struct AblationReport {
  eval::EvalReport full;
  std::vector<AblationRow> rows;
};

inline AblationRow delta(const eval::EvalReport& full,
                         const eval::EvalReport& ablated, std::string label) {
  AblationRow row;
  row.label = std::move(label);
  row.ablated = ablated;
  row.d_mse = ablated.mse - full.mse;
  row.d_mae = ablated.mae - full.mae;
  if (ablated.kendall_tau_b && full.kendall_tau_b) {
    row.d_tau = *ablated.kendall_tau_b - *full.kendall_tau_b;
  }
  return row;
}

// `opts.kind` is forced to syntax. The full model is trained once and every
// mask in `masks` is compared against it with the same seed.
inline AblationReport ablate(const pipeline::CorpusData& data,
                             pipeline::TrainOptions opts,
                             const std::vector<FeatureMask>& masks) {
  opts.kind = pipeline::ModelKind::kSyntax;
  AblationReport rep;
  opts.mask = FeatureMask{};
  rep.full = pipeline::train_and_evaluate(data, opts, "full");
  for (const auto& m : masks) {
    opts.mask = m;
    const auto ab = pipeline::train_and_evaluate(data, opts, m.to_string());
    rep.rows.push_back(delta(rep.full, ab, m.to_string()));
  }
  return rep;
}

inline AblationReport ablate(const pipeline::CorpusData& data,
                             const pipeline::TrainOptions& opts,
                             FeatureGroup group) {
  return ablate(data, opts, {FeatureMask{group}});
}

inline std::string signed_fixed(double v) {
  return (v >= 0 ? "+" : "") + format_fixed(v, 4);
}

inline std::string format_ablation_table(const AblationReport& r) {
  std::ostringstream os;
  auto pad = [&](const std::string& s, size_t w) {
    os << s;
    for (size_t i = s.size(); i < w; ++i) os << ' ';
  };
  auto rpad = [&](const std::string& s, size_t w) {
    for (size_t i = s.size(); i < w; ++i) os << ' ';
    os << s;
  };
  pad("ablated", 28);
  rpad("dMSE", 10);
  rpad("dMAE", 10);
  rpad("dtau_b", 10);
  os << '\n';
  for (const auto& row : r.rows) {
    pad(row.label, 28);
    rpad(signed_fixed(row.d_mse), 10);
    rpad(signed_fixed(row.d_mae), 10);
    rpad(row.d_tau ? signed_fixed(*row.d_tau) : "undef", 10);
    os << '\n';
  }
  pad("all features (absolute)", 28);
  rpad(format_fixed(r.full.mse, 4), 10);
  rpad(format_fixed(r.full.mae, 4), 10);
  rpad(r.full.kendall_tau_b ? format_fixed(*r.full.kendall_tau_b, 4)
                            : "undef",
       10);
  os << '\n';
  return os.str();
}

inline nlohmann::ordered_json ablation_to_json(const AblationReport& r) {
  nlohmann::ordered_json j;
  j["full"] = eval::report_to_json(r.full);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json x;
    x["ablated"] = row.label;
    x["delta_mse"] = row.d_mse;
    x["delta_mae"] = row.d_mae;
    x["delta_kendall_tau_b"] =
        row.d_tau ? nlohmann::ordered_json(*row.d_tau) : nlohmann::ordered_json();
    x["report"] = eval::report_to_json(row.ablated);
    j["rows"].push_back(x);
  }
  return j;
}

}  // namespace esgread::ablation
