#pragma once

// Error and rank-correlation metrics, the id,score prediction file format and
// report rendering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "esgread/error.hpp"
#include "esgread/fileio.hpp"
#include "esgread/numeric_io.hpp"
#include "esgread/text.hpp"

namespace esgread::eval {

namespace detail {
inline void require_aligned(std::span<const double> pred,
                            std::span<const double> gold, const char* op) {
  if (pred.size() != gold.size()) {
    throw DataError(std::string(op) + ": " + std::to_string(pred.size()) +
                    " predictions vs " + std::to_string(gold.size()) +
                    " gold values");
  }
  if (pred.empty()) throw DataError(std::string(op) + ": empty input");
}
}  // namespace detail

inline double mse(std::span<const double> pred, std::span<const double> gold) {
  detail::require_aligned(pred, gold, "mse");
  double s = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    s += (pred[i] - gold[i]) * (pred[i] - gold[i]);
  }
  return s / static_cast<double>(pred.size());
}

inline double mae(std::span<const double> pred, std::span<const double> gold) {
  detail::require_aligned(pred, gold, "mae");
  double s = 0;
  for (size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - gold[i]);
  return s / static_cast<double>(pred.size());
}

// Exact pair statistics behind tau-b. Both algorithms produce these integers,
// so they agree bit for bit on the final ratio.
struct TauCounts {
  int64_t n0 = 0;   // n(n-1)/2
  int64_t n1 = 0;   // pairs tied in x
  int64_t n2 = 0;   // pairs tied in y
  int64_t s = 0;    // concordant - discordant
};

inline double tau_from_counts(const TauCounts& c) {
  if (c.n0 - c.n1 == 0 || c.n0 - c.n2 == 0) {
    throw UndefinedMetric(
        "kendall_tau_b: undefined when all values on one side are tied");
  }
  return static_cast<double>(c.s) /
         std::sqrt(static_cast<double>(c.n0 - c.n1) *
                   static_cast<double>(c.n0 - c.n2));
}

inline TauCounts tau_counts_pairwise(std::span<const double> x,
                                     std::span<const double> y) {
  TauCounts c;
  const size_t n = x.size();
  c.n0 = static_cast<int64_t>(n) * static_cast<int64_t>(n - 1) / 2;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0) ++c.n1;
      if (dy == 0) ++c.n2;
      if (dx == 0 || dy == 0) continue;
      c.s += (dx > 0) == (dy > 0) ? 1 : -1;
    }
  }
  return c;
}

namespace detail {

inline int64_t tied_pairs(int64_t run) { return run * (run - 1) / 2; }

// Sorts `v` ascending and returns the number of strict inversions.
inline int64_t merge_count(std::vector<double>& v, std::vector<double>& buf,
                           size_t lo, size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  int64_t inv = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace detail

// Knight's O(n log n) algorithm: sort by (x, y), count y-inversions by merge
// sort, and correct for tied runs.
inline TauCounts tau_counts_merge(std::span<const double> x,
                                  std::span<const double> y) {
  const size_t n = x.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  TauCounts c;
  c.n0 = static_cast<int64_t>(n) * static_cast<int64_t>(n - 1) / 2;
  int64_t n3 = 0;  // pairs tied in both
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && x[idx[j]] == x[idx[i]]) ++j;
    c.n1 += detail::tied_pairs(static_cast<int64_t>(j - i));
    for (size_t a = i; a < j;) {
      size_t b = a;
      while (b < j && y[idx[b]] == y[idx[a]]) ++b;
      n3 += detail::tied_pairs(static_cast<int64_t>(b - a));
      a = b;
    }
    i = j;
  }
  std::vector<double> ys(n), buf(n);
  for (size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const int64_t discordant = detail::merge_count(ys, buf, 0, n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && ys[j] == ys[i]) ++j;
    c.n2 += detail::tied_pairs(static_cast<int64_t>(j - i));
    i = j;
  }
  c.s = c.n0 - c.n1 - c.n2 + n3 - 2 * discordant;
  return c;
}

inline constexpr size_t kPairwiseLimit = 2000;

inline void require_tau_input(std::span<const double> pred,
                              std::span<const double> gold) {
  detail::require_aligned(pred, gold, "kendall_tau_b");
  if (pred.size() < 2) throw DataError("kendall_tau_b: need at least 2 items");
  for (size_t i = 0; i < pred.size(); ++i) {
    if (std::isnan(pred[i]) || std::isnan(gold[i])) {
      throw DataError("kendall_tau_b: NaN input");
    }
  }
}

inline double kendall_tau_b_pairwise(std::span<const double> pred,
                                     std::span<const double> gold) {
  require_tau_input(pred, gold);
  return tau_from_counts(tau_counts_pairwise(pred, gold));
}

inline double kendall_tau_b_merge(std::span<const double> pred,
                                  std::span<const double> gold) {
  require_tau_input(pred, gold);
  return tau_from_counts(tau_counts_merge(pred, gold));
}

// Throws UndefinedMetric when either side is constant.
inline double kendall_tau_b(std::span<const double> pred,
                            std::span<const double> gold) {
  return pred.size() <= kPairwiseLimit ? kendall_tau_b_pairwise(pred, gold)
                                       : kendall_tau_b_merge(pred, gold);
}

// ---------------------------------------------------------------------------
// Prediction files: header "id,score", one row per sentence.

struct Prediction {
  std::string id;
  double score = 0;

  bool operator==(const Prediction&) const = default;
};

inline std::vector<Prediction> parse_predictions(std::string_view content,
                                                 const std::string& name = "") {
  const std::string where = name.empty() ? "" : name + ": ";
  auto lines = text::split(content, '\n');
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != "id,score") {
    throw DataError(where + "prediction file must start with 'id,score'");
  }
  std::vector<Prediction> out;
  std::set<std::string> seen;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto line_no = std::to_string(i + 1);
    const auto comma = lines[i].rfind(',');
    if (comma == std::string::npos) {
      throw DataError(where + "line " + line_no + ": expected 'id,score'");
    }
    Prediction p;
    p.id = lines[i].substr(0, comma);
    const auto v = parse_double(lines[i].substr(comma + 1));
    if (p.id.empty() || !v || !std::isfinite(*v)) {
      throw DataError(where + "line " + line_no + ": bad row '" + lines[i] +
                      "'");
    }
    if (*v < 0.0 || *v > 1.0) {
      throw DataError(where + "line " + line_no + ": score outside [0,1]");
    }
    p.score = *v;
    if (!seen.insert(p.id).second) {
      throw DataError(where + "duplicate id '" + p.id + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<Prediction> load_predictions(const std::string& path) {
  return parse_predictions(read_file(path), path);
}

// Scores are clamped to [0,1] here and only here.
inline std::string serialize_predictions(const std::vector<Prediction>& ps) {
  std::string out = "id,score\n";
  for (const auto& p : ps) {
    if (p.id.find_first_of(",\n") != std::string::npos) {
      throw DataError("prediction id '" + p.id + "' contains ',' or newline");
    }
    out += p.id;
    out += ',';
    out += format_double(std::clamp(p.score, 0.0, 1.0));
    out += '\n';
  }
  return out;
}

inline void save_predictions(const std::string& path,
                             const std::vector<Prediction>& ps) {
  write_file(path, serialize_predictions(ps));
}

// Mean that is exact on identical values and independent of input order:
// values are sorted and averaged as offsets from the smallest.
inline double order_free_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double offsets = 0;
  for (double x : v) offsets += x - v.front();
  return v.front() + offsets / static_cast<double>(v.size());
}

// Element-wise mean of prediction sets that cover the same ids. Output keeps
// the id order of the first set.
inline std::vector<Prediction> ensemble_mean(
    const std::vector<std::vector<Prediction>>& sets) {
  if (sets.empty()) throw DataError("ensemble_mean: no prediction sets");
  const auto& first = sets.front();
  std::vector<std::unordered_map<std::string, double>> lookup;
  for (size_t k = 0; k < sets.size(); ++k) {
    if (sets[k].size() != first.size()) {
      throw DataError("ensemble_mean: set " + std::to_string(k + 1) +
                      " has " + std::to_string(sets[k].size()) +
                      " rows, expected " + std::to_string(first.size()));
    }
    auto& m = lookup.emplace_back();
    for (const auto& p : sets[k]) m.emplace(p.id, p.score);
  }
  std::vector<Prediction> out;
  out.reserve(first.size());
  std::vector<double> vals(sets.size());
  for (const auto& p : first) {
    for (size_t k = 0; k < sets.size(); ++k) {
      auto it = lookup[k].find(p.id);
      if (it == lookup[k].end()) {
        throw DataError("ensemble_mean: id '" + p.id + "' missing from set " +
                        std::to_string(k + 1));
      }
      vals[k] = it->second;
    }
    out.push_back({p.id, order_free_mean(vals)});
  }
  return out;
}

inline std::vector<double> ensemble_mean(
    const std::vector<std::vector<double>>& sets) {
  if (sets.empty()) throw DataError("ensemble_mean: no prediction sets");
  std::vector<double> out(sets.front().size(), 0.0);
  for (const auto& s : sets) {
    if (s.size() != out.size()) {
      throw DataError("ensemble_mean: prediction sets differ in length");
    }
  }
  std::vector<double> vals(sets.size());
  for (size_t i = 0; i < out.size(); ++i) {
    for (size_t k = 0; k < sets.size(); ++k) vals[k] = sets[k][i];
    out[i] = order_free_mean(vals);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
  std::string name;
  size_t n = 0;
  double mse = 0;
  double mae = 0;
  std::optional<double> kendall_tau_b;  // empty when undefined
  std::string tau_note;
  std::optional<double> avg_time_per_sentence_s;
  double mean_prediction = 0;
};

// Joins predictions to gold by id. Predictions for ids outside `gold` are
// ignored; every gold id must be predicted.
inline EvalReport evaluate(const std::vector<Prediction>& preds,
                           const std::vector<std::pair<std::string, double>>& gold,
                           std::optional<double> avg_time = std::nullopt,
                           std::string name = {}) {
  std::unordered_map<std::string, double> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.id, p.score).second) {
      throw DataError("evaluate: duplicate prediction id '" + p.id + "'");
    }
  }
  std::vector<double> pv, gv;
  std::set<std::string> gold_ids;
  for (const auto& [id, g] : gold) {
    if (!gold_ids.insert(id).second) {
      throw DataError("evaluate: duplicate gold id '" + id + "'");
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw DataError("evaluate: no prediction for id '" + id + "'");
    }
    pv.push_back(it->second);
    gv.push_back(g);
  }
  EvalReport r;
  r.name = std::move(name);
  r.n = pv.size();
  r.mse = mse(pv, gv);
  r.mae = mae(pv, gv);
  r.mean_prediction =
      std::accumulate(pv.begin(), pv.end(), 0.0) / static_cast<double>(r.n);
  try {
    r.kendall_tau_b = kendall_tau_b(pv, gv);
  } catch (const UndefinedMetric& e) {
    r.tau_note = e.what();
  } catch (const DataError& e) {
    r.tau_note = e.what();
  }
  r.avg_time_per_sentence_s = avg_time;
  return r;
}

inline std::string format_report_table(const std::vector<EvalReport>& rows) {
  size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  std::ostringstream os;
  auto pad = [&](const std::string& s, size_t width) {
    os << s;
    for (size_t i = s.size(); i < width; ++i) os << ' ';
  };
  auto rpad = [&](const std::string& s, size_t width) {
    for (size_t i = s.size(); i < width; ++i) os << ' ';
    os << s;
  };
  pad("model", w);
  rpad("n", 7);
  rpad("MSE", 10);
  rpad("MAE", 10);
  rpad("tau_b", 10);
  rpad("s/sent", 12);
  rpad("mean", 9);
  os << '\n';
  for (const auto& r : rows) {
    pad(r.name, w);
    rpad(std::to_string(r.n), 7);
    rpad(format_fixed(r.mse, 4), 10);
    rpad(format_fixed(r.mae, 4), 10);
    rpad(r.kendall_tau_b ? format_fixed(*r.kendall_tau_b, 4) : "undef", 10);
    rpad(r.avg_time_per_sentence_s
             ? format_fixed(*r.avg_time_per_sentence_s, 6)
             : "NA",
         12);
    rpad(format_fixed(r.mean_prediction, 4), 9);
    os << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.name;
  j["n"] = r.n;
  j["mse"] = r.mse;
  j["mae"] = r.mae;
  if (r.kendall_tau_b) {
    j["kendall_tau_b"] = *r.kendall_tau_b;
  } else {
    j["kendall_tau_b"] = nullptr;
    j["kendall_tau_b_note"] = r.tau_note;
  }
  if (r.avg_time_per_sentence_s) {
    j["avg_time_per_sentence_s"] = *r.avg_time_per_sentence_s;
  } else {
    j["avg_time_per_sentence_s"] = nullptr;
  }
  j["mean_prediction"] = r.mean_prediction;
  return j;
}

}  // namespace esgread::eval
