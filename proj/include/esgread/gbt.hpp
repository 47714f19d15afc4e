#pragma once

// Gradient-boosted regression trees under squared error: each round fits a
// tree to the current residuals by exact greedy variance-reduction splits.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "esgread/error.hpp"

namespace esgread::gbt {

struct GbtParams {
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 5;
  size_t min_samples_leaf = 1;

  bool operator==(const GbtParams&) const = default;
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;  // rows with x < threshold go left
  int left = -1;
  int right = -1;
  double value = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const Node&) const = default;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const {
    int i = 0;
    while (!nodes[i].is_leaf()) {
      i = row[nodes[i].feature] < nodes[i].threshold ? nodes[i].left
                                                     : nodes[i].right;
    }
    return nodes[i].value;
  }

  int depth(int i = 0) const {
    if (nodes[i].is_leaf()) return 0;
    return 1 + std::max(depth(nodes[i].left), depth(nodes[i].right));
  }

  bool operator==(const Tree&) const = default;
};

struct GbtModel {
  double base_score = 0;
  size_t n_features = 0;
  GbtParams params;
  std::vector<Tree> trees;

  bool operator==(const GbtModel&) const = default;
};

// Splits must beat the best candidate so far by this relative margin, so
// near-equal gains resolve to the earliest (feature, threshold) candidate.
inline constexpr double kTieTolerance = 1e-12;

// Threshold strictly above `lo` and at most `hi`, for lo < hi.
inline double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2;
  return mid > lo ? mid : hi;
}

namespace detail {

struct Builder {
  const std::vector<std::vector<double>>& x;
  const std::vector<double>& residual;
  const GbtParams& params;
  Tree tree;

  int build(std::vector<size_t> idx, int depth) {
    double sum = 0;
    for (size_t i : idx) sum += residual[i];
    const double n = static_cast<double>(idx.size());
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(Node{.value = sum / n});
    if (depth >= params.max_depth || idx.size() < 2 * params.min_samples_leaf) {
      return id;
    }

    double total_ss = 0;
    for (size_t i : idx) total_ss += residual[i] * residual[i];
    const double eps = kTieTolerance * std::max(1.0, total_ss);
    const double parent = sum * sum / n;
    double best_gain = eps;
    int best_feature = -1;
    double best_threshold = 0;

    const size_t nf = x.front().size();
    std::vector<size_t> order(idx);
    for (size_t f = 0; f < nf; ++f) {
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return x[a][f] < x[b][f];
      });
      double left_sum = 0;
      for (size_t k = 0; k + 1 < order.size(); ++k) {
        left_sum += residual[order[k]];
        const double lo = x[order[k]][f];
        const double hi = x[order[k + 1]][f];
        if (!(lo < hi)) continue;
        const size_t nl = k + 1;
        const size_t nr = order.size() - nl;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) {
          continue;
        }
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) -
                            parent;
        if (gain > best_gain + (best_feature < 0 ? 0.0 : eps)) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = split_threshold(lo, hi);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<size_t> left, right;
    for (size_t i : idx) {
      (x[i][best_feature] < best_threshold ? left : right).push_back(i);
    }
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

inline void require_finite(std::span<const double> row, const char* op) {
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw DataError(std::string(op) + ": non-finite feature value");
    }
  }
}

}  // namespace detail

inline double gbt_predict(const GbtModel& m, std::span<const double> row) {
  if (row.size() != m.n_features) {
    throw DataError("gbt_predict: expected " + std::to_string(m.n_features) +
                    " features, got " + std::to_string(row.size()));
  }
  detail::require_finite(row, "gbt_predict");
  double tree_sum = 0;
  for (const auto& t : m.trees) tree_sum += t.predict(row);
  return m.base_score + m.params.learning_rate * tree_sum;
}

// Training MSE after each boosting round (index 0 = base score only) is
// reported through `round_mse` when non-null.
inline GbtModel gbt_train(const std::vector<std::vector<double>>& x,
                          const std::vector<double>& y,
                          const GbtParams& params = {},
                          std::vector<double>* round_mse = nullptr) {
  if (x.empty()) throw DataError("gbt_train: no rows");
  if (x.size() != y.size()) {
    throw DataError("gbt_train: rows and targets differ in length");
  }
  if (params.n_trees < 0 || params.max_depth < 0 ||
      params.min_samples_leaf == 0 || !(params.learning_rate > 0)) {
    throw UsageError("gbt_train: invalid parameters");
  }
  GbtModel m;
  m.params = params;
  m.n_features = x.front().size();
  for (const auto& row : x) {
    if (row.size() != m.n_features) {
      throw DataError("gbt_train: ragged feature rows");
    }
    detail::require_finite(row, "gbt_train");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("gbt_train: non-finite target");
  }
  m.base_score = std::accumulate(y.begin(), y.end(), 0.0) /
                 static_cast<double>(y.size());

  // Prediction kept as base + lr * (sum of tree outputs), same as
  // gbt_predict, so training-time residuals match inference exactly.
  std::vector<double> tree_sum(y.size(), 0.0);
  std::vector<double> residual(y.size());
  auto record = [&] {
    if (!round_mse) return;
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) {
      const double e = m.base_score + params.learning_rate * tree_sum[i] - y[i];
      s += e * e;
    }
    round_mse->push_back(s / static_cast<double>(y.size()));
  };
  record();
  std::vector<size_t> all(y.size());
  std::iota(all.begin(), all.end(), 0);
  for (int t = 0; t < params.n_trees; ++t) {
    for (size_t i = 0; i < y.size(); ++i) {
      residual[i] = y[i] - (m.base_score + params.learning_rate * tree_sum[i]);
    }
    detail::Builder b{x, residual, params, {}};
    b.build(all, 0);
    for (size_t i = 0; i < y.size(); ++i) tree_sum[i] += b.tree.predict(x[i]);
    m.trees.push_back(std::move(b.tree));
    record();
  }
  return m;
}

}  // namespace esgread::gbt
