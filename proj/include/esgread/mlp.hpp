#pragma once

// Two-branch feed-forward regressor: a sparse n-gram branch compressed to
// 500 units and a dense branch of scalar syntax features expanded to 25
// units, concatenated into 256 -> 128 -> 1. ReLU and dropout follow every
// layer except the linear output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "esgread/adamw.hpp"
#include "esgread/error.hpp"

namespace esgread::mlp {

inline constexpr size_t kNgramUnits = 500;
inline constexpr size_t kOtherUnits = 25;
inline constexpr size_t kHidden1 = 256;
inline constexpr size_t kHidden2 = 128;
inline constexpr double kDropoutRate = 0.10;

struct DenseLayer {
  size_t in = 0;
  size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out

  DenseLayer() = default;
  DenseLayer(size_t in_dim, size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0),
        bias(out_dim, 0.0) {}

  size_t parameter_count() const { return weight.size() + bias.size(); }
  bool operator==(const DenseLayer&) const = default;
};

// One model input. N-gram counts are sparse (index, value) pairs.
struct MlpInput {
  std::vector<std::pair<uint32_t, double>> ngrams;
  std::vector<double> other;
};

struct MlpModel {
  DenseLayer ngram_compress;  // ngram_dim -> 500
  DenseLayer other_expand;    // other_dim -> 25
  DenseLayer hidden1;         // 525 -> 256
  DenseLayer hidden2;         // 256 -> 128
  DenseLayer output;          // 128 -> 1
  double dropout_rate = kDropoutRate;
  std::string vocab_fingerprint;

  size_t ngram_dim() const { return ngram_compress.in; }
  size_t other_dim() const { return other_expand.in; }

  // Fixed parameter order shared by the optimizer, gradient checks and
  // serialization.
  std::vector<std::span<double>> parameters() {
    return {ngram_compress.weight, ngram_compress.bias, other_expand.weight,
            other_expand.bias,     hidden1.weight,      hidden1.bias,
            hidden2.weight,        hidden2.bias,        output.weight,
            output.bias};
  }
  std::vector<std::span<const double>> parameters() const {
    return {ngram_compress.weight, ngram_compress.bias, other_expand.weight,
            other_expand.bias,     hidden1.weight,      hidden1.bias,
            hidden2.weight,        hidden2.bias,        output.weight,
            output.bias};
  }

  size_t parameter_count() const {
    size_t n = 0;
    for (auto p : parameters()) n += p.size();
    return n;
  }

  bool operator==(const MlpModel&) const = default;
};

inline std::vector<const char*> parameter_names() {
  return {"ngram_compress.weight", "ngram_compress.bias",
          "other_expand.weight",   "other_expand.bias",
          "hidden1.weight",        "hidden1.bias",
          "hidden2.weight",        "hidden2.bias",
          "output.weight",         "output.bias"};
}

// Glorot-uniform weights, zero biases.
inline MlpModel mlp_init(size_t ngram_dim, size_t other_dim, uint64_t seed) {
  MlpModel m;
  m.ngram_compress = DenseLayer(ngram_dim, kNgramUnits);
  m.other_expand = DenseLayer(other_dim, kOtherUnits);
  m.hidden1 = DenseLayer(kNgramUnits + kOtherUnits, kHidden1);
  m.hidden2 = DenseLayer(kHidden1, kHidden2);
  m.output = DenseLayer(kHidden2, 1);
  std::mt19937_64 rng(seed);
  for (DenseLayer* l : {&m.ngram_compress, &m.other_expand, &m.hidden1,
                        &m.hidden2, &m.output}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l->in + l->out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (auto& w : l->weight) w = u(rng);
  }
  return m;
}

enum class Mode { kTrain, kInfer };

// Activations of one forward pass, kept for backpropagation. Masks hold 0 or
// 1/keep under inverted dropout and 1 at inference.
struct ForwardState {
  std::vector<double> z_ngram, z_other, z1, z2;
  std::vector<double> mask_ngram, mask_other, mask1, mask2;
  std::vector<double> concat;  // post-dropout 525
  std::vector<double> a1, a2;  // post-dropout
  double output = 0;
};

namespace detail {

inline void check_input(const MlpModel& m, const MlpInput& x) {
  if (x.other.size() != m.other_dim()) {
    throw std::invalid_argument(
        "mlp: expected " + std::to_string(m.other_dim()) +
        " dense features, got " + std::to_string(x.other.size()));
  }
  for (const auto& [j, _] : x.ngrams) {
    if (j >= m.ngram_dim()) {
      throw std::invalid_argument("mlp: n-gram index " + std::to_string(j) +
                                  " >= " + std::to_string(m.ngram_dim()));
    }
  }
}

inline void dense(const DenseLayer& l, std::span<const double> x,
                  std::vector<double>& z) {
  z.assign(l.bias.begin(), l.bias.end());
  for (size_t o = 0; o < l.out; ++o) {
    const double* w = l.weight.data() + o * l.in;
    double acc = 0;
    for (size_t i = 0; i < l.in; ++i) acc += w[i] * x[i];
    z[o] += acc;
  }
}

inline void relu_dropout(const std::vector<double>& z, std::vector<double>& mask,
                         double* out, Mode mode, double rate,
                         std::mt19937_64* rng) {
  mask.resize(z.size());
  const double keep = 1.0 - rate;
  std::bernoulli_distribution coin(keep);
  for (size_t i = 0; i < z.size(); ++i) {
    mask[i] = mode == Mode::kTrain ? (coin(*rng) ? 1.0 / keep : 0.0) : 1.0;
    out[i] = z[i] > 0 ? z[i] * mask[i] : 0.0;
  }
}

}  // namespace detail

inline double forward(const MlpModel& m, const MlpInput& x, Mode mode,
                      std::mt19937_64* rng, ForwardState& st) {
  detail::check_input(m, x);
  if (mode == Mode::kTrain && rng == nullptr) {
    throw std::invalid_argument("mlp: train mode needs an rng");
  }
  const auto& nl = m.ngram_compress;
  st.z_ngram.assign(nl.bias.begin(), nl.bias.end());
  for (const auto& [j, v] : x.ngrams) {
    if (v == 0) continue;
    for (size_t o = 0; o < nl.out; ++o) {
      st.z_ngram[o] += nl.weight[o * nl.in + j] * v;
    }
  }
  detail::dense(m.other_expand, x.other, st.z_other);
  st.concat.resize(kNgramUnits + kOtherUnits);
  detail::relu_dropout(st.z_ngram, st.mask_ngram, st.concat.data(), mode,
                       m.dropout_rate, rng);
  detail::relu_dropout(st.z_other, st.mask_other,
                       st.concat.data() + kNgramUnits, mode, m.dropout_rate,
                       rng);
  detail::dense(m.hidden1, st.concat, st.z1);
  st.a1.resize(kHidden1);
  detail::relu_dropout(st.z1, st.mask1, st.a1.data(), mode, m.dropout_rate,
                       rng);
  detail::dense(m.hidden2, st.a1, st.z2);
  st.a2.resize(kHidden2);
  detail::relu_dropout(st.z2, st.mask2, st.a2.data(), mode, m.dropout_rate,
                       rng);
  double y = m.output.bias[0];
  for (size_t i = 0; i < kHidden2; ++i) y += m.output.weight[i] * st.a2[i];
  st.output = y;
  return y;
}

// Unbounded regression output. Train mode applies inverted dropout drawn
// from `rng`; infer mode is deterministic.
inline double mlp_forward(const MlpModel& m, const MlpInput& x,
                          Mode mode = Mode::kInfer,
                          std::mt19937_64* rng = nullptr) {
  ForwardState st;
  return forward(m, x, mode, rng, st);
}

// Gradient buffers with the same shapes as the model parameters.
struct Gradients {
  std::vector<std::vector<double>> blocks;

  explicit Gradients(const MlpModel& m) {
    for (auto p : m.parameters()) blocks.emplace_back(p.size(), 0.0);
  }
  void zero() {
    for (auto& b : blocks) std::fill(b.begin(), b.end(), 0.0);
  }
  std::vector<std::span<const double>> views() const {
    return {blocks.begin(), blocks.end()};
  }
};

// Accumulates d(loss)/d(params) into `g` given d(loss)/d(output).
inline void backward(const MlpModel& m, const MlpInput& x,
                     const ForwardState& st, double d_out, Gradients& g) {
  auto& gw_n = g.blocks[0];
  auto& gb_n = g.blocks[1];
  auto& gw_o = g.blocks[2];
  auto& gb_o = g.blocks[3];
  auto& gw1 = g.blocks[4];
  auto& gb1 = g.blocks[5];
  auto& gw2 = g.blocks[6];
  auto& gb2 = g.blocks[7];
  auto& gw3 = g.blocks[8];
  auto& gb3 = g.blocks[9];

  std::vector<double> dz2(kHidden2);
  for (size_t i = 0; i < kHidden2; ++i) {
    gw3[i] += d_out * st.a2[i];
    dz2[i] = st.z2[i] > 0 ? d_out * m.output.weight[i] * st.mask2[i] : 0.0;
  }
  gb3[0] += d_out;

  std::vector<double> da1(kHidden1, 0.0);
  for (size_t o = 0; o < kHidden2; ++o) {
    if (dz2[o] == 0) continue;
    const double* w = m.hidden2.weight.data() + o * kHidden1;
    double* gw = gw2.data() + o * kHidden1;
    for (size_t i = 0; i < kHidden1; ++i) {
      gw[i] += dz2[o] * st.a1[i];
      da1[i] += w[i] * dz2[o];
    }
    gb2[o] += dz2[o];
  }

  const size_t n_concat = kNgramUnits + kOtherUnits;
  std::vector<double> dconcat(n_concat, 0.0);
  for (size_t o = 0; o < kHidden1; ++o) {
    const double dz = st.z1[o] > 0 ? da1[o] * st.mask1[o] : 0.0;
    if (dz == 0) continue;
    const double* w = m.hidden1.weight.data() + o * n_concat;
    double* gw = gw1.data() + o * n_concat;
    for (size_t i = 0; i < n_concat; ++i) {
      gw[i] += dz * st.concat[i];
      dconcat[i] += w[i] * dz;
    }
    gb1[o] += dz;
  }

  const size_t nd = m.ngram_dim();
  for (size_t o = 0; o < kNgramUnits; ++o) {
    const double dz =
        st.z_ngram[o] > 0 ? dconcat[o] * st.mask_ngram[o] : 0.0;
    if (dz == 0) continue;
    for (const auto& [j, v] : x.ngrams) gw_n[o * nd + j] += dz * v;
    gb_n[o] += dz;
  }
  const size_t od = m.other_dim();
  for (size_t o = 0; o < kOtherUnits; ++o) {
    const double dz = st.z_other[o] > 0
                          ? dconcat[kNgramUnits + o] * st.mask_other[o]
                          : 0.0;
    if (dz == 0) continue;
    for (size_t i = 0; i < od; ++i) gw_o[o * od + i] += dz * x.other[i];
    gb_o[o] += dz;
  }
}

struct Dataset {
  size_t ngram_dim = 0;
  size_t other_dim = 0;
  std::vector<MlpInput> inputs;
  std::vector<double> targets;

  size_t size() const { return inputs.size(); }
};

struct TrainConfig {
  size_t batch_size = 20;
  int epochs = 40;
  double learning_rate = 0.01;
  int patience = 15;
  uint64_t seed = 0;
  double weight_decay = 0.0;
};

// Strictly lower dev MSE by at least this much counts as an improvement.
inline constexpr double kMinImprovement = 1e-7;

struct TrainResult {
  MlpModel model;        // parameters from the best dev epoch
  int epochs_run = 0;
  int best_epoch = 0;    // 1-based
  std::vector<double> dev_mse;  // one entry per completed epoch
};

inline double mean_squared_error(const MlpModel& m, const Dataset& d) {
  ForwardState st;
  double sum = 0;
  for (size_t i = 0; i < d.size(); ++i) {
    const double e = forward(m, d.inputs[i], Mode::kInfer, nullptr, st) -
                     d.targets[i];
    sum += e * e;
  }
  return sum / static_cast<double>(d.size());
}

// Mini-batch MSE training with AdamW and early stopping on dev MSE.
// Seeds: init = seed, shuffling = seed + 1, dropout = seed + 2.
inline TrainResult mlp_train(const Dataset& train, const Dataset& dev,
                             const TrainConfig& cfg,
                             std::string vocab_fingerprint = {}) {
  if (train.size() == 0) throw DataError("mlp_train: empty training set");
  if (dev.size() == 0) throw DataError("mlp_train: empty dev set");
  if (train.targets.size() != train.size() ||
      dev.targets.size() != dev.size()) {
    throw DataError("mlp_train: inputs and targets differ in length");
  }
  if (train.ngram_dim != dev.ngram_dim || train.other_dim != dev.other_dim) {
    throw DataError("mlp_train: train/dev feature dimensions differ");
  }
  if (cfg.batch_size == 0 || cfg.epochs <= 0 || cfg.learning_rate <= 0 ||
      cfg.patience < 0 || cfg.weight_decay < 0) {
    throw UsageError("mlp_train: invalid training configuration");
  }

  MlpModel model = mlp_init(train.ngram_dim, train.other_dim, cfg.seed);
  model.vocab_fingerprint = std::move(vocab_fingerprint);
  std::mt19937_64 shuffle_rng(cfg.seed + 1);
  std::mt19937_64 dropout_rng(cfg.seed + 2);

  std::vector<size_t> sizes;
  for (auto p : model.parameters()) sizes.push_back(p.size());
  AdamW opt({.learning_rate = cfg.learning_rate,
             .weight_decay = cfg.weight_decay},
            sizes);
  Gradients grads(model);
  ForwardState st;

  TrainResult result;
  result.model = model;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    size_t batch_no = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      ++batch_no;
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 2.0 / static_cast<double>(end - start);
      grads.zero();
      double loss = 0;
      for (size_t k = start; k < end; ++k) {
        const size_t i = order[k];
        const double y = forward(model, train.inputs[i], Mode::kTrain,
                                 &dropout_rng, st);
        const double err = y - train.targets[i];
        loss += err * err;
        backward(model, train.inputs[i], st, scale * err, grads);
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("mlp_train: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no));
      }
      opt.step(model.parameters(), grads.views());
    }
    const double dev_mse = mean_squared_error(model, dev);
    result.dev_mse.push_back(dev_mse);
    result.epochs_run = epoch;
    if (dev_mse < best - kMinImprovement) {
      best = dev_mse;
      since_best = 0;
      result.best_epoch = epoch;
      result.model = model;
    } else {
      ++since_best;
    }
    // Checked every epoch, so patience 0 means a single epoch.
    if (since_best >= cfg.patience) break;
  }
  return result;
}

struct GradCheckReport {
  double max_relative_error = 0;
  size_t checked = 0;
  size_t worst_block = 0;
  size_t worst_index = 0;
};

// Compares backprop gradients of the squared error (dropout off) against
// central differences on a random subset of parameters.
inline GradCheckReport mlp_grad_check(const MlpModel& model,
                                      const MlpInput& x, double target,
                                      double epsilon = 1e-5,
                                      size_t subset = 200,
                                      uint64_t subset_seed = 0) {
  MlpModel m = model;
  ForwardState st;
  const double y = forward(m, x, Mode::kInfer, nullptr, st);
  Gradients g(m);
  backward(m, x, st, 2.0 * (y - target), g);

  auto loss = [&](const MlpModel& mm) {
    const double e = mlp_forward(mm, x) - target;
    return e * e;
  };

  auto params = m.parameters();
  std::vector<std::pair<size_t, size_t>> all;
  for (size_t b = 0; b < params.size(); ++b) {
    for (size_t i = 0; i < params[b].size(); ++i) all.emplace_back(b, i);
  }
  std::mt19937_64 rng(subset_seed);
  std::shuffle(all.begin(), all.end(), rng);
  if (all.size() > subset) all.resize(subset);

  GradCheckReport r;
  for (const auto& [b, i] : all) {
    const double orig = params[b][i];
    params[b][i] = orig + epsilon;
    const double up = loss(m);
    params[b][i] = orig - epsilon;
    const double down = loss(m);
    params[b][i] = orig;
    const double numeric = (up - down) / (2 * epsilon);
    const double analytic = g.blocks[b][i];
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > r.max_relative_error) {
      r.max_relative_error = rel;
      r.worst_block = b;
      r.worst_index = i;
    }
    ++r.checked;
  }
  return r;
}

}  // namespace esgread::mlp
