#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../oracles/oracles.hpp"
#include "esgread/adamw.hpp"
#include "esgread/eval.hpp"
#include "esgread/gbt.hpp"
#include "esgread/length_model.hpp"
#include "esgread/mlp.hpp"
#include "esgread/model_io.hpp"

using namespace esgread;

namespace {

mlp::MlpInput random_input(std::mt19937_64& rng, size_t ngram_dim,
                           size_t other_dim) {
  mlp::MlpInput x;
  std::uniform_real_distribution<double> u(-1, 1);
  std::bernoulli_distribution on(0.3);
  for (uint32_t j = 0; j < ngram_dim; ++j) {
    if (on(rng)) x.ngrams.emplace_back(j, 1.0 + (j % 3));
  }
  for (size_t j = 0; j < other_dim; ++j) x.other.push_back(u(rng));
  return x;
}

mlp::MlpModel zero_model(size_t ngram_dim, size_t other_dim) {
  auto m = mlp::mlp_init(ngram_dim, other_dim, 0);
  for (auto p : m.parameters()) std::fill(p.begin(), p.end(), 0.0);
  return m;
}

}  // namespace

// --- length baseline ---------------------------------------------------------

TEST(LengthBaseline, TwoPoints) {
  const std::vector<double> x = {1, 2}, y = {0.0, 1.0};
  const auto r = length_model::fit_length_baseline(x, y);
  EXPECT_DOUBLE_EQ(r.model.weight, 1.0);
  EXPECT_DOUBLE_EQ(r.model.bias, -1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(LengthBaseline, ConstantTargetsAndDegenerateInputs) {
  const std::vector<double> x = {3, 7, 9}, y = {0.4, 0.4, 0.4};
  const auto r = length_model::fit_length_baseline(x, y);
  EXPECT_NEAR(r.model.weight, 0.0, 1e-15);
  EXPECT_NEAR(r.model.bias, 0.4, 1e-15);
  const std::vector<double> same = {5, 5, 5}, t = {0.1, 0.2, 0.6};
  const auto d = length_model::fit_length_baseline(same, t);
  EXPECT_TRUE(d.degenerate);
  EXPECT_DOUBLE_EQ(d.model.weight, 0.0);
  EXPECT_NEAR(d.model.bias, 0.3, 1e-15);
  EXPECT_THROW(length_model::fit_length_baseline(std::vector<double>{1},
                                                 std::vector<double>{1}),
               DataError);
}

TEST(LengthBaseline, MatchesNormalEquations) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(3, 60);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
      x[i] = len(rng);
      y[i] = u(rng);
    }
    const auto r = length_model::fit_length_baseline(x, y);
    const auto o = oracle::normal_equations(x, y);
    EXPECT_NEAR(r.model.weight, o.w, 1e-9);
    EXPECT_NEAR(r.model.bias, o.b, 1e-9);
  }
}

// --- gradient boosting ---------------------------------------------------------

TEST(Gbt, ConstantTarget) {
  const std::vector<std::vector<double>> x = {{1, 2}, {3, 4}, {5, 0}};
  const std::vector<double> y = {0.7, 0.7, 0.7};
  const auto m = gbt::gbt_train(x, y, {.n_trees = 5});
  EXPECT_DOUBLE_EQ(m.base_score, 0.7);
  for (const auto& t : m.trees) {
    for (const auto& n : t.nodes) EXPECT_NEAR(n.value, 0.0, 1e-15);
  }
  for (const auto& row : x) EXPECT_NEAR(gbt::gbt_predict(m, row), 0.7, 1e-15);
}

TEST(Gbt, SingleSplitGivesGroupMeans) {
  const std::vector<std::vector<double>> x = {{0.0}, {1.0}, {5.0}, {6.0}};
  const std::vector<double> y = {0.1, 0.3, 0.8, 1.0};
  const auto m = gbt::gbt_train(
      x, y, {.n_trees = 1, .learning_rate = 1.0, .max_depth = 1});
  ASSERT_EQ(m.trees.size(), 1u);
  EXPECT_EQ(m.trees[0].depth(), 1);
  EXPECT_NEAR(gbt::gbt_predict(m, x[0]), 0.2, 1e-15);
  EXPECT_NEAR(gbt::gbt_predict(m, x[1]), 0.2, 1e-15);
  EXPECT_NEAR(gbt::gbt_predict(m, x[2]), 0.9, 1e-15);
  EXPECT_NEAR(gbt::gbt_predict(m, x[3]), 0.9, 1e-15);
}

TEST(Gbt, ZeroTreesAndIdenticalRows) {
  const std::vector<std::vector<double>> x = {{1, 1}, {1, 1}, {2, 0}};
  const std::vector<double> y = {0.2, 0.4, 0.9};
  const auto none = gbt::gbt_train(x, y, {.n_trees = 0});
  EXPECT_DOUBLE_EQ(gbt::gbt_predict(none, {{9.0, 9.0}}), 0.5);
  const auto m = gbt::gbt_train(x, y);
  EXPECT_EQ(gbt::gbt_predict(m, x[0]), gbt::gbt_predict(m, x[1]));
}

TEST(Gbt, OverfitsThreeRows) {
  const std::vector<std::vector<double>> x = {{0.1, 3}, {0.5, 1}, {0.9, 2}};
  const std::vector<double> y = {0.0, 1.0, 0.25};
  const auto m = gbt::gbt_train(
      x, y, {.n_trees = 100, .learning_rate = 0.5, .max_depth = 2});
  for (size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(gbt::gbt_predict(m, x[i]), y[i], 1e-6);
  }
}

TEST(Gbt, TrainingMseNonIncreasingAtUnitRate) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::vector<double>> x(40, std::vector<double>(3));
    std::vector<double> y(40);
    for (size_t i = 0; i < x.size(); ++i) {
      for (auto& v : x[i]) v = std::round(u(rng) * 10);
      y[i] = u(rng);
    }
    std::vector<double> mse;
    gbt::gbt_train(x, y, {.n_trees = 10, .learning_rate = 1.0, .max_depth = 3},
                   &mse);
    ASSERT_EQ(mse.size(), 11u);
    for (size_t r = 1; r < mse.size(); ++r) EXPECT_LE(mse[r], mse[r - 1] + 1e-15);
  }
}

TEST(Gbt, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> rows(2, 8), grid(0, 4);
  for (int t = 0; t < 25; ++t) {
    const int n = rows(rng);
    std::vector<std::vector<double>> x(n, std::vector<double>(3));
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      for (auto& v : x[i]) v = grid(rng);
      y[i] = u(rng);
    }
    const auto m = gbt::gbt_train(
        x, y, {.n_trees = 2, .learning_rate = 0.1, .max_depth = 2});
    const oracle::BruteGbt o(x, y, 2, 2, 0.1);
    for (const auto& row : x) {
      EXPECT_NEAR(gbt::gbt_predict(m, row), o.predict(row), 1e-9);
    }
  }
}

TEST(Gbt, RejectsBadInput) {
  EXPECT_THROW(gbt::gbt_train({}, {}), DataError);
  EXPECT_THROW(gbt::gbt_train({{1.0}, {1.0, 2.0}}, {0, 1}), DataError);
  EXPECT_THROW(gbt::gbt_train({{NAN}}, {0}), DataError);
  const auto m = gbt::gbt_train({{1.0}, {2.0}}, {0, 1});
  EXPECT_THROW(gbt::gbt_predict(m, {{1.0, 2.0}}), DataError);
}

TEST(Gbt, ArtifactRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> x(30, std::vector<double>(5));
  std::vector<double> y(30);
  for (size_t i = 0; i < x.size(); ++i) {
    for (auto& v : x[i]) v = u(rng);
    y[i] = u(rng);
  }
  const auto m = gbt::gbt_train(x, y, {.n_trees = 7});
  Artifact a;
  model_io::store(a, m);
  const auto back = model_io::load_gbt(Artifact::parse(a.serialize()));
  EXPECT_EQ(back, m);
}

// --- optimizer -------------------------------------------------------------------

TEST(AdamW, FirstStepMovesByLearningRate) {
  std::vector<double> p = {1.0, -2.0};
  const std::vector<double> g = {0.5, -3.0};
  AdamW opt({.learning_rate = 0.01}, {2});
  opt.step({std::span<double>(p)}, {std::span<const double>(g)});
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p[1], -2.0 + 0.01, 1e-9);
}

TEST(AdamW, DecoupledWeightDecay) {
  std::vector<double> p = {4.0};
  const std::vector<double> g = {0.0};
  AdamW opt({.learning_rate = 0.1, .weight_decay = 0.5}, {1});
  opt.step({std::span<double>(p)}, {std::span<const double>(g)});
  EXPECT_DOUBLE_EQ(p[0], 4.0 * (1 - 0.1 * 0.5));
}

// --- neural network --------------------------------------------------------------

TEST(Mlp, InitDeterminismAndShape) {
  const auto a = mlp::mlp_init(30, 6, 1), b = mlp::mlp_init(30, 6, 1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.ngram_compress.weight, mlp::mlp_init(30, 6, 2).ngram_compress.weight);
  for (double v : a.hidden1.bias) EXPECT_EQ(v, 0.0);
  const size_t d = 12;
  const auto big = mlp::mlp_init(1074, d, 0);
  EXPECT_EQ(big.parameter_count(), 1074u * 500 + 500 + d * 25 + 25 +
                                       525 * 256 + 256 + 256 * 128 + 128 +
                                       128 + 1);
  EXPECT_EQ(mlp::parameter_names().size(), big.parameters().size());
}

TEST(Mlp, ZeroModelOutputsZero) {
  const auto m = zero_model(10, 4);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(mlp::mlp_forward(m, random_input(rng, 10, 4)), 0.0);
  }
}

TEST(Mlp, SinglePathToy) {
  auto m = zero_model(1, 0);
  m.ngram_compress.weight[0] = 1;  // unit 0 <- input 0
  m.hidden1.weight[0] = 1;         // h1 unit 0 <- concat 0
  m.hidden2.weight[0] = 1;         // h2 unit 0 <- h1 unit 0
  m.output.weight[0] = 1;
  mlp::MlpInput x;
  x.ngrams = {{0, 2.0}};
  EXPECT_DOUBLE_EQ(mlp::mlp_forward(m, x), 2.0);
  x.ngrams = {{0, -2.0}};
  EXPECT_DOUBLE_EQ(mlp::mlp_forward(m, x), 0.0);
}

TEST(Mlp, InferenceIsPure) {
  const auto m = mlp::mlp_init(20, 5, 3);
  std::mt19937_64 rng(2);
  const auto x = random_input(rng, 20, 5);
  EXPECT_EQ(mlp::mlp_forward(m, x), mlp::mlp_forward(m, x));
  EXPECT_THROW(mlp::mlp_forward(m, random_input(rng, 20, 4)),
               std::invalid_argument);
}

TEST(Mlp, GradientCheckRandomSmall) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 5; ++t) {
    const auto m = mlp::mlp_init(8, 3, 100 + t);
    const auto x = random_input(rng, 8, 3);
    const auto r = mlp::mlp_grad_check(m, x, 0.3, 1e-5, 300, t);
    EXPECT_LT(r.max_relative_error, 1e-4)
        << "block " << r.worst_block << " index " << r.worst_index;
    const auto again = mlp::mlp_grad_check(m, x, 0.3, 1e-5, 300, t);
    EXPECT_EQ(again.max_relative_error, r.max_relative_error);
    EXPECT_EQ(again.worst_index, r.worst_index);
  }
}

TEST(Mlp, DeadPathGradientsAreZero) {
  const auto m = zero_model(4, 2);
  mlp::MlpInput x;
  x.other = {0.0, 0.0};
  mlp::ForwardState st;
  const double y = mlp::forward(m, x, mlp::Mode::kInfer, nullptr, st);
  mlp::Gradients g(m);
  mlp::backward(m, x, st, 2.0 * (y - 1.0), g);
  // Only the output bias sees a non-zero gradient.
  for (size_t b = 0; b + 1 < g.blocks.size(); ++b) {
    for (double v : g.blocks[b]) EXPECT_EQ(v, 0.0) << "block " << b;
  }
  const auto r = mlp::mlp_grad_check(m, x, 1.0, 1e-5, 1000000, 0);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

namespace {

mlp::Dataset linear_dataset(std::mt19937_64& rng, size_t n) {
  mlp::Dataset d{6, 2, {}, {}};
  for (size_t i = 0; i < n; ++i) {
    auto x = random_input(rng, 6, 2);
    d.targets.push_back(std::clamp(0.5 + 0.3 * x.other[0], 0.0, 1.0));
    d.inputs.push_back(std::move(x));
  }
  return d;
}

}  // namespace

TEST(Mlp, TrainingIsDeterministic) {
  std::mt19937_64 rng(4);
  const auto train = linear_dataset(rng, 60), dev = linear_dataset(rng, 20);
  mlp::TrainConfig cfg{.epochs = 3, .seed = 9};
  const auto a = mlp::mlp_train(train, dev, cfg, "fp");
  const auto b = mlp::mlp_train(train, dev, cfg, "fp");
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.dev_mse, b.dev_mse);
  EXPECT_EQ(a.model.vocab_fingerprint, "fp");
}

TEST(Mlp, PatienceZeroStopsAfterFirstEpoch) {
  std::mt19937_64 rng(4);
  const auto train = linear_dataset(rng, 40), dev = linear_dataset(rng, 10);
  const auto r =
      mlp::mlp_train(train, dev, {.epochs = 40, .patience = 0, .seed = 1});
  EXPECT_EQ(r.epochs_run, 1);
  EXPECT_EQ(r.best_epoch, 1);
  EXPECT_EQ(r.dev_mse.size(), 1u);
}

TEST(Mlp, ReturnsBestEpochWeights) {
  std::mt19937_64 rng(6);
  const auto train = linear_dataset(rng, 80), dev = linear_dataset(rng, 20);
  const auto r =
      mlp::mlp_train(train, dev, {.epochs = 8, .patience = 3, .seed = 2});
  ASSERT_GE(r.best_epoch, 1);
  const double best = *std::min_element(r.dev_mse.begin(), r.dev_mse.end());
  EXPECT_DOUBLE_EQ(mlp::mean_squared_error(r.model, dev), best);
}

TEST(Mlp, NonFiniteLossIsReported) {
  std::mt19937_64 rng(4);
  auto train = linear_dataset(rng, 10);
  const auto dev = linear_dataset(rng, 5);
  train.targets[3] = NAN;
  try {
    mlp::mlp_train(train, dev, {.epochs = 2, .seed = 0});
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Mlp, ArtifactRoundTripIsExact) {
  const auto m = mlp::mlp_init(7, 3, 11);
  Artifact a;
  model_io::store(a, m, mlp::TrainConfig{});
  const auto back = model_io::load_mlp(Artifact::parse(a.serialize()));
  EXPECT_EQ(back.parameters().size(), m.parameters().size());
  auto pb = back.parameters();
  auto pm = m.parameters();
  for (size_t b = 0; b < pm.size(); ++b) {
    ASSERT_EQ(pb[b].size(), pm[b].size());
    for (size_t i = 0; i < pm[b].size(); ++i) EXPECT_EQ(pb[b][i], pm[b][i]);
  }
}

// --- ensemble --------------------------------------------------------------------

TEST(Ensemble, Examples) {
  using eval::Prediction;
  const std::vector<Prediction> a = {{"x", 0.0}, {"y", 1.0}};
  const std::vector<Prediction> b = {{"y", 0.0}, {"x", 1.0}};
  EXPECT_EQ(eval::ensemble_mean({a}), a);
  const auto ab = eval::ensemble_mean({a, b});
  EXPECT_EQ(ab, (std::vector<Prediction>{{"x", 0.5}, {"y", 0.5}}));
  const auto three = eval::ensemble_mean(
      std::vector<std::vector<double>>{{0.1, 0.4}, {0.2, 0.5}, {0.6, 0.0}});
  EXPECT_NEAR(three[0], 0.3, 1e-15);
  EXPECT_NEAR(three[1], 0.3, 1e-15);
  EXPECT_THROW(eval::ensemble_mean({a, {{"x", 0.1}}}), DataError);
  EXPECT_THROW(eval::ensemble_mean({a, {{"x", 0.1}, {"z", 0.2}}}), DataError);
}

TEST(Ensemble, PermutationEquivariantAndIdempotent) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::vector<double>> sets(4, std::vector<double>(6));
    for (auto& s : sets) {
      for (auto& v : s) v = u(rng);
    }
    const auto m = eval::ensemble_mean(sets);
    std::shuffle(sets.begin(), sets.end(), rng);
    EXPECT_EQ(eval::ensemble_mean(sets), m);
    std::vector<std::vector<double>> same(3, sets[0]);
    EXPECT_EQ(eval::ensemble_mean(same), sets[0]);
  }
}
