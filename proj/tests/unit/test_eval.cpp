#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "../oracles/oracles.hpp"
#include "esgread/eval.hpp"

using namespace esgread;
using namespace esgread::eval;

namespace {

std::vector<double> tied_vector(std::mt19937_64& rng, size_t n, int levels) {
  std::uniform_int_distribution<int> v(0, levels - 1);
  std::vector<double> out(n);
  for (auto& x : out) x = v(rng) / static_cast<double>(levels);
  return out;
}

}  // namespace

TEST(Errors, Examples) {
  const std::vector<double> a = {0.2, 0.7};
  EXPECT_DOUBLE_EQ(mse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mse(std::vector{0.0, 0.0}, std::vector{1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(mse(std::vector{0.5}, std::vector{0.0}), 0.25);
  EXPECT_DOUBLE_EQ(mae(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mae(std::vector{0.0, 1.0}, std::vector{1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(mae(std::vector{0.5, 0.5}, std::vector{0.0, 1.0}), 0.5);
  EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), DataError);
  EXPECT_THROW(mae(std::vector{1.0}, std::vector{1.0, 2.0}), DataError);
}

TEST(Errors, PermutationInvariantAndMaeBound) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<size_t> idx(25);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> p(25), g(25);
    for (size_t i = 0; i < 25; ++i) {
      p[i] = u(rng);
      g[i] = u(rng);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> ps, gs;
    for (size_t i : idx) {
      ps.push_back(p[i]);
      gs.push_back(g[i]);
    }
    EXPECT_NEAR(mse(ps, gs), mse(p, g), 1e-15);
    EXPECT_NEAR(mae(ps, gs), mae(p, g), 1e-15);
    EXPECT_LE(mae(p, g), std::sqrt(mse(p, g)) + 1e-15);
  }
}

TEST(KendallTau, HandExamples) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> r = {5, 4, 3, 2, 1};
  for (auto f : {kendall_tau_b_pairwise, kendall_tau_b_merge, kendall_tau_b}) {
    EXPECT_EQ(f(a, a), 1.0);
    EXPECT_EQ(f(a, r), -1.0);
    EXPECT_EQ(f(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 3}),
              0.8);
  }
}

TEST(KendallTau, UndefinedWhenAllTied) {
  const std::vector<double> c = {0.5, 0.5, 0.5}, g = {0.1, 0.2, 0.3};
  EXPECT_THROW(kendall_tau_b(c, g), UndefinedMetric);
  EXPECT_THROW(kendall_tau_b_merge(g, c), UndefinedMetric);
  EXPECT_THROW(kendall_tau_b(std::vector{1.0}, std::vector{1.0}), DataError);
}

TEST(KendallTau, MergeMatchesPairOracle) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<size_t> n(2, 200);
  std::uniform_int_distribution<int> levels(2, 12);
  int compared = 0;
  for (int t = 0; t < 300; ++t) {
    const auto x = tied_vector(rng, n(rng), levels(rng));
    const auto y = tied_vector(rng, x.size(), levels(rng));
    const double o = oracle::kendall_tau_b(x, y);
    if (std::isnan(o)) {
      EXPECT_THROW(kendall_tau_b_merge(x, y), UndefinedMetric);
      continue;
    }
    EXPECT_EQ(kendall_tau_b_merge(x, y), o);
    EXPECT_EQ(kendall_tau_b_pairwise(x, y), o);
    ++compared;
  }
  EXPECT_GT(compared, 250);
}

TEST(KendallTau, InvariantUnderIncreasingTransform) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 100; ++t) {
    const auto x = tied_vector(rng, 60, 7);
    const auto y = tied_vector(rng, 60, 5);
    std::vector<double> fx;
    for (double v : x) fx.push_back(std::exp(3 * v) - 10);
    EXPECT_EQ(kendall_tau_b(fx, y), kendall_tau_b(x, y));
  }
}

TEST(KendallTau, LargeInputUsesMergePath) {
  std::mt19937_64 rng(23);
  const auto x = tied_vector(rng, 5000, 30);
  const auto y = tied_vector(rng, 5000, 7);
  EXPECT_EQ(kendall_tau_b(x, y), kendall_tau_b_pairwise(x, y));
}

TEST(PredictionFile, RoundTripAndErrors) {
  const std::vector<Prediction> p = {{"a", 0.25}, {"b", 1.0 / 3.0}};
  EXPECT_EQ(parse_predictions(serialize_predictions(p)), p);
  EXPECT_EQ(serialize_predictions({{"c", 1.7}, {"d", -0.2}}),
            "id,score\nc,1\nd,0\n");
  EXPECT_THROW(parse_predictions("id;score\n"), DataError);
  EXPECT_THROW(parse_predictions("id,score\na,0.5\na,0.4\n"), DataError);
  EXPECT_THROW(parse_predictions("id,score\na,1.5\n"), DataError);
  EXPECT_THROW(parse_predictions("id,score\na,nan\n"), DataError);
  EXPECT_THROW(parse_predictions("id,score\na\n"), DataError);
}

TEST(Evaluate, PerfectAndConstant) {
  const std::vector<std::pair<std::string, double>> gold = {
      {"a", 0.0}, {"b", 0.5}, {"c", 1.0}};
  const auto perfect =
      evaluate({{"c", 1.0}, {"a", 0.0}, {"b", 0.5}, {"extra", 0.3}}, gold);
  EXPECT_EQ(perfect.n, 3u);
  EXPECT_EQ(perfect.mse, 0.0);
  EXPECT_EQ(perfect.mae, 0.0);
  ASSERT_TRUE(perfect.kendall_tau_b);
  EXPECT_EQ(*perfect.kendall_tau_b, 1.0);
  const auto flat = evaluate({{"a", 0.4}, {"b", 0.4}, {"c", 0.4}}, gold);
  EXPECT_FALSE(flat.kendall_tau_b);
  EXPECT_FALSE(flat.tau_note.empty());
  EXPECT_NE(format_report_table({flat}).find("undef"), std::string::npos);
  EXPECT_TRUE(report_to_json(flat)["kendall_tau_b"].is_null());
}

TEST(Evaluate, MissingIdIsNamed) {
  try {
    evaluate({{"a", 0.1}}, {{"a", 0.0}, {"zz9", 1.0}});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("zz9"), std::string::npos);
  }
}
