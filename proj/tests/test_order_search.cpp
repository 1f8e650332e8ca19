#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

namespace stagecause {
namespace {

Dataset random_data(std::uint64_t seed, std::size_t p, std::size_t n) {
  auto truth = random_staged_tree(GenConfig{p, 2 + seed % 2, 1 + seed % 3, seed});
  return sample(truth, n, seed + 1);
}

TEST(ScoreCache, EmptyPredecessorSetIsMarginal) {
  auto data = random_data(1, 3, 300);
  ScoreCache cache(data, {});
  const auto& entry = stratum_score(cache, 1, {});
  EXPECT_EQ(entry.staging, (std::vector<StageId>{0}));
  EXPECT_TRUE(std::isfinite(entry.score));
}

TEST(ScoreCache, KeyIsThePredecessorSet) {
  auto data = random_data(2, 3, 300);
  ScoreCache cache(data, {});
  const auto& a = stratum_score(cache, 0, {1, 2});
  const auto& b = stratum_score(cache, 0, {2, 1});
  EXPECT_EQ(&a, &b);
  EXPECT_EQ(cache.evaluations(), 1u);
  const auto staging = a.staging;
  EXPECT_EQ(stratum_score(cache, 0, {1, 2}).staging, staging);
  EXPECT_THROW(stratum_score(cache, 0, {0, 1}), std::invalid_argument);
}

TEST(ScoreCache, ScoresAreQuantized) {
  auto data = random_data(3, 3, 300);
  ScoreCache cache(data, {});
  const double s = stratum_score(cache, 2, {0}).score;
  EXPECT_EQ(s, std::ldexp(std::round(std::ldexp(s, 20)), -20));
}

TEST(Dp, EvaluationCount) {
  for (std::size_t p = 1; p <= 5; ++p) {
    auto data = random_data(p, p, 200);
    ScoreCache cache(data, {});
    auto res = best_order_dp(cache);
    EXPECT_EQ(res.evaluations, p * (std::size_t{1} << (p - 1)));
  }
}

TEST(Dp, ScoreIsSumAlongOrder) {
  auto data = random_data(4, 4, 1000);
  ScoreCache cache(data, {});
  auto res = best_order_dp(cache);
  double total = 0.0;
  std::vector<std::size_t> preds;
  for (auto v : res.order) {
    total += stratum_score(cache, v, preds).score;
    preds.push_back(v);
  }
  EXPECT_EQ(total, res.score);
  // The fitted tree's BIC matches up to the quantization.
  EXPECT_NEAR(bic(res.tree, data), res.score, 1e-5 * res.order.size() + 1e-9 * std::abs(res.score));
}

TEST(Dp, AdditivityWithFitOrder) {
  auto data = random_data(5, 4, 800);
  ScoreCache cache(data, {});
  const std::vector<std::size_t> order{3, 1, 0, 2};
  auto fit = fit_order_scored(data, order, {});
  std::vector<std::size_t> preds;
  for (std::size_t i = 0; i < order.size(); ++i) {
    EXPECT_EQ(quantize_score(fit.stratum_scores[i]), stratum_score(cache, order[i], preds).score);
    preds.push_back(order[i]);
  }
}

TEST(Dp, MatchesExhaustiveMinimum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t p = 1 + seed % 4;
    auto data = random_data(seed + 100, p, 500);
    for (auto method : {StagingMethod::Bhc, StagingMethod::Kmeans}) {
      SearchOptions opts;
      opts.method = method;
      ScoreCache cache(data, opts);
      auto dp = best_order_dp(cache);
      auto ex = best_order_exhaustive(cache);
      EXPECT_EQ(dp.score, ex.score);
      EXPECT_NE(std::find(ex.tied_orders.begin(), ex.tied_orders.end(), dp.order), ex.tied_orders.end());
    }
  }
}

TEST(Exhaustive, ReportsAllOrders) {
  auto data = random_data(7, 3, 400);
  auto res = best_order_exhaustive(data, {});
  ASSERT_EQ(res.all_orders.size(), 6u);
  double min_score = res.all_orders.front().second;
  for (const auto& [order, score] : res.all_orders) min_score = std::min(min_score, score);
  EXPECT_EQ(res.score, min_score);
  auto single = best_order_exhaustive(random_data(8, 1, 50), {});
  EXPECT_EQ(single.all_orders.size(), 1u);
}

TEST(Exhaustive, BalancedIndependentDataTiesEveryOrder) {
  // Every cell appears equally often: all strata collapse to one stage.
  std::vector<std::vector<int>> rows;
  for (int rep = 0; rep < 10; ++rep)
    for (int code = 0; code < 8; ++code) rows.push_back({code >> 2 & 1, code >> 1 & 1, code & 1});
  auto data = testing::make_dataset({testing::binary("A"), testing::binary("B"), testing::binary("C")}, rows);
  ScoreCache cache(data, {});
  auto ex = best_order_exhaustive(cache);
  EXPECT_EQ(ex.tied_orders.size(), 6u);
  auto dp = best_order_dp(cache);
  // Smallest index wins each step, working back from the full set.
  EXPECT_EQ(dp.order, (std::vector<std::size_t>{2, 1, 0}));
}

TEST(Dp, RespectsLimit) {
  auto data = random_data(9, 3, 50);
  ScoreCache cache(data, {});
  EXPECT_THROW(best_order_dp(cache, 1, 2), std::invalid_argument);
}

TEST(Dp, ThreadedMatchesSequential) {
  auto data = random_data(10, 4, 600);
  SearchOptions opts;
  opts.method = StagingMethod::Kmeans;
  auto a = best_order_dp(data, opts, 1);
  auto b = best_order_dp(data, opts, 4);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.tree.staging, b.tree.staging);
}

TEST(Dp, BivariatePrefersSimplerOrder) {
  auto data = sample(testing::bivariate_truth(), 5000, 3);
  auto res = best_order_dp(data, {});
  EXPECT_EQ(res.order, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(res.tree.vars[0].name, "X2");
}

}  // namespace
}  // namespace stagecause
