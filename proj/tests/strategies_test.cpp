#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "elicit/strategies.hpp"
#include "test_support.hpp"

namespace elicit {
namespace {

using testing::items;

// Bias-only model: predict(u, i) = 3 + item_bias[i] (user unknown).
FactorModel model_with_item_biases(const std::vector<double>& biases) {
  FactorModel m(1, biases.size(), 1, 3.0);
  for (std::uint32_t i = 0; i < biases.size(); ++i) {
    m.set_item_known(ItemId{i});
    m.item_bias(ItemId{i}) = biases[i];
  }
  return m;
}

double score_of(const std::vector<ScoredCandidate>& scored, std::uint32_t item) {
  for (const auto& c : scored) {
    if (c.item.value == item) return c.score;
  }
  ADD_FAILURE() << "item " << item << " not scored";
  return NAN;
}

TEST(StrategyNames, ParseAndPrint) {
  for (auto s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_FALSE(parse_strategy("random").has_value());
  EXPECT_FALSE(parse_strategy("none").has_value());
}

TEST(HighestPredicted, ScoreIsPrediction) {
  const auto m = model_with_item_biases({1.5, -1.0});
  const auto scored = score_highest_predicted(m, UserId{0}, items({0, 1}));
  EXPECT_DOUBLE_EQ(score_of(scored, 0), 4.5);
  EXPECT_DOUBLE_EQ(score_of(scored, 1), 2.0);
}

TEST(HighestPredicted, ConstantPredictions) {
  const auto m = model_with_item_biases({0.0, 0.0, 0.0});
  for (const auto& c : score_highest_predicted(m, UserId{0}, items({0, 1, 2}))) EXPECT_DOUBLE_EQ(c.score, 3.0);
}

TEST(HighestPredicted, FollowsBiasOrder) {
  const auto m = model_with_item_biases({1.0, 0.0, -1.0});
  const auto scored = score_highest_predicted(m, UserId{0}, items({0, 1, 2}));
  EXPECT_GT(score_of(scored, 0), score_of(scored, 1));
  EXPECT_GT(score_of(scored, 1), score_of(scored, 2));
}

TEST(HighestPredicted, EmptyCandidatesRejected) {
  const auto m = model_with_item_biases({0.0});
  try {
    score_highest_predicted(m, UserId{0}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCandidateSet);
  }
  EXPECT_THROW(score_lowest_predicted(m, UserId{0}, {}), Error);
}

TEST(LowestPredicted, MaxRatingMinusPrediction) {
  const auto m = model_with_item_biases({1.2, 2.0});
  const auto scored = score_lowest_predicted(m, UserId{0}, items({0, 1}));
  EXPECT_NEAR(score_of(scored, 0), 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(score_of(scored, 1), 0.0);
}

TEST(LowestPredicted, ReversesHighestOnTieFreeScores) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> bias(-1.9, 1.9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> biases(12);
    for (auto& b : biases) b = bias(rng);
    const auto m = model_with_item_biases(biases);
    std::vector<ItemId> cand;
    for (std::uint32_t i = 0; i < biases.size(); ++i) cand.push_back(ItemId{i});
    auto high = rank_candidates(score_highest_predicted(m, UserId{0}, cand));
    const auto low = rank_candidates(score_lowest_predicted(m, UserId{0}, cand));
    std::reverse(high.begin(), high.end());
    EXPECT_EQ(high, low);
  }
}

RatingStats stats_with(std::size_t population, const std::vector<std::vector<int>>& per_item_values) {
  RatingStats s(population, per_item_values.size());
  for (std::uint32_t i = 0; i < per_item_values.size(); ++i) {
    for (int v : per_item_values[i]) s.add(ItemId{i}, v);
  }
  return s;
}

TEST(Entropy0, NeverRatedIsZero) {
  const auto s = stats_with(10, {{}});
  EXPECT_NEAR(score_of(score_entropy0(s, items({0})), 0), 0.0, 1e-9);
}

TEST(Entropy0, UniformOverFiveValues) {
  const auto s = stats_with(10, {{1, 1, 2, 2, 3, 3, 4, 4, 5, 5}});
  EXPECT_NEAR(score_of(score_entropy0(s, items({0})), 0), 2.321928094887362, 1e-9);
}

TEST(Entropy0, HalfUnknownHalfFives) {
  const auto s = stats_with(10, {{5, 5, 5, 5, 5}});
  EXPECT_NEAR(score_of(score_entropy0(s, items({0})), 0), 1.0, 1e-9);
}

TEST(Entropy0, BoundedByLogSix) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t population = 1 + rng() % 40;
    std::vector<int> values(rng() % (population + 1));
    for (auto& v : values) v = 1 + static_cast<int>(rng() % 5);
    const auto s = stats_with(population, {values});
    const double h = entropy0(s, ItemId{0});
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(6.0) + 1e-12);
  }
}

TEST(Popularity, ScoreIsCount) {
  const auto s = stats_with(10, {{1, 2, 3, 4, 5}, {5, 5, 5}, {}});
  const auto scored = score_popularity(s, items({0, 1, 2}));
  EXPECT_DOUBLE_EQ(score_of(scored, 0), 5.0);
  EXPECT_DOUBLE_EQ(score_of(scored, 1), 3.0);
  EXPECT_DOUBLE_EQ(score_of(scored, 2), 0.0);
}

TEST(NonPersonalized, SameScoresForEveryUser) {
  FactorModel m(5, 3, 1, 3.0);
  const auto s = stats_with(10, {{1, 2}, {5}, {3, 3, 3}});
  for (auto strategy : {StrategyKind::Entropy0, StrategyKind::Popularity}) {
    const auto reference = score_candidates(strategy, m, s, UserId{0}, items({0, 1, 2}));
    for (std::uint32_t u = 1; u < 5; ++u) {
      const auto other = score_candidates(strategy, m, s, UserId{u}, items({0, 1, 2}));
      for (std::size_t k = 0; k < reference.size(); ++k) EXPECT_EQ(other[k].score, reference[k].score);
    }
  }
}

TEST(RankCandidates, DescendingScore) {
  EXPECT_EQ(rank_candidates({{ItemId{0}, 1.0}, {ItemId{1}, 2.0}}), items({1, 0}));
}

TEST(RankCandidates, TiesByIdentifier) {
  EXPECT_EQ(rank_candidates({{ItemId{1}, 1.0}, {ItemId{0}, 1.0}}), items({0, 1}));
}

TEST(RankCandidates, PopularityWithTie) {
  // x=0, y=1, z=2 with counts 7, 7, 9.
  const auto s = stats_with(20, {std::vector<int>(7, 3), std::vector<int>(7, 4), std::vector<int>(9, 5)});
  EXPECT_EQ(rank_candidates(score_popularity(s, items({0, 1, 2}))), items({2, 0, 1}));
}

TEST(RankCandidates, NonFiniteRejected) {
  try {
    rank_candidates({{ItemId{0}, 1.0}, {ItemId{4}, NAN}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteScore);
  }
}

TEST(RankCandidates, OutputIsPermutation) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredCandidate> scored;
    const std::size_t n = 1 + rng() % 20;
    for (std::uint32_t i = 0; i < n; ++i) scored.push_back({ItemId{i * 3}, static_cast<double>(rng() % 4)});
    auto ranked = rank_candidates(scored);
    std::sort(ranked.begin(), ranked.end());
    std::vector<ItemId> expected;
    for (const auto& c : scored) expected.push_back(c.item);
    EXPECT_EQ(ranked, expected);
  }
}

}  // namespace
}  // namespace elicit
