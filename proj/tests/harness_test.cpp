#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "elicit/harness.hpp"
#include "elicit/synthetic.hpp"
#include "test_support.hpp"

namespace elicit {
namespace {

using testing::obs;

std::vector<UserId> user_ids(std::uint32_t n) {
  std::vector<UserId> out;
  for (std::uint32_t u = 0; u < n; ++u) out.push_back(UserId{u});
  return out;
}

std::vector<std::size_t> fold_sizes(const FoldPlan& plan) {
  std::vector<std::size_t> sizes(plan.fold_count, 0);
  for (const auto& [u, f] : plan.assignments) ++sizes[f];
  return sizes;
}

TEST(PlanFolds, ExactDivision) {
  const auto plan = plan_folds(user_ids(10), 5, 1);
  EXPECT_EQ(fold_sizes(plan), std::vector<std::size_t>(5, 2));
}

TEST(PlanFolds, ThousandsOfUsers) {
  auto sizes = fold_sizes(plan_folds(user_ids(2786), 5, 99));
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{557, 557, 557, 557, 558}));
}

TEST(PlanFolds, DeterministicBySeed) {
  const auto a = plan_folds(user_ids(50), 5, 123);
  const auto b = plan_folds(user_ids(50), 5, 123);
  const auto c = plan_folds(user_ids(50), 5, 124);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_NE(a.assignments, c.assignments);
}

TEST(PlanFolds, CoversEveryUserOnce) {
  for (std::uint32_t n = 5; n < 40; ++n) {
    const auto plan = plan_folds(user_ids(n), 5, n);
    EXPECT_EQ(plan.assignments.size(), n);
    const auto sizes = fold_sizes(plan);
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
  }
}

TEST(PlanFolds, TooFewUsers) {
  try {
    plan_folds(user_ids(4), 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewUsers);
  }
}

std::vector<Observation> ratings_for(std::uint32_t user, std::uint32_t count) {
  std::vector<Observation> out;
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(obs(user, i, 1 + i % 5));
  return out;
}

TEST(SplitUser, TwentyRatings) {
  const auto split = split_user(UserId{0}, ratings_for(0, 20), 7);
  EXPECT_EQ(split.test.size(), 5u);
  EXPECT_EQ(split.candidate.size(), 15u);
  EXPECT_TRUE(split.train.empty());
}

TEST(SplitUser, FortyRatings) {
  const auto split = split_user(UserId{0}, ratings_for(0, 40), 7);
  EXPECT_EQ(split.candidate.size(), 35u);
}

TEST(SplitUser, NineteenRatingsRejected) {
  try {
    split_user(UserId{0}, ratings_for(0, 19), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientRatings);
  }
}

TEST(SplitUser, PartitionsItemsAndVariesWithSeed) {
  const auto ratings = ratings_for(0, 30);
  std::set<std::vector<std::uint32_t>> distinct_tests;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto split = split_user(UserId{0}, ratings, seed);
    std::set<ItemId> seen;
    for (const auto& o : split.test) EXPECT_TRUE(seen.insert(o.item).second);
    for (const auto& o : split.candidate) EXPECT_TRUE(seen.insert(o.item).second);
    EXPECT_EQ(seen.size(), 30u);
    std::vector<std::uint32_t> t;
    for (const auto& o : split.test) t.push_back(o.item.value);
    distinct_tests.insert(t);
  }
  EXPECT_GT(distinct_tests.size(), 10u);
}

// Three target users, two auxiliary-only items per user.
struct SmallWorld {
  Dataset target;
  Dataset auxiliary;
  SmallWorld() {
    std::vector<Rating> t, a;
    for (int u = 0; u < 6; ++u) {
      for (int i = 0; i < 22; ++i) {
        t.push_back({"u" + std::to_string(u), "t" + std::to_string(i), 1 + (u + i) % 5, Domain::Target});
      }
      for (int i = 0; i < 3; ++i) {
        a.push_back({"u" + std::to_string(u), "a" + std::to_string(i), 1 + (u * i) % 5, Domain::Auxiliary});
      }
    }
    target = build_dataset(t, Domain::Target);
    auxiliary = build_dataset(a, Domain::Auxiliary);
  }
};

SplitMap splits_for(const Corpus& corpus, const FoldPlan& plan, std::size_t fold) {
  SplitMap splits;
  for (UserId u : plan.users_in(fold)) splits.emplace(u, split_user(u, corpus.target_ratings_of(u), u.value));
  return splits;
}

TEST(Corpus, ItemSpacesDisjoint) {
  SmallWorld w;
  const Corpus corpus(w.target, &w.auxiliary);
  EXPECT_EQ(corpus.item_count(), 25u);
  EXPECT_EQ(corpus.target_item_count(), 22u);
  EXPECT_EQ(corpus.item_domain(*corpus.find_item(Domain::Auxiliary, "a0")), Domain::Auxiliary);
  EXPECT_EQ(corpus.item_name(*corpus.find_item(Domain::Target, "t0")), "target:t0");
  EXPECT_EQ(corpus.item_name(*corpus.find_item(Domain::Auxiliary, "a0")), "auxiliary:a0");
  for (const auto& o : corpus.auxiliary()) EXPECT_GE(o.item.value, 22u);
}

TEST(TrainingPool, SingleDomainExcludesTestUsersAtStart) {
  SmallWorld w;
  const Corpus corpus(w.target, &w.auxiliary);
  const auto plan = plan_folds(corpus.target_users(), 3, 5);
  const auto splits = splits_for(corpus, plan, 0);
  const auto pool = build_training_pool(plan, 0, corpus, Scenario::SingleDomain, splits);
  for (const auto& o : pool) {
    EXPECT_FALSE(splits.contains(o.user));
    EXPECT_EQ(o.domain, Domain::Target);
  }
  EXPECT_EQ(pool.size(), 4u * 22u);
}

TEST(TrainingPool, CrossDomainAddsAllAuxiliaryRatings) {
  SmallWorld w;
  const Corpus corpus(w.target, &w.auxiliary);
  const auto plan = plan_folds(corpus.target_users(), 3, 5);
  const auto splits = splits_for(corpus, plan, 0);
  const auto pool = build_training_pool(plan, 0, corpus, Scenario::CrossDomain, splits);
  EXPECT_EQ(pool.size(), 4u * 22u + 6u * 3u);
  std::size_t test_user_aux = 0;
  for (const auto& o : pool) {
    if (!splits.contains(o.user)) continue;
    EXPECT_EQ(o.domain, Domain::Auxiliary);
    ++test_user_aux;
  }
  EXPECT_EQ(test_user_aux, 2u * 3u);
}

TEST(TrainingPool, GrowsByOneRatingPerElicitingUser) {
  SmallWorld w;
  const Corpus corpus(w.target, &w.auxiliary);
  const auto plan = plan_folds(corpus.target_users(), 3, 5);
  auto splits = splits_for(corpus, plan, 1);
  const auto before = build_training_pool(plan, 1, corpus, Scenario::CrossDomain, splits);
  FactorModel model(corpus.user_count(), corpus.item_count(), 1, 3.0);
  const auto moved = elicit_step(model, StrategyKind::Popularity, pool_stats(before, corpus), splits);
  const auto after = build_training_pool(plan, 1, corpus, Scenario::CrossDomain, splits);
  EXPECT_EQ(moved, splits.size());
  EXPECT_EQ(after.size(), before.size() + splits.size());
}

TEST(TrainingPool, MissingSplitRejected) {
  SmallWorld w;
  const Corpus corpus(w.target);
  const auto plan = plan_folds(corpus.target_users(), 3, 5);
  auto splits = splits_for(corpus, plan, 0);
  splits.erase(splits.begin());
  try {
    build_training_pool(plan, 0, corpus, Scenario::SingleDomain, splits);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingSplit);
  }
}

TEST(PoolStats, TargetOnlyWithPoolPopulation) {
  std::vector<Observation> pool{obs(0, 0, 5), obs(1, 0, 4), obs(1, 1, 2), obs(2, 3, 3, Domain::Auxiliary)};
  SmallWorld w;
  const Corpus corpus(w.target, &w.auxiliary);
  const auto stats = pool_stats(pool, corpus);
  EXPECT_EQ(stats.population(), 2u);
  EXPECT_EQ(stats.count(ItemId{0}), 2u);
  EXPECT_EQ(stats.count(ItemId{1}), 1u);
  EXPECT_EQ(stats.count(ItemId{3}), 0u);
}

TEST(ElicitStep, MovesMostPopularCandidate) {
  SplitMap splits;
  UserSplit s{UserId{0}, {}, {obs(0, 0, 3), obs(0, 1, 4)}, {}};
  splits.emplace(UserId{0}, s);
  RatingStats stats(10, 2);
  for (int k = 0; k < 9; ++k) stats.add(ItemId{0}, 3);
  stats.add(ItemId{1}, 2);
  FactorModel model(1, 2, 1, 3.0);
  EXPECT_EQ(elicit_step(model, StrategyKind::Popularity, stats, splits), 1u);
  ASSERT_EQ(splits.at(UserId{0}).train.size(), 1u);
  EXPECT_EQ(splits.at(UserId{0}).train.front().item, ItemId{0});
  EXPECT_EQ(splits.at(UserId{0}).candidate.size(), 1u);
}

TEST(ElicitStep, SkipsUsersWithoutCandidates) {
  SplitMap splits;
  UserSplit s{UserId{0}, {obs(0, 2, 5)}, {}, {obs(0, 3, 1)}};
  splits.emplace(UserId{0}, s);
  FactorModel model(1, 4, 1, 3.0);
  RatingStats stats(1, 4);
  EXPECT_EQ(elicit_step(model, StrategyKind::HighestPredicted, stats, splits), 0u);
  EXPECT_EQ(splits.at(UserId{0}).train.size(), 1u);
  EXPECT_EQ(splits.at(UserId{0}).test.size(), 1u);
}

TEST(ElicitStep, ConservesProfilePlusCandidates) {
  SmallWorld w;
  const Corpus corpus(w.target);
  const auto plan = plan_folds(corpus.target_users(), 2, 5);
  auto splits = splits_for(corpus, plan, 0);
  const auto pool = build_training_pool(plan, 0, corpus, Scenario::SingleDomain, splits);
  const auto model = train(pool, corpus.user_count(), corpus.item_count(), testing::quick_hyperparams());
  for (auto strategy : kAllStrategies) {
    auto copy = splits;
    elicit_step(model, strategy, pool_stats(pool, corpus), copy);
    for (const auto& [u, s] : copy) {
      EXPECT_EQ(s.train.size() + s.candidate.size(), splits.at(u).train.size() + splits.at(u).candidate.size());
      EXPECT_EQ(s.train.size(), 1u);
    }
  }
}

Corpus synthetic_corpus(std::size_t users, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.users = users;
  spec.target_items = 80;
  spec.auxiliary_items = 80;
  spec.density = 0.35;
  spec.seed = seed;
  static std::map<std::pair<std::size_t, std::uint64_t>, std::pair<Dataset, Dataset>> cache;
  auto [it, fresh] = cache.try_emplace({users, seed});
  if (fresh) {
    const auto data = generate_synthetic(spec);
    it->second = {build_dataset(data.target, Domain::Target), build_dataset(data.auxiliary, Domain::Auxiliary)};
  }
  return Corpus(it->second.first, &it->second.second);
}

ExperimentOptions quick_options(std::optional<StrategyKind> strategy, Scenario scenario = Scenario::SingleDomain) {
  ExperimentOptions opt;
  opt.scenario = scenario;
  opt.strategy = strategy;
  opt.hyperparams = testing::quick_hyperparams();
  opt.seed = 77;
  return opt;
}

TEST(RunExperiment, ZeroElicitationEqualsBaseline) {
  const auto corpus = synthetic_corpus(40, 3);
  auto opt = quick_options(StrategyKind::Entropy0);
  opt.max_elicited = 0;
  const auto with_strategy = run_experiment(corpus, opt);
  const auto baseline = run_experiment(corpus, quick_options(std::nullopt));
  ASSERT_EQ(with_strategy.size(), 1u);
  ASSERT_EQ(baseline.size(), 1u);
  EXPECT_EQ(with_strategy[0].mae, baseline[0].mae);
  EXPECT_EQ(with_strategy[0].spread, baseline[0].spread);
  EXPECT_FALSE(baseline[0].improvement_mae.has_value());
}

TEST(RunExperiment, ProfilesGrowOneRatingPerIteration) {
  const auto corpus = synthetic_corpus(40, 3);
  auto opt = quick_options(StrategyKind::LowestPredicted);
  opt.observer = [](const IterationTrace& trace) {
    for (const auto& [u, s] : *trace.splits) {
      EXPECT_EQ(s.train.size(), trace.iteration);
      EXPECT_EQ(s.test.size(), kTestRatingsPerUser);
    }
  };
  const auto rows = run_experiment(corpus, opt);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t t = 0; t < rows.size(); ++t) EXPECT_EQ(rows[t].iteration, t);
  EXPECT_NEAR(*rows[0].improvement_mae, 0.0, 1e-12);
}

TEST(RunExperiment, DeterministicAcrossRunsAndWorkerCounts) {
  const auto corpus = synthetic_corpus(40, 4);
  auto opt = quick_options(StrategyKind::HighestPredicted, Scenario::CrossDomain);
  const auto a = run_experiment(corpus, opt);
  opt.workers = 3;
  const auto b = run_experiment(corpus, opt);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].mae, b[k].mae);
    EXPECT_EQ(a[k].spread, b[k].spread);
  }
}

TEST(RunExperiment, CrossDomainNeedsAuxiliary) {
  SmallWorld w;
  const Corpus corpus(w.target);
  EXPECT_THROW(run_experiment(corpus, quick_options(std::nullopt, Scenario::CrossDomain)), Error);
}

}  // namespace
}  // namespace elicit
