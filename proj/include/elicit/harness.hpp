#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/core.hpp"
#include "elicit/error.hpp"
#include "elicit/metrics.hpp"
#include "elicit/mf.hpp"
#include "elicit/seeding.hpp"
#include "elicit/strategies.hpp"

namespace elicit {

inline constexpr std::size_t kTestRatingsPerUser = 5;
inline constexpr std::size_t kMinCandidateRatings = 15;
inline constexpr std::size_t kMinUserRatings = kTestRatingsPerUser + kMinCandidateRatings;

enum class Scenario { SingleDomain, CrossDomain };

constexpr std::string_view to_string(Scenario s) {
  return s == Scenario::SingleDomain ? "single" : "cross";
}

inline std::optional<Scenario> parse_scenario(std::string_view s) {
  if (s == "single") return Scenario::SingleDomain;
  if (s == "cross") return Scenario::CrossDomain;
  return std::nullopt;
}

/// Target and auxiliary ratings mapped into one index space. Users are shared
/// across domains; target items occupy [0, target_item_count) and auxiliary
/// items follow, so the two item spaces can never collide.
class Corpus {
 public:
  Corpus(const Dataset& target, const Dataset* auxiliary = nullptr) {
    if (target.domain() != Domain::Target) {
      throw Error(ErrorCode::DomainMismatch, "first dataset must be the target domain");
    }
    if (auxiliary && auxiliary->domain() != Domain::Auxiliary) {
      throw Error(ErrorCode::DomainMismatch, "second dataset must be the auxiliary domain");
    }
    std::vector<std::string> names = target.users().names();
    if (auxiliary) names.insert(names.end(), auxiliary->users().names().begin(), auxiliary->users().names().end());
    users_ = IdMap::from_names(std::move(names));
    target_items_ = target.items();
    if (auxiliary) auxiliary_items_ = auxiliary->items();

    auto remap = [&](const Dataset& ds, std::uint32_t item_offset, std::vector<Observation>& out) {
      out.reserve(ds.size());
      for (const auto& o : ds.observations()) {
        const UserId u{*users_.find(ds.users().name(o.user.value))};
        out.push_back({u, ItemId{o.item.value + item_offset}, o.value, ds.domain()});
      }
    };
    remap(target, 0, target_);
    if (auxiliary) remap(*auxiliary, static_cast<std::uint32_t>(target_items_.size()), auxiliary_);

    by_user_.assign(users_.size(), {});
    for (const auto& o : target_) by_user_[o.user.value].push_back(o);
    for (std::uint32_t u = 0; u < users_.size(); ++u) {
      if (!by_user_[u].empty()) target_users_.push_back(UserId{u});
    }
    for (std::uint32_t i = 0; i < target_items_.size(); ++i) target_item_ids_.push_back(ItemId{i});
  }

  std::size_t user_count() const { return users_.size(); }
  std::size_t item_count() const { return target_items_.size() + auxiliary_items_.size(); }
  std::size_t target_item_count() const { return target_items_.size(); }
  bool has_auxiliary() const { return !auxiliary_.empty(); }

  const std::string& user_name(UserId u) const { return users_.name(u.value); }
  std::optional<UserId> find_user(const std::string& name) const {
    if (auto u = users_.find(name)) return UserId{*u};
    return std::nullopt;
  }
  std::optional<ItemId> find_item(Domain domain, const std::string& name) const {
    if (domain == Domain::Target) {
      if (auto i = target_items_.find(name)) return ItemId{*i};
    } else if (auto i = auxiliary_items_.find(name)) {
      return ItemId{*i + static_cast<std::uint32_t>(target_items_.size())};
    }
    return std::nullopt;
  }
  Domain item_domain(ItemId i) const {
    return i.value < target_items_.size() ? Domain::Target : Domain::Auxiliary;
  }
  // Domain-qualified identifier, e.g. "target:B000123".
  std::string item_name(ItemId i) const {
    if (i.value < target_items_.size()) return "target:" + target_items_.name(i.value);
    return "auxiliary:" + auxiliary_items_.name(i.value - static_cast<std::uint32_t>(target_items_.size()));
  }

  const std::vector<Observation>& target() const { return target_; }
  const std::vector<Observation>& auxiliary() const { return auxiliary_; }
  const std::vector<UserId>& target_users() const { return target_users_; }
  std::span<const ItemId> target_items() const { return target_item_ids_; }
  std::span<const Observation> target_ratings_of(UserId u) const { return by_user_.at(u.value); }

 private:
  IdMap users_;
  IdMap target_items_;
  IdMap auxiliary_items_;
  std::vector<Observation> target_;
  std::vector<Observation> auxiliary_;
  std::vector<std::vector<Observation>> by_user_;
  std::vector<UserId> target_users_;
  std::vector<ItemId> target_item_ids_;
};

struct FoldPlan {
  std::size_t fold_count = 0;
  std::map<UserId, std::size_t> assignments;
  std::uint64_t seed = 0;

  std::vector<UserId> users_in(std::size_t fold) const {
    std::vector<UserId> out;
    for (const auto& [u, f] : assignments) {
      if (f == fold) out.push_back(u);
    }
    return out;
  }
};

/// Seeded shuffle of the users dealt round-robin into k folds, so fold sizes
/// differ by at most one.
inline FoldPlan plan_folds(std::span<const UserId> users, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "fold count must be positive");
  std::vector<UserId> order(users.begin(), users.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  if (order.size() < k) {
    throw Error(ErrorCode::TooFewUsers, std::to_string(order.size()) + " users for " + std::to_string(k) + " folds");
  }
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(std::span<UserId>(order));
  FoldPlan plan{k, {}, seed};
  for (std::size_t j = 0; j < order.size(); ++j) plan.assignments.emplace(order[j], j % k);
  return plan;
}

struct UserSplit {
  UserId user;
  std::vector<Observation> train;      // in elicitation order
  std::vector<Observation> candidate;  // ascending item
  std::vector<Observation> test;       // ascending item
};

/// Draws the test ratings uniformly at random; everything else becomes a
/// candidate. The train profile starts empty.
inline UserSplit split_user(UserId user, std::span<const Observation> ratings, std::uint64_t seed) {
  if (ratings.size() < kMinUserRatings) {
    throw Error(ErrorCode::InsufficientRatings, "user index " + std::to_string(user.value) + " has " +
                                                    std::to_string(ratings.size()) + " ratings, need " +
                                                    std::to_string(kMinUserRatings));
  }
  std::vector<Observation> shuffled(ratings.begin(), ratings.end());
  auto by_item = [](const Observation& a, const Observation& b) { return a.item < b.item; };
  std::sort(shuffled.begin(), shuffled.end(), by_item);
  Rng rng(seed);
  rng.shuffle(std::span<Observation>(shuffled));

  UserSplit split{user, {}, {}, {}};
  split.test.assign(shuffled.begin(), shuffled.begin() + kTestRatingsPerUser);
  split.candidate.assign(shuffled.begin() + kTestRatingsPerUser, shuffled.end());
  std::sort(split.test.begin(), split.test.end(), by_item);
  std::sort(split.candidate.begin(), split.candidate.end(), by_item);
  return split;
}

using SplitMap = std::map<UserId, UserSplit>;

/// Ratings of all non-test users, the current profiles of test users, and in
/// the cross-domain scenario every auxiliary rating.
inline std::vector<Observation> build_training_pool(const FoldPlan& plan, std::size_t test_fold,
                                                    const Corpus& corpus, Scenario scenario,
                                                    const SplitMap& splits) {
  std::vector<Observation> pool;
  pool.reserve(corpus.target().size() + corpus.auxiliary().size());
  for (const auto& [user, fold] : plan.assignments) {
    if (fold != test_fold) continue;
    if (!splits.contains(user)) {
      throw Error(ErrorCode::MissingSplit, "no split for test user " + corpus.user_name(user));
    }
  }
  for (const auto& o : corpus.target()) {
    auto it = plan.assignments.find(o.user);
    if (it != plan.assignments.end() && it->second == test_fold) continue;
    pool.push_back(o);
  }
  for (const auto& [user, split] : splits) {
    auto it = plan.assignments.find(user);
    if (it == plan.assignments.end() || it->second != test_fold) continue;
    pool.insert(pool.end(), split.train.begin(), split.train.end());
  }
  if (scenario == Scenario::CrossDomain) {
    pool.insert(pool.end(), corpus.auxiliary().begin(), corpus.auxiliary().end());
  }
  return pool;
}

/// Target-domain statistics of a training pool. The population is every user
/// contributing target ratings to the pool.
inline RatingStats pool_stats(std::span<const Observation> pool, const Corpus& corpus) {
  std::vector<bool> present(corpus.user_count(), false);
  std::size_t population = 0;
  for (const auto& o : pool) {
    if (o.domain != Domain::Target || present[o.user.value]) continue;
    present[o.user.value] = true;
    ++population;
  }
  std::vector<Observation> target_only;
  target_only.reserve(pool.size());
  for (const auto& o : pool) {
    if (o.domain == Domain::Target) target_only.push_back(o);
  }
  return tally_stats(target_only, population, corpus.target_item_count(), [](UserId) { return true; });
}

/// Moves each test user's top-ranked candidate rating into their train
/// profile. Users without candidates are left alone. Returns the number moved.
inline std::size_t elicit_step(const FactorModel& model, StrategyKind strategy, const RatingStats& stats,
                               SplitMap& splits) {
  std::size_t moved = 0;
  std::vector<ItemId> items;
  for (auto& [user, split] : splits) {
    if (split.candidate.empty()) continue;
    items.clear();
    for (const auto& o : split.candidate) items.push_back(o.item);
    const ItemId top = rank_candidates(score_candidates(strategy, model, stats, user, items)).front();
    auto it = std::find_if(split.candidate.begin(), split.candidate.end(),
                           [top](const Observation& o) { return o.item == top; });
    split.train.push_back(*it);
    split.candidate.erase(it);
    ++moved;
  }
  return moved;
}

struct IterationMetrics {
  double mae = 0.0;
  double spread = 0.0;
};

/// MAE over every test rating (micro-averaged) and Spread over each test
/// user's top-N list drawn from the target items minus their profile.
inline IterationMetrics evaluate_splits(const FactorModel& model, const Corpus& corpus,
                                        const SplitMap& splits, std::size_t top_n) {
  std::vector<PredictionPair> pairs;
  std::map<UserId, std::vector<ItemId>> lists;
  for (const auto& [user, split] : splits) {
    for (const auto& o : split.test) pairs.push_back({model.predict(user, o.item), o.value});
    std::set<ItemId> exclude;
    for (const auto& o : split.train) exclude.insert(o.item);
    lists.emplace(user, recommend_top_n(model, user, corpus.target_items(), exclude, top_n));
  }
  return {mae(pairs), spread(lists)};
}

struct ExperimentResult {
  Scenario scenario = Scenario::SingleDomain;
  std::optional<StrategyKind> strategy;  // nullopt: baseline without elicitation
  std::size_t iteration = 0;
  double mae = 0.0;
  double spread = 0.0;
  std::optional<double> improvement_mae;
  std::optional<double> improvement_spread;
};

/// Snapshot handed to an observer after each fold iteration's metrics are
/// computed and before that iteration's elicitation.
struct IterationTrace {
  std::size_t fold = 0;
  std::size_t iteration = 0;
  const FoldPlan* plan = nullptr;
  const std::vector<Observation>* pool = nullptr;
  const SplitMap* splits = nullptr;
  const FactorModel* model = nullptr;
  IterationMetrics metrics;
};

struct ExperimentOptions {
  Scenario scenario = Scenario::SingleDomain;
  std::optional<StrategyKind> strategy;
  Hyperparams hyperparams;
  std::size_t folds = 5;
  std::size_t max_elicited = 5;
  std::size_t top_n = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // Both callbacks run under a lock and may be invoked from worker threads.
  std::function<void(const IterationTrace&)> observer;
  std::function<void(const std::string&)> on_warning;
};

namespace detail {

inline std::vector<IterationMetrics> run_fold(const Corpus& corpus, const FoldPlan& plan, std::size_t fold,
                                              const ExperimentOptions& opt, std::mutex& observer_lock) {
  SplitMap splits;
  for (UserId u : plan.users_in(fold)) {
    splits.emplace(u, split_user(u, corpus.target_ratings_of(u), derive_seed(opt.seed, "split", corpus.user_name(u))));
  }
  Hyperparams hp = opt.hyperparams;
  hp.seed = derive_seed(opt.seed, "sgd", std::to_string(fold));

  const std::size_t last = opt.strategy ? opt.max_elicited : 0;
  std::vector<IterationMetrics> curve;
  for (std::size_t t = 0; t <= last; ++t) {
    const auto pool = build_training_pool(plan, fold, corpus, opt.scenario, splits);
    TrainingReport report;
    const FactorModel model = train(pool, corpus.user_count(), corpus.item_count(), hp, &report);
    if (report.loss_increases > 0 && opt.on_warning) {
      std::lock_guard lock(observer_lock);
      opt.on_warning("fold " + std::to_string(fold) + " iteration " + std::to_string(t) + ": training loss rose in " +
                     std::to_string(report.loss_increases) + " epochs");
    }
    curve.push_back(evaluate_splits(model, corpus, splits, opt.top_n));
    if (opt.observer) {
      std::lock_guard lock(observer_lock);
      opt.observer({fold, t, &plan, &pool, &splits, &model, curve.back()});
    }
    if (t < last) elicit_step(model, *opt.strategy, pool_stats(pool, corpus), splits);
  }
  return curve;
}

}  // namespace detail

/// Runs the user-based k-fold elicitation protocol for one (scenario,
/// strategy) cell and returns fold-averaged metrics per iteration. Improvement
/// fields are relative to this cell's own iteration-0 values, which equal the
/// baseline for a fixed seed. Folds may run concurrently; results do not
/// depend on scheduling.
inline std::vector<ExperimentResult> run_experiment(const Corpus& corpus, const ExperimentOptions& opt) {
  if (opt.scenario == Scenario::CrossDomain && !corpus.has_auxiliary()) {
    throw Error(ErrorCode::InvalidArgument, "cross-domain scenario needs auxiliary ratings");
  }
  const FoldPlan plan = plan_folds(corpus.target_users(), opt.folds, opt.seed);

  std::mutex observer_lock;
  std::vector<std::vector<IterationMetrics>> curves(opt.folds);
  const std::size_t workers = std::max<std::size_t>(1, opt.workers);
  for (std::size_t begin = 0; begin < opt.folds; begin += workers) {
    const std::size_t end = std::min(opt.folds, begin + workers);
    if (end - begin == 1) {
      curves[begin] = detail::run_fold(corpus, plan, begin, opt, observer_lock);
      continue;
    }
    std::vector<std::future<std::vector<IterationMetrics>>> pending;
    for (std::size_t f = begin; f < end; ++f) {
      pending.push_back(std::async(std::launch::async, [&, f] {
        return detail::run_fold(corpus, plan, f, opt, observer_lock);
      }));
    }
    for (std::size_t f = begin; f < end; ++f) curves[f] = pending[f - begin].get();
  }

  const std::size_t iterations = curves.front().size();
  std::vector<ExperimentResult> results;
  for (std::size_t t = 0; t < iterations; ++t) {
    ExperimentResult r;
    r.scenario = opt.scenario;
    r.strategy = opt.strategy;
    r.iteration = t;
    for (const auto& curve : curves) {
      r.mae += curve[t].mae;
      r.spread += curve[t].spread;
    }
    r.mae /= static_cast<double>(curves.size());
    r.spread /= static_cast<double>(curves.size());
    results.push_back(r);
  }
  if (opt.strategy) {
    const double base_mae = results.front().mae;
    const double base_spread = results.front().spread;
    for (auto& r : results) {
      if (base_mae > 0.0) r.improvement_mae = improvement(r.mae, base_mae, Direction::LowerIsBetter);
      if (base_spread > 0.0) r.improvement_spread = improvement(r.spread, base_spread, Direction::HigherIsBetter);
    }
  }
  return results;
}

inline std::vector<ExperimentResult> run_experiment(const Dataset& target, const Dataset* auxiliary,
                                                    const ExperimentOptions& opt) {
  return run_experiment(Corpus(target, auxiliary), opt);
}

}  // namespace elicit
