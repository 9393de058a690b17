#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/core.hpp"
#include "elicit/error.hpp"
#include "elicit/mf.hpp"

namespace elicit {

enum class StrategyKind { HighestPredicted, LowestPredicted, Entropy0, Popularity };

inline constexpr std::array<StrategyKind, 4> kAllStrategies = {
    StrategyKind::HighestPredicted, StrategyKind::LowestPredicted, StrategyKind::Entropy0,
    StrategyKind::Popularity};

constexpr std::string_view to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::HighestPredicted: return "highest-predicted";
    case StrategyKind::LowestPredicted: return "lowest-predicted";
    case StrategyKind::Entropy0: return "entropy0";
    case StrategyKind::Popularity: return "popularity";
  }
  return "";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

// Model-driven strategies read predictions; the others read rating statistics.
constexpr bool uses_model(StrategyKind s) {
  return s == StrategyKind::HighestPredicted || s == StrategyKind::LowestPredicted;
}

struct ScoredCandidate {
  ItemId item;
  double score = 0.0;
};

namespace detail {

inline void require_candidates(std::span<const ItemId> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidateSet, "no candidate items to score");
}

}  // namespace detail

inline std::vector<ScoredCandidate> score_highest_predicted(const FactorModel& model, UserId user,
                                                            std::span<const ItemId> candidates) {
  detail::require_candidates(candidates);
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (ItemId i : candidates) out.push_back({i, model.predict(user, i)});
  return out;
}

inline std::vector<ScoredCandidate> score_lowest_predicted(const FactorModel& model, UserId user,
                                                           std::span<const ItemId> candidates) {
  detail::require_candidates(candidates);
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (ItemId i : candidates) out.push_back({i, kMaxRating - model.predict(user, i)});
  return out;
}

/// Shannon entropy (bits) of an item's value distribution over the stats
/// population, with "not rated" folded in as an extra value 0.
inline double entropy0(const RatingStats& stats, ItemId item) {
  const double total = static_cast<double>(stats.population());
  const auto hist = stats.histogram(item);
  auto term = [total](double n) {
    if (n <= 0.0) return 0.0;
    const double p = n / total;
    return -p * std::log2(p);
  };
  double h = term(total - static_cast<double>(stats.count(item)));
  for (auto n : hist) h += term(static_cast<double>(n));
  return h;
}

inline std::vector<ScoredCandidate> score_entropy0(const RatingStats& stats,
                                                   std::span<const ItemId> candidates) {
  detail::require_candidates(candidates);
  if (stats.population() == 0) throw Error(ErrorCode::EmptyPopulation, "entropy0 needs a population");
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (ItemId i : candidates) out.push_back({i, entropy0(stats, i)});
  return out;
}

inline std::vector<ScoredCandidate> score_popularity(const RatingStats& stats,
                                                     std::span<const ItemId> candidates) {
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (ItemId i : candidates) out.push_back({i, static_cast<double>(stats.count(i))});
  return out;
}

/// Descending score, ascending item index on ties.
inline std::vector<ItemId> rank_candidates(std::vector<ScoredCandidate> scored) {
  for (const auto& c : scored) {
    if (!std::isfinite(c.score)) {
      throw Error(ErrorCode::NonFiniteScore, "item index " + std::to_string(c.item.value));
    }
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return a.score != b.score ? a.score > b.score : a.item < b.item;
  });
  std::vector<ItemId> out;
  out.reserve(scored.size());
  for (const auto& c : scored) out.push_back(c.item);
  return out;
}

inline std::vector<ScoredCandidate> score_candidates(StrategyKind strategy, const FactorModel& model,
                                                     const RatingStats& stats, UserId user,
                                                     std::span<const ItemId> candidates) {
  switch (strategy) {
    case StrategyKind::HighestPredicted: return score_highest_predicted(model, user, candidates);
    case StrategyKind::LowestPredicted: return score_lowest_predicted(model, user, candidates);
    case StrategyKind::Entropy0: return score_entropy0(stats, candidates);
    case StrategyKind::Popularity: return score_popularity(stats, candidates);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown strategy");
}

}  // namespace elicit
