#pragma once

#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "elicit/core.hpp"
#include "elicit/error.hpp"

namespace elicit {

struct PredictionPair {
  double predicted = 0.0;
  double actual = 0.0;
};

inline double mae(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyTestSet, "no test predictions");
  double total = 0.0;
  for (const auto& p : pairs) total += std::abs(p.predicted - p.actual);
  return total / static_cast<double>(pairs.size());
}

/// Natural-log entropy of how often each item occurs across all users'
/// recommendation lists.
template <class ListMap>
double spread(const ListMap& lists) {
  std::map<ItemId, std::size_t> occurrences;
  std::size_t total = 0;
  for (const auto& [user, list] : lists) {
    for (ItemId item : list) {
      ++occurrences[item];
      ++total;
    }
  }
  if (total == 0) throw Error(ErrorCode::NoRecommendations, "every recommendation list is empty");
  double h = 0.0;
  for (const auto& [item, n] : occurrences) {
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

enum class Direction { LowerIsBetter, HigherIsBetter };

/// Relative change against the baseline, in percent, signed so that a
/// positive value is always an improvement.
inline double improvement(double with_al, double baseline, Direction direction) {
  if (!(baseline > 0.0)) throw Error(ErrorCode::ZeroBaseline, "baseline must be positive");
  const double delta = direction == Direction::LowerIsBetter ? baseline - with_al : with_al - baseline;
  return 100.0 * delta / baseline;
}

}  // namespace elicit
