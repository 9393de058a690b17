#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "elicit/error.hpp"

namespace elicit {

inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 5;
inline constexpr std::size_t kRatingLevels = kMaxRating - kMinRating + 1;
// Overlap filter threshold: ratings a user needs in each domain.
inline constexpr std::size_t kMinRatingsPerDomain = 20;

enum class Domain : std::uint8_t { Target, Auxiliary };

constexpr std::string_view to_string(Domain d) {
  return d == Domain::Target ? "target" : "auxiliary";
}

inline std::optional<Domain> parse_domain(std::string_view s) {
  if (s == "target") return Domain::Target;
  if (s == "auxiliary") return Domain::Auxiliary;
  return std::nullopt;
}

struct Rating {
  std::string user;
  std::string item;
  int value = 0;
  Domain domain = Domain::Target;

  bool operator==(const Rating&) const = default;
};

// Dense index into a user or item table. The tag keeps the two spaces apart.
template <class Tag>
struct Index {
  std::uint32_t value = 0;
  auto operator<=>(const Index&) const = default;
};

using UserId = Index<struct UserTag>;
using ItemId = Index<struct ItemTag>;

// Bidirectional map between opaque string identifiers and dense indices.
// Indices follow ascending identifier order, so comparing indices of one map
// is the same as comparing identifiers.
class IdMap {
 public:
  IdMap() = default;

  static IdMap from_names(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    IdMap map;
    map.names_ = std::move(names);
    map.lookup_.reserve(map.names_.size());
    for (std::uint32_t i = 0; i < map.names_.size(); ++i) map.lookup_.emplace(map.names_[i], i);
    return map;
  }

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(std::uint32_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::uint32_t> find(const std::string& name) const {
    auto it = lookup_.find(name);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

// A rating in index space. `value` is real so the factor engine can also be
// exercised on non-integral synthetic targets.
struct Observation {
  UserId user;
  ItemId item;
  double value = 0.0;
  Domain domain = Domain::Target;
};

inline void validate_value(int value, const std::string& context) {
  if (value < kMinRating || value > kMaxRating) {
    throw Error(ErrorCode::ValueOutOfRange,
                context + ": rating " + std::to_string(value) + " outside [1,5]");
  }
}

/// Validated, immutable collection of one domain's ratings with local
/// user/item indices.
class Dataset {
 public:
  Dataset() = default;

  Domain domain() const { return domain_; }
  const std::vector<Rating>& ratings() const { return ratings_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const IdMap& users() const { return users_; }
  const IdMap& items() const { return items_; }
  std::size_t size() const { return ratings_.size(); }
  bool empty() const { return ratings_.empty(); }

  /// |ratings| / (|users| * |items|); 0 for an empty dataset.
  double density() const {
    if (ratings_.empty()) return 0.0;
    return static_cast<double>(ratings_.size()) /
           (static_cast<double>(users_.size()) * static_cast<double>(items_.size()));
  }

  /// Number of ratings per local user index.
  std::vector<std::size_t> user_counts() const {
    std::vector<std::size_t> counts(users_.size(), 0);
    for (const auto& o : observations_) ++counts[o.user.value];
    return counts;
  }

  std::size_t count_for(const std::string& user) const {
    auto u = users_.find(user);
    if (!u) return 0;
    std::size_t n = 0;
    for (const auto& o : observations_) n += (o.user.value == *u);
    return n;
  }

 private:
  friend Dataset build_dataset(std::vector<Rating> ratings, Domain domain);

  Domain domain_ = Domain::Target;
  std::vector<Rating> ratings_;
  std::vector<Observation> observations_;
  IdMap users_;
  IdMap items_;
};

inline Dataset build_dataset(std::vector<Rating> ratings, Domain domain) {
  std::vector<std::string> user_names;
  std::vector<std::string> item_names;
  user_names.reserve(ratings.size());
  item_names.reserve(ratings.size());
  for (const auto& r : ratings) {
    if (r.domain != domain) {
      throw Error(ErrorCode::DomainMismatch, "rating (" + r.user + ", " + r.item + ") is tagged " +
                                                 std::string(to_string(r.domain)) + ", expected " +
                                                 std::string(to_string(domain)));
    }
    validate_value(r.value, "(" + r.user + ", " + r.item + ")");
    user_names.push_back(r.user);
    item_names.push_back(r.item);
  }

  Dataset ds;
  ds.domain_ = domain;
  ds.users_ = IdMap::from_names(std::move(user_names));
  ds.items_ = IdMap::from_names(std::move(item_names));

  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  ds.observations_.reserve(ratings.size());
  for (const auto& r : ratings) {
    const std::uint32_t u = *ds.users_.find(r.user);
    const std::uint32_t i = *ds.items_.find(r.item);
    if (!seen.emplace(u, i).second) {
      throw Error(ErrorCode::DuplicateRating, "(" + r.user + ", " + r.item + ")");
    }
    ds.observations_.push_back({UserId{u}, ItemId{i}, static_cast<double>(r.value), domain});
  }
  ds.ratings_ = std::move(ratings);
  return ds;
}

/// Per-item rating counts and value histograms over a user population of
/// known size. Items outside the tallied range read as unrated.
class RatingStats {
 public:
  using Histogram = std::array<std::uint32_t, kRatingLevels>;

  RatingStats(std::size_t population, std::size_t item_count)
      : population_(population), counts_(item_count, 0), histograms_(item_count, Histogram{}) {}

  std::size_t population() const { return population_; }
  std::size_t item_count() const { return counts_.size(); }

  std::uint32_t count(ItemId item) const {
    return item.value < counts_.size() ? counts_[item.value] : 0;
  }

  Histogram histogram(ItemId item) const {
    return item.value < histograms_.size() ? histograms_[item.value] : Histogram{};
  }

  void add(ItemId item, int value) {
    ++counts_.at(item.value);
    ++histograms_.at(item.value)[static_cast<std::size_t>(value - kMinRating)];
  }

 private:
  std::size_t population_;
  std::vector<std::uint32_t> counts_;
  std::vector<Histogram> histograms_;
};

/// Tallies observations whose user satisfies `in_population`. Observation
/// values must be integral ratings.
template <class Range, class Pred>
RatingStats tally_stats(const Range& observations, std::size_t population_size,
                        std::size_t item_count, Pred in_population) {
  if (population_size == 0) throw Error(ErrorCode::EmptyPopulation, "statistics population is empty");
  RatingStats stats(population_size, item_count);
  for (const Observation& o : observations) {
    if (!in_population(o.user)) continue;
    const int v = static_cast<int>(o.value);
    validate_value(v, "statistics tally");
    stats.add(o.item, v);
  }
  return stats;
}

/// Statistics of `dataset` over the given population of user identifiers.
/// Population members without ratings still count toward the population size.
inline RatingStats compute_stats(const Dataset& dataset, const std::set<std::string>& population) {
  if (population.empty()) throw Error(ErrorCode::EmptyPopulation, "statistics population is empty");
  std::vector<bool> member(dataset.users().size(), false);
  for (const auto& name : population) {
    if (auto u = dataset.users().find(name)) member[*u] = true;
  }
  return tally_stats(dataset.observations(), population.size(), dataset.items().size(),
                     [&](UserId u) { return member[u.value]; });
}

}  // namespace elicit
