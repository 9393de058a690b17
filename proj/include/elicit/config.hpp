#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "elicit/error.hpp"
#include "elicit/harness.hpp"
#include "elicit/ingestion.hpp"
#include "elicit/mf.hpp"
#include "elicit/strategies.hpp"
#include "elicit/synthetic.hpp"

namespace elicit {

// Flat `key = value` file. '#' starts a comment; blank lines are ignored.
// Keys are recorded with their line so errors can point back at the source.
class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueFile parse(std::istream& in, const std::string& source) {
    KeyValueFile kv;
    kv.source_ = source;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto text = detail::trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::InvalidConfig, source + ":" + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key(detail::trim(text.substr(0, eq)));
      if (key.empty()) throw Error(ErrorCode::InvalidConfig, source + ":" + std::to_string(line_no) + ": empty key");
      if (kv.entries_.contains(key)) {
        throw Error(ErrorCode::InvalidConfig, source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      }
      kv.entries_.emplace(key, Entry{std::string(detail::trim(text.substr(eq + 1))), line_no});
    }
    return kv;
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path.string());
    return parse(in, path.string());
  }

  const std::string& source() const { return source_; }

  std::optional<std::string> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    taken_.insert(key);
    return it->second.value;
  }

  template <class T>
  std::optional<T> take_number(const std::string& key) {
    auto raw = take(key);
    if (!raw) return std::nullopt;
    T value{};
    const char* end = raw->data() + raw->size();
    auto [ptr, ec] = std::from_chars(raw->data(), end, value);
    if (ec != std::errc{} || ptr != end) fail(key, "'" + *raw + "' is not a valid number");
    return value;
  }

  std::optional<bool> take_bool(const std::string& key) {
    auto raw = take(key);
    if (!raw) return std::nullopt;
    if (*raw == "true" || *raw == "1" || *raw == "yes") return true;
    if (*raw == "false" || *raw == "0" || *raw == "no") return false;
    fail(key, "'" + *raw + "' is not a boolean");
  }

  std::vector<std::string> take_list(const std::string& key) {
    std::vector<std::string> out;
    auto raw = take(key);
    if (!raw) return out;
    for (auto part : detail::split_commas(*raw)) {
      auto item = detail::trim(part);
      if (!item.empty()) out.emplace_back(item);
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    auto it = entries_.find(key);
    const std::string at = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
    throw Error(ErrorCode::InvalidConfig, at + ": " + key + ": " + what);
  }

  void reject_unknown_keys() const {
    for (const auto& [key, entry] : entries_) {
      if (!taken_.contains(key)) {
        throw Error(ErrorCode::InvalidConfig, source_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
      }
    }
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> taken_;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

inline void read_hyperparams(KeyValueFile& kv, Hyperparams& hp) {
  if (auto v = kv.take_number<std::size_t>("factor_count")) hp.factor_count = *v;
  if (auto v = kv.take_number<double>("learning_rate")) hp.learning_rate = *v;
  if (auto v = kv.take_number<double>("regularization")) hp.regularization = *v;
  if (auto v = kv.take_number<std::size_t>("epochs_per_factor")) hp.epochs_per_factor = *v;
  if (auto v = kv.take_number<double>("bias_damping")) hp.bias_damping = *v;
  if (auto v = kv.take_number<double>("rating_min")) hp.rating_min = *v;
  if (auto v = kv.take_number<double>("rating_max")) hp.rating_max = *v;
  try {
    hp.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, kv.source() + ": " + e.what());
  }
}

}  // namespace detail

struct ExperimentConfig {
  std::filesystem::path target_csv;
  std::optional<std::filesystem::path> auxiliary_csv;
  std::vector<Scenario> scenarios;             // canonical order: single, cross
  bool include_baseline = false;               // "none" listed
  std::vector<StrategyKind> strategies;        // canonical order, without "none"
  Hyperparams hyperparams;
  std::size_t folds = 5;
  std::size_t max_elicited = 5;
  std::size_t top_n = 10;
  std::size_t min_ratings = kMinRatingsPerDomain;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "results";

  /// Relative paths resolve against `base_dir` (the config file's directory).
  static ExperimentConfig from(KeyValueFile& kv, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    auto target = kv.take("target_csv");
    if (!target || target->empty()) kv.fail("target_csv", "required");
    c.target_csv = detail::resolve(base_dir, *target);
    if (auto aux = kv.take("auxiliary_csv"); aux && !aux->empty()) c.auxiliary_csv = detail::resolve(base_dir, *aux);

    auto scenario_names = kv.take_list("scenarios");
    if (scenario_names.empty()) scenario_names = {"single"};
    std::set<Scenario> scenarios;
    for (const auto& name : scenario_names) {
      auto s = parse_scenario(name);
      if (!s) kv.fail("scenarios", "unknown scenario '" + name + "' (expected single or cross)");
      scenarios.insert(*s);
    }
    c.scenarios.assign(scenarios.begin(), scenarios.end());
    if (scenarios.contains(Scenario::CrossDomain) && !c.auxiliary_csv) {
      kv.fail("scenarios", "cross scenario requires auxiliary_csv");
    }

    const auto strategy_names = kv.take_list("strategies");
    if (strategy_names.empty()) kv.fail("strategies", "at least one strategy is required");
    std::set<StrategyKind> strategies;
    for (const auto& name : strategy_names) {
      if (name == "none") {
        c.include_baseline = true;
        continue;
      }
      auto s = parse_strategy(name);
      if (!s) kv.fail("strategies", "unknown strategy '" + name + "'");
      strategies.insert(*s);
    }
    c.strategies.assign(strategies.begin(), strategies.end());

    detail::read_hyperparams(kv, c.hyperparams);
    if (auto v = kv.take_number<std::size_t>("folds")) c.folds = *v;
    if (auto v = kv.take_number<std::size_t>("max_elicited")) c.max_elicited = *v;
    if (auto v = kv.take_number<std::size_t>("top_n")) c.top_n = *v;
    if (auto v = kv.take_number<std::size_t>("min_ratings")) c.min_ratings = *v;
    if (auto v = kv.take_number<std::uint64_t>("seed")) c.seed = *v;
    auto output = kv.take("output_dir");
    c.output_dir = detail::resolve(base_dir, output && !output->empty() ? *output : c.output_dir.string());
    if (c.folds < 2) kv.fail("folds", "must be at least 2");
    if (c.top_n < 1) kv.fail("top_n", "must be at least 1");
    if (c.min_ratings < kMinUserRatings) {
      kv.fail("min_ratings", "must be at least " + std::to_string(kMinUserRatings) + " (test + candidate sizes)");
    }
    kv.reject_unknown_keys();
    return c;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    auto kv = KeyValueFile::load(path);
    return from(kv, path.parent_path());
  }
};

/// Synthetic generator settings plus where to write the two CSVs.
struct SyntheticJob {
  SyntheticSpec spec;
  std::filesystem::path target_out;
  std::filesystem::path auxiliary_out;

  static SyntheticJob from(KeyValueFile& kv, const std::filesystem::path& base_dir) {
    SyntheticJob job;
    auto& s = job.spec;
    if (auto v = kv.take_number<std::size_t>("users")) s.users = *v;
    if (auto v = kv.take_number<std::size_t>("target_items")) s.target_items = *v;
    if (auto v = kv.take_number<std::size_t>("auxiliary_items")) s.auxiliary_items = *v;
    if (auto v = kv.take_number<double>("density")) s.density = *v;
    if (auto v = kv.take_number<double>("correlation")) s.correlation = *v;
    if (auto v = kv.take_number<std::size_t>("rank")) s.rank = *v;
    if (auto v = kv.take_number<double>("user_bias_sd")) s.user_bias_sd = *v;
    if (auto v = kv.take_number<double>("item_bias_sd")) s.item_bias_sd = *v;
    if (auto v = kv.take_number<double>("signal")) s.signal = *v;
    if (auto v = kv.take_number<double>("noise")) s.noise = *v;
    if (auto v = kv.take_bool("share_item_factors")) s.share_item_factors = *v;
    if (auto v = kv.take_number<std::size_t>("min_per_domain")) s.min_per_domain = *v;
    if (auto v = kv.take_number<std::uint64_t>("seed")) s.seed = *v;
    auto target = kv.take("target_out");
    auto aux = kv.take("auxiliary_out");
    if (!target || target->empty()) kv.fail("target_out", "required");
    if (!aux || aux->empty()) kv.fail("auxiliary_out", "required");
    job.target_out = detail::resolve(base_dir, *target);
    job.auxiliary_out = detail::resolve(base_dir, *aux);
    kv.reject_unknown_keys();
    s.validate();
    return job;
  }

  static SyntheticJob load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidSpec, "cannot open " + path.string());
    auto kv = KeyValueFile::parse(in, path.string());
    try {
      return from(kv, path.parent_path());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidConfig) throw Error(ErrorCode::InvalidSpec, e.what());
      throw;
    }
  }
};

}  // namespace elicit
