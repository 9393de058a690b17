#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "elicit/core.hpp"
#include "elicit/error.hpp"

namespace elicit {

inline constexpr std::string_view kCsvHeader = "user_id,item_id,rating,domain";

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return in;
}

inline std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace detail

/// Reads `user_id,item_id,rating,domain` rows. Ratings must be integers in
/// [1,5]; a numeric but non-integral or out-of-range value is ValueOutOfRange.
inline std::vector<Rating> load_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::MalformedRow, detail::where(path, 1) + ": missing header");
  }
  ++line_no;
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (detail::trim(line) != kCsvHeader) {
    throw Error(ErrorCode::MalformedRow, detail::where(path, 1) + ": expected header '" +
                                             std::string(kCsvHeader) + "'");
  }

  std::vector<Rating> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != 4) {
      throw Error(ErrorCode::MalformedRow, detail::where(path, line_no) + ": expected 4 fields");
    }
    const auto user = detail::trim(fields[0]);
    const auto item = detail::trim(fields[1]);
    if (user.empty() || item.empty()) {
      throw Error(ErrorCode::MalformedRow, detail::where(path, line_no) + ": empty identifier");
    }
    const auto value = detail::parse_real(fields[2]);
    if (!value) throw Error(ErrorCode::MalformedRow, detail::where(path, line_no) + ": rating is not a number");
    const auto token = detail::trim(fields[2]);
    const bool integral_token = token.find_first_not_of("+-0123456789") == std::string_view::npos;
    if (!integral_token || *value < kMinRating || *value > kMaxRating) {
      throw Error(ErrorCode::ValueOutOfRange,
                  detail::where(path, line_no) + ": rating '" + std::string(token) + "' is not an integer in [1,5]");
    }
    const auto domain = parse_domain(detail::trim(fields[3]));
    if (!domain) throw Error(ErrorCode::MalformedRow, detail::where(path, line_no) + ": unknown domain");
    out.push_back({std::string(user), std::string(item), static_cast<int>(*value), *domain});
  }
  return out;
}

inline void write_csv(std::ostream& out, const std::vector<Rating>& ratings) {
  out << kCsvHeader << '\n';
  for (const auto& r : ratings) {
    out << r.user << ',' << r.item << ',' << r.value << ',' << to_string(r.domain) << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const std::vector<Rating>& ratings) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  write_csv(out, ratings);
}

/// Parses SNAP review dumps: blank-line separated blocks of `key: value`
/// lines, of which product/productId, review/userId and review/score are
/// used. A repeated (user, item) keeps the last occurrence; each replacement
/// is reported on `log` when given.
inline std::vector<Rating> convert_snap(std::istream& in, Domain domain, const std::string& source = "<stream>",
                                        std::ostream* log = nullptr) {
  std::vector<Rating> out;
  std::map<std::pair<std::string, std::string>, std::size_t> position;

  std::string product, user, score;
  bool has_product = false, has_user = false, has_score = false, in_block = false;
  std::size_t block_start = 0, score_line = 0, line_no = 0;

  auto finish_block = [&] {
    if (!in_block) return;
    if (!(has_product && has_user && has_score)) {
      throw Error(ErrorCode::TruncatedBlock, detail::where(source, block_start) + ": block lacks " +
                                                 (!has_product ? "product/productId"
                                                  : !has_user  ? "review/userId"
                                                               : "review/score"));
    }
    const auto v = detail::parse_real(score);
    if (!v) throw Error(ErrorCode::UnparsableScore, detail::where(source, score_line) + ": '" + score + "'");
    if (*v != std::floor(*v) || *v < kMinRating || *v > kMaxRating) {
      throw Error(ErrorCode::ValueOutOfRange,
                  detail::where(source, score_line) + ": score " + score + " is not an integer in [1,5]");
    }
    Rating r{user, product, static_cast<int>(*v), domain};
    auto key = std::make_pair(user, product);
    if (auto it = position.find(key); it != position.end()) {
      if (log) {
        *log << "convert-snap: duplicate rating (" << user << ", " << product << ") at "
             << detail::where(source, block_start) << " replaces earlier value " << out[it->second].value << '\n';
      }
      out[it->second] = std::move(r);
    } else {
      position.emplace(std::move(key), out.size());
      out.push_back(std::move(r));
    }
    has_product = has_user = has_score = in_block = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) {
      finish_block();
      continue;
    }
    if (!in_block) {
      in_block = true;
      block_start = line_no;
    }
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = text.substr(0, colon);
    const auto value = std::string(detail::trim(text.substr(colon + 1)));
    if (key == "product/productId") {
      product = value;
      has_product = !value.empty();
    } else if (key == "review/userId") {
      user = value;
      has_user = !value.empty();
    } else if (key == "review/score") {
      score = value;
      has_score = true;
      score_line = line_no;
    }
  }
  finish_block();
  return out;
}

inline std::vector<Rating> convert_snap(const std::filesystem::path& path, Domain domain,
                                        std::ostream* log = nullptr) {
  auto in = detail::open_input(path);
  return convert_snap(in, domain, path.string(), log);
}

namespace detail {

inline std::vector<Rating> keep_users(const Dataset& ds, const std::set<std::string>& users) {
  std::vector<Rating> kept;
  for (const auto& r : ds.ratings()) {
    if (users.contains(r.user)) kept.push_back(r);
  }
  return kept;
}

}  // namespace detail

/// Keeps only users with at least `min_per_domain` ratings in both domains.
/// Items left without ratings disappear from the rebuilt indices.
inline std::pair<Dataset, Dataset> filter_overlap(const Dataset& target, const Dataset& auxiliary,
                                                  std::size_t min_per_domain = kMinRatingsPerDomain) {
  const auto target_counts = target.user_counts();
  const auto aux_counts = auxiliary.user_counts();
  std::set<std::string> qualified;
  for (std::uint32_t u = 0; u < target.users().size(); ++u) {
    if (target_counts[u] < min_per_domain) continue;
    const auto& name = target.users().name(u);
    auto a = auxiliary.users().find(name);
    if (a && aux_counts[*a] >= min_per_domain) qualified.insert(name);
  }
  if (qualified.empty()) {
    throw Error(ErrorCode::EmptyResult, "no user has " + std::to_string(min_per_domain) + " ratings in both domains");
  }
  return {build_dataset(detail::keep_users(target, qualified), target.domain()),
          build_dataset(detail::keep_users(auxiliary, qualified), auxiliary.domain())};
}

/// Single-domain counterpart of filter_overlap.
inline Dataset filter_min_ratings(const Dataset& ds, std::size_t min_ratings) {
  const auto counts = ds.user_counts();
  std::set<std::string> qualified;
  for (std::uint32_t u = 0; u < ds.users().size(); ++u) {
    if (counts[u] >= min_ratings) qualified.insert(ds.users().name(u));
  }
  if (qualified.empty()) {
    throw Error(ErrorCode::EmptyResult, "no user has " + std::to_string(min_ratings) + " ratings");
  }
  return build_dataset(detail::keep_users(ds, qualified), ds.domain());
}

}  // namespace elicit
