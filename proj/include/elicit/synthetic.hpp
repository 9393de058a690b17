#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "elicit/core.hpp"
#include "elicit/error.hpp"
#include "elicit/seeding.hpp"

namespace elicit {

/// Planted low-rank two-domain corpus. Users share a latent taste vector
/// across domains with correlation `correlation`; item identifiers of the two
/// domains never overlap.
struct SyntheticSpec {
  std::size_t users = 100;
  std::size_t target_items = 200;
  std::size_t auxiliary_items = 200;
  double density = 0.25;
  double correlation = 0.8;
  std::size_t rank = 5;
  double user_bias_sd = 0.6;
  double item_bias_sd = 0.4;
  double signal = 1.0;  // sd of the latent interaction term
  double noise = 0.3;
  // Auxiliary item j reuses target item (j mod target_items)'s latent vector.
  bool share_item_factors = false;
  std::size_t min_per_domain = kMinRatingsPerDomain;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
    if (users == 0 || target_items == 0 || auxiliary_items == 0) fail("user and item counts must be positive");
    if (!(density > 0.0 && density <= 1.0)) fail("density must be in (0,1]");
    if (!(correlation >= -1.0 && correlation <= 1.0)) fail("correlation must be in [-1,1]");
    if (rank == 0) fail("rank must be positive");
    if (!(noise >= 0.0 && signal >= 0.0 && user_bias_sd >= 0.0 && item_bias_sd >= 0.0)) {
      fail("standard deviations must be non-negative");
    }
    if (min_per_domain > target_items || min_per_domain > auxiliary_items) {
      fail("min_per_domain exceeds an item count");
    }
  }
};

struct SyntheticCorpus {
  std::vector<Rating> target;
  std::vector<Rating> auxiliary;
};

namespace detail {

inline std::string padded(char prefix, std::size_t index, std::size_t count) {
  const int width = static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, index);
  return buf;
}

inline std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double sd) {
  std::vector<double> v(n);
  for (auto& x : v) x = sd * rng.normal();
  return v;
}

}  // namespace detail

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t k = spec.rank;
  const double mix = std::sqrt(std::max(0.0, 1.0 - spec.correlation * spec.correlation));
  const double factor_sd = std::sqrt(spec.signal) / std::pow(static_cast<double>(k), 0.25);

  Rng items_rng(derive_seed(spec.seed, "synthetic-items"));
  std::vector<std::vector<double>> target_q, aux_q;
  std::vector<double> target_b, aux_b;
  for (std::size_t j = 0; j < spec.target_items; ++j) {
    target_q.push_back(detail::gaussian_vector(items_rng, k, factor_sd));
    target_b.push_back(spec.item_bias_sd * items_rng.normal());
  }
  for (std::size_t j = 0; j < spec.auxiliary_items; ++j) {
    if (spec.share_item_factors) {
      aux_q.push_back(target_q[j % spec.target_items]);
      aux_b.push_back(target_b[j % spec.target_items]);
    } else {
      aux_q.push_back(detail::gaussian_vector(items_rng, k, factor_sd));
      aux_b.push_back(spec.item_bias_sd * items_rng.normal());
    }
  }

  SyntheticCorpus out;
  constexpr int kMaxAttempts = 1000;
  for (std::size_t u = 0; u < spec.users; ++u) {
    const std::string user = detail::padded('u', u, spec.users);
    Rng rng(derive_seed(spec.seed, "synthetic-user", user));
    const auto taste = detail::gaussian_vector(rng, k, factor_sd);
    const auto other = detail::gaussian_vector(rng, k, factor_sd);
    std::vector<double> aux_taste(k);
    for (std::size_t f = 0; f < k; ++f) aux_taste[f] = spec.correlation * taste[f] + mix * other[f];
    const double bias = spec.user_bias_sd * rng.normal();
    const double aux_bias = spec.correlation * bias + mix * spec.user_bias_sd * rng.normal();

    auto emit = [&](Domain domain, const std::vector<double>& p, double bu,
                    const std::vector<std::vector<double>>& q, const std::vector<double>& bi, char prefix,
                    std::vector<Rating>& sink) {
      std::vector<std::size_t> chosen;
      for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxAttempts) {
          throw Error(ErrorCode::InvalidSpec, "density too low to give every user " +
                                                  std::to_string(spec.min_per_domain) + " ratings per domain");
        }
        chosen.clear();
        for (std::size_t j = 0; j < q.size(); ++j) {
          if (rng.uniform() < spec.density) chosen.push_back(j);
        }
        if (chosen.size() >= spec.min_per_domain) break;
      }
      for (std::size_t j : chosen) {
        double raw = 3.0 + bu + bi[j] + spec.noise * rng.normal();
        for (std::size_t f = 0; f < k; ++f) raw += p[f] * q[j][f];
        const int value = static_cast<int>(std::clamp(std::lround(raw), 1L, 5L));
        sink.push_back({user, detail::padded(prefix, j, q.size()), value, domain});
      }
    };
    emit(Domain::Target, taste, bias, target_q, target_b, 't', out.target);
    emit(Domain::Auxiliary, aux_taste, aux_bias, aux_q, aux_b, 'a', out.auxiliary);
  }
  return out;
}

}  // namespace elicit
