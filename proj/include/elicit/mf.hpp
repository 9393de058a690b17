#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "elicit/core.hpp"
#include "elicit/error.hpp"

namespace elicit {

struct Hyperparams {
  std::size_t factor_count = 30;
  double learning_rate = 0.001;
  double regularization = 0.015;
  std::size_t epochs_per_factor = 100;
  double rating_min = kMinRating;
  double rating_max = kMaxRating;
  // Damping constant pulling initial per-user/per-item offsets toward zero.
  double bias_damping = 25.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (factor_count < 1) throw Error(ErrorCode::InvalidArgument, "factor_count must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    if (!(regularization >= 0.0)) throw Error(ErrorCode::InvalidArgument, "regularization must be >= 0");
    if (epochs_per_factor < 1) throw Error(ErrorCode::InvalidArgument, "epochs_per_factor must be >= 1");
    if (!(bias_damping >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bias_damping must be >= 0");
    if (!(rating_min < rating_max)) throw Error(ErrorCode::InvalidArgument, "rating_min must be < rating_max");
  }
};

inline constexpr double kInitialFactor = 0.1;

/// Biased latent-factor predictor over a dense user/item index space.
/// Users or items without training data are "unknown" and fall back to the
/// bias-only terms that are available for them.
class FactorModel {
 public:
  FactorModel() = default;

  FactorModel(std::size_t user_count, std::size_t item_count, std::size_t factor_count,
              double global_mean, double rating_min = kMinRating, double rating_max = kMaxRating)
      : factor_count_(factor_count),
        global_mean_(global_mean),
        rating_min_(rating_min),
        rating_max_(rating_max),
        user_bias_(user_count, 0.0),
        item_bias_(item_count, 0.0),
        user_factors_(user_count * factor_count, kInitialFactor),
        item_factors_(item_count * factor_count, kInitialFactor),
        user_known_(user_count, false),
        item_known_(item_count, false) {}

  std::size_t user_count() const { return user_bias_.size(); }
  std::size_t item_count() const { return item_bias_.size(); }
  std::size_t factor_count() const { return factor_count_; }
  double rating_min() const { return rating_min_; }
  double rating_max() const { return rating_max_; }

  double global_mean() const { return global_mean_; }
  double& global_mean() { return global_mean_; }

  double user_bias(UserId u) const { return user_bias_.at(u.value); }
  double& user_bias(UserId u) { return user_bias_.at(u.value); }
  double item_bias(ItemId i) const { return item_bias_.at(i.value); }
  double& item_bias(ItemId i) { return item_bias_.at(i.value); }

  std::span<const double> user_factors(UserId u) const {
    return {user_factors_.data() + static_cast<std::size_t>(u.value) * factor_count_, factor_count_};
  }
  std::span<double> user_factors(UserId u) {
    return {user_factors_.data() + static_cast<std::size_t>(u.value) * factor_count_, factor_count_};
  }
  std::span<const double> item_factors(ItemId i) const {
    return {item_factors_.data() + static_cast<std::size_t>(i.value) * factor_count_, factor_count_};
  }
  std::span<double> item_factors(ItemId i) {
    return {item_factors_.data() + static_cast<std::size_t>(i.value) * factor_count_, factor_count_};
  }

  bool user_known(UserId u) const { return u.value < user_known_.size() && user_known_[u.value]; }
  bool item_known(ItemId i) const { return i.value < item_known_.size() && item_known_[i.value]; }
  void set_user_known(UserId u, bool known = true) { user_known_.at(u.value) = known; }
  void set_item_known(ItemId i, bool known = true) { item_known_.at(i.value) = known; }

  /// Unclamped score; unknown sides contribute neither bias nor factors.
  double raw_score(UserId u, ItemId i) const {
    const bool uk = user_known(u);
    const bool ik = item_known(i);
    double s = global_mean_;
    if (uk) s += user_bias_[u.value];
    if (ik) s += item_bias_[i.value];
    if (uk && ik) {
      auto p = user_factors(u);
      auto q = item_factors(i);
      s += std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
    }
    return s;
  }

  double predict(UserId u, ItemId i) const {
    return std::clamp(raw_score(u, i), rating_min_, rating_max_);
  }

  bool all_finite() const {
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return std::isfinite(global_mean_) && finite(user_bias_) && finite(item_bias_) &&
           finite(user_factors_) && finite(item_factors_);
  }

  bool operator==(const FactorModel&) const = default;

 private:
  std::size_t factor_count_ = 0;
  double global_mean_ = 0.0;
  double rating_min_ = kMinRating;
  double rating_max_ = kMaxRating;
  std::vector<double> user_bias_;
  std::vector<double> item_bias_;
  std::vector<double> user_factors_;
  std::vector<double> item_factors_;
  std::vector<bool> user_known_;
  std::vector<bool> item_known_;
};

// Gradient of the per-rating loss  0.5*err^2 + 0.5*reg*(a^2 + b^2)  with
// respect to the two coupled parameters a, b, where err = r - (... + a*b).
// For bias parameters pass the bias as `own` and use the user/item slot alone.
struct PairGradient {
  double user = 0.0;
  double item = 0.0;
};

inline PairGradient factor_gradient(double err, double p, double q, double reg) {
  return {-err * q + reg * p, -err * p + reg * q};
}

inline PairGradient bias_gradient(double err, double user_bias, double item_bias, double reg) {
  return {-err + reg * user_bias, -err + reg * item_bias};
}

/// Full gradient of
///   J = sum_r 0.5*(r - raw_score)^2 + 0.5*reg*(b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2)
/// with respect to every bias and factor entry, assembled from the same
/// per-rating terms the trainer steps along.
struct ModelGradient {
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  std::vector<double> user_factors;  // user-major, factor_count per user
  std::vector<double> item_factors;
};

template <class Range>
ModelGradient objective_gradient(const FactorModel& model, const Range& observations, double reg) {
  const std::size_t k = model.factor_count();
  ModelGradient g{std::vector<double>(model.user_count(), 0.0),
                  std::vector<double>(model.item_count(), 0.0),
                  std::vector<double>(model.user_count() * k, 0.0),
                  std::vector<double>(model.item_count() * k, 0.0)};
  for (const Observation& o : observations) {
    const double err = o.value - model.raw_score(o.user, o.item);
    const auto bg = bias_gradient(err, model.user_bias(o.user), model.item_bias(o.item), reg);
    g.user_bias[o.user.value] += bg.user;
    g.item_bias[o.item.value] += bg.item;
    auto p = model.user_factors(o.user);
    auto q = model.item_factors(o.item);
    for (std::size_t f = 0; f < k; ++f) {
      const auto fg = factor_gradient(err, p[f], q[f], reg);
      g.user_factors[o.user.value * k + f] += fg.user;
      g.item_factors[o.item.value * k + f] += fg.item;
    }
  }
  return g;
}

struct TrainingReport {
  std::vector<double> bias_epoch_loss;
  std::vector<std::vector<double>> factor_epoch_loss;  // [factor][epoch]
  std::size_t loss_increases = 0;
};

namespace detail {

inline bool loss_increased(double previous, double current) {
  return current > previous + 1e-9 * std::max(1.0, std::abs(previous));
}

}  // namespace detail

/// Funk-style training: damped-mean bias initialisation, an SGD phase on the
/// biases, then one latent factor at a time with earlier factors frozen and
/// later ones counted at their initial value.
/// Sweeps visit ratings in (user, item) order each epoch, so the result is a
/// pure function of the input set and hyperparameters.
template <class Range>
FactorModel train(const Range& observations, std::size_t user_count, std::size_t item_count,
                  const Hyperparams& hp, TrainingReport* report = nullptr) {
  hp.validate();
  std::vector<Observation> data(std::begin(observations), std::end(observations));
  if (data.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no ratings to train on");
  for (const auto& o : data) {
    if (o.user.value >= user_count || o.item.value >= item_count) {
      throw Error(ErrorCode::InvalidArgument, "observation index outside model dimensions");
    }
  }
  std::sort(data.begin(), data.end(), [](const Observation& a, const Observation& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });

  double sum = 0.0;
  for (const auto& o : data) sum += o.value;
  const double mean = sum / static_cast<double>(data.size());

  FactorModel model(user_count, item_count, hp.factor_count, mean, hp.rating_min, hp.rating_max);

  std::vector<double> item_offset(item_count, 0.0);
  std::vector<double> item_n(item_count, 0.0);
  for (const auto& o : data) {
    item_offset[o.item.value] += o.value - mean;
    item_n[o.item.value] += 1.0;
    model.set_user_known(o.user);
    model.set_item_known(o.item);
  }
  for (std::uint32_t i = 0; i < item_count; ++i) {
    if (item_n[i] > 0.0) model.item_bias(ItemId{i}) = item_offset[i] / (item_n[i] + hp.bias_damping);
  }
  std::vector<double> user_offset(user_count, 0.0);
  std::vector<double> user_n(user_count, 0.0);
  for (const auto& o : data) {
    user_offset[o.user.value] += o.value - mean - model.item_bias(o.item);
    user_n[o.user.value] += 1.0;
  }
  for (std::uint32_t u = 0; u < user_count; ++u) {
    if (user_n[u] > 0.0) model.user_bias(UserId{u}) = user_offset[u] / (user_n[u] + hp.bias_damping);
  }

  const double lr = hp.learning_rate;
  const double reg = hp.regularization;
  TrainingReport local;
  TrainingReport& rep = report ? *report : local;
  rep = TrainingReport{};

  for (std::size_t epoch = 0; epoch < hp.epochs_per_factor; ++epoch) {
    double loss = 0.0;
    for (const auto& o : data) {
      double& bu = model.user_bias(o.user);
      double& bi = model.item_bias(o.item);
      const double err = o.value - (mean + bu + bi);
      loss += 0.5 * err * err + 0.5 * reg * (bu * bu + bi * bi);
      const auto g = bias_gradient(err, bu, bi, reg);
      bu -= lr * g.user;
      bi -= lr * g.item;
    }
    if (!rep.bias_epoch_loss.empty() && detail::loss_increased(rep.bias_epoch_loss.back(), loss)) {
      ++rep.loss_increases;
    }
    rep.bias_epoch_loss.push_back(loss);
  }

  // Running sum of baseline plus all finished factors, per rating.
  std::vector<double> cache(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    cache[k] = mean + model.user_bias(data[k].user) + model.item_bias(data[k].item);
  }

  rep.factor_epoch_loss.assign(hp.factor_count, {});
  for (std::size_t f = 0; f < hp.factor_count; ++f) {
    // Factors not trained yet still sit at their initial value and will be
    // part of the final prediction.
    const double trailing = static_cast<double>(hp.factor_count - f - 1) * kInitialFactor * kInitialFactor;
    auto& trace = rep.factor_epoch_loss[f];
    trace.reserve(hp.epochs_per_factor);
    for (std::size_t epoch = 0; epoch < hp.epochs_per_factor; ++epoch) {
      double loss = 0.0;
      for (std::size_t k = 0; k < data.size(); ++k) {
        const auto& o = data[k];
        double& p = model.user_factors(o.user)[f];
        double& q = model.item_factors(o.item)[f];
        const double err = o.value - (cache[k] + p * q + trailing);
        loss += 0.5 * err * err + 0.5 * reg * (p * p + q * q);
        const auto g = factor_gradient(err, p, q, reg);
        p -= lr * g.user;
        q -= lr * g.item;
      }
      if (!trace.empty() && detail::loss_increased(trace.back(), loss)) ++rep.loss_increases;
      trace.push_back(loss);
    }
    for (std::size_t k = 0; k < data.size(); ++k) {
      cache[k] += model.user_factors(data[k].user)[f] * model.item_factors(data[k].item)[f];
    }
  }

  if (!model.all_finite()) {
    throw Error(ErrorCode::TrainingDiverged, "non-finite parameters after training; lower learning_rate");
  }
  return model;
}

/// The `n` items of `universe` minus `exclude` with the highest predictions,
/// ties broken by ascending item index.
inline std::vector<ItemId> recommend_top_n(const FactorModel& model, UserId user,
                                           std::span<const ItemId> universe,
                                           const std::set<ItemId>& exclude, std::size_t n) {
  if (universe.empty()) throw Error(ErrorCode::InvalidArgument, "recommendation universe is empty");
  std::vector<std::pair<double, ItemId>> scored;
  scored.reserve(universe.size());
  for (ItemId i : universe) {
    if (!exclude.contains(i)) scored.emplace_back(model.predict(user, i), i);
  }
  auto better = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  const std::size_t take = std::min(n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
  std::vector<ItemId> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) out.push_back(scored[k].second);
  return out;
}

// Debug dump:
//   funksvd <users> <items> <factors> <global_mean>
//   U <index> <known 0|1> <bias> <f_1> ... <f_k>     (one line per user)
//   I <index> <known 0|1> <bias> <f_1> ... <f_k>     (one line per item)
inline void write_model(std::ostream& out, const FactorModel& model) {
  const auto old_precision = out.precision(17);
  out << "funksvd " << model.user_count() << ' ' << model.item_count() << ' ' << model.factor_count()
      << ' ' << model.global_mean() << '\n';
  for (std::uint32_t u = 0; u < model.user_count(); ++u) {
    const UserId id{u};
    out << "U " << u << ' ' << model.user_known(id) << ' ' << model.user_bias(id);
    for (double x : model.user_factors(id)) out << ' ' << x;
    out << '\n';
  }
  for (std::uint32_t i = 0; i < model.item_count(); ++i) {
    const ItemId id{i};
    out << "I " << i << ' ' << model.item_known(id) << ' ' << model.item_bias(id);
    for (double x : model.item_factors(id)) out << ' ' << x;
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace elicit
