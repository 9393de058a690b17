#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "elicit/config.hpp"
#include "elicit/harness.hpp"
#include "elicit/ingestion.hpp"
#include "elicit/metrics.hpp"

namespace elicit {

/// Inputs after loading and user filtering.
struct PreparedData {
  Dataset target;
  std::optional<Dataset> auxiliary;
};

inline PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData data;
  Dataset target = build_dataset(load_csv(config.target_csv), Domain::Target);
  if (config.auxiliary_csv) {
    Dataset aux = build_dataset(load_csv(*config.auxiliary_csv), Domain::Auxiliary);
    auto [t, a] = filter_overlap(target, aux, config.min_ratings);
    data.target = std::move(t);
    data.auxiliary = std::move(a);
  } else {
    data.target = filter_min_ratings(target, config.min_ratings);
  }
  return data;
}

/// Every (scenario, strategy) cell of the grid. Each scenario contributes one
/// baseline row (iteration 0, no strategy) followed by each strategy's
/// learning curve.
inline std::vector<ExperimentResult> run_grid(const ExperimentConfig& config, const Corpus& corpus,
                                              std::size_t workers = 1,
                                              std::function<void(const std::string&)> on_warning = {}) {
  std::vector<ExperimentResult> rows;
  for (Scenario scenario : config.scenarios) {
    ExperimentOptions opt;
    opt.scenario = scenario;
    opt.hyperparams = config.hyperparams;
    opt.folds = config.folds;
    opt.max_elicited = config.max_elicited;
    opt.top_n = config.top_n;
    opt.seed = config.seed;
    opt.workers = workers;
    opt.on_warning = on_warning;

    opt.strategy = std::nullopt;
    auto baseline = run_experiment(corpus, opt);
    rows.push_back(baseline.front());
    for (StrategyKind s : config.strategies) {
      opt.strategy = s;
      for (auto& r : run_experiment(corpus, opt)) rows.push_back(r);
    }
  }
  return rows;
}

namespace detail {

inline std::string fixed4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  // "-0.0000" would make otherwise identical runs diff.
  if (std::string_view(buf) == "-0.0000") return "0.0000";
  return buf;
}

inline std::string fixed4(const std::optional<double>& x) { return x ? fixed4(*x) : std::string(); }

inline std::string strategy_label(const std::optional<StrategyKind>& s) {
  return s ? std::string(to_string(*s)) : std::string("none");
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  return out;
}

}  // namespace detail

inline void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  out << "scenario,strategy,iteration,mae,spread,improvement_mae,improvement_spread\n";
  for (const auto& r : rows) {
    out << to_string(r.scenario) << ',' << detail::strategy_label(r.strategy) << ',' << r.iteration << ','
        << detail::fixed4(r.mae) << ',' << detail::fixed4(r.spread) << ',' << detail::fixed4(r.improvement_mae)
        << ',' << detail::fixed4(r.improvement_spread) << '\n';
  }
}

enum class TableMode {
  FinalIteration,   // values at the last elicitation iteration
  MeanOverCurve,    // values averaged over iterations 0..max_elicited
};

/// Table in the shape strategy x {MAE, Spread} x {single, cross}, with the
/// baseline row last. Improvements are against the scenario's baseline.
inline void write_table(std::ostream& out, const std::vector<ExperimentResult>& rows, TableMode mode) {
  struct Cell {
    double mae = 0.0, spread = 0.0;
    std::size_t n = 0;
  };
  std::map<std::pair<Scenario, std::optional<StrategyKind>>, Cell> cells;
  std::map<std::pair<Scenario, std::optional<StrategyKind>>, std::size_t> last_iteration;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.scenario, r.strategy);
    auto& last = last_iteration[key];
    last = std::max(last, r.iteration);
  }
  for (const auto& r : rows) {
    auto key = std::make_pair(r.scenario, r.strategy);
    if (mode == TableMode::FinalIteration && r.iteration != last_iteration[key]) continue;
    auto& c = cells[key];
    c.mae += r.mae;
    c.spread += r.spread;
    ++c.n;
  }

  std::vector<std::optional<StrategyKind>> order;
  for (auto s : kAllStrategies) order.emplace_back(s);
  order.emplace_back(std::nullopt);

  out << "strategy,mae_single,improve_mae_single,mae_cross,improve_mae_cross,"
         "spread_single,improve_spread_single,spread_cross,improve_spread_cross\n";
  for (const auto& strategy : order) {
    bool present = false;
    for (auto sc : {Scenario::SingleDomain, Scenario::CrossDomain}) present |= cells.contains({sc, strategy});
    if (!present) continue;

    std::string mae_cols, spread_cols;
    for (auto sc : {Scenario::SingleDomain, Scenario::CrossDomain}) {
      auto it = cells.find({sc, strategy});
      auto base = cells.find({sc, std::nullopt});
      if (it == cells.end()) {
        mae_cols += ",,";
        spread_cols += ",,";
        continue;
      }
      const double m = it->second.mae / static_cast<double>(it->second.n);
      const double s = it->second.spread / static_cast<double>(it->second.n);
      std::optional<double> im, is;
      if (strategy && base != cells.end()) {
        const double bm = base->second.mae / static_cast<double>(base->second.n);
        const double bs = base->second.spread / static_cast<double>(base->second.n);
        if (bm > 0.0) im = improvement(m, bm, Direction::LowerIsBetter);
        if (bs > 0.0) is = improvement(s, bs, Direction::HigherIsBetter);
      }
      mae_cols += "," + detail::fixed4(m) + "," + detail::fixed4(im);
      spread_cols += "," + detail::fixed4(s) + "," + detail::fixed4(is);
    }
    out << detail::strategy_label(strategy) << mae_cols << spread_cols << '\n';
  }
}

/// Identifier-to-index mapping used for the run.
inline void write_index_map(std::ostream& out, const Corpus& corpus) {
  out << "kind,index,id\n";
  for (std::uint32_t u = 0; u < corpus.user_count(); ++u) {
    out << "user," << u << ',' << corpus.user_name(UserId{u}) << '\n';
  }
  for (std::uint32_t i = 0; i < corpus.item_count(); ++i) {
    out << "item," << i << ',' << corpus.item_name(ItemId{i}) << '\n';
  }
}

/// Writes results.csv, table1.csv, table1_mean.csv and index_map.csv into
/// the configured output directory.
inline void write_outputs(const ExperimentConfig& config, const Corpus& corpus,
                          const std::vector<ExperimentResult>& rows) {
  std::filesystem::create_directories(config.output_dir);
  {
    auto out = detail::open_output(config.output_dir / "results.csv");
    write_results_csv(out, rows);
  }
  {
    auto out = detail::open_output(config.output_dir / "table1.csv");
    write_table(out, rows, TableMode::FinalIteration);
  }
  {
    auto out = detail::open_output(config.output_dir / "table1_mean.csv");
    write_table(out, rows, TableMode::MeanOverCurve);
  }
  {
    auto out = detail::open_output(config.output_dir / "index_map.csv");
    write_index_map(out, corpus);
  }
}

}  // namespace elicit
