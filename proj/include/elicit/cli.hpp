#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>

#include "elicit/config.hpp"
#include "elicit/error.hpp"
#include "elicit/ingestion.hpp"
#include "elicit/runner.hpp"
#include "elicit/synthetic.hpp"

namespace elicit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;

inline constexpr const char* kWorkersEnv = "ELICIT_WORKERS";

/// Worker count from ELICIT_WORKERS, defaulting to the hardware concurrency.
inline std::size_t workers_from_env() {
  if (const char* raw = std::getenv(kWorkersEnv)) {
    try {
      const long n = std::stol(raw);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvalidArgument:
      return kExitConfig;
    default:
      return kExitData;
  }
}

inline int run(const std::filesystem::path& config_path, std::ostream& log, std::size_t workers) {
  ExperimentConfig config;
  try {
    config = ExperimentConfig::load(config_path);
  } catch (const Error& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const PreparedData data = prepare_data(config);
    const Corpus corpus(data.target, data.auxiliary ? &*data.auxiliary : nullptr);
    log << "target: " << data.target.users().size() << " users, " << data.target.items().size() << " items, "
        << data.target.size() << " ratings (density " << detail::fixed4(100.0 * data.target.density()) << "%)\n";
    if (data.auxiliary) {
      log << "auxiliary: " << data.auxiliary->users().size() << " users, " << data.auxiliary->items().size()
          << " items, " << data.auxiliary->size() << " ratings (density "
          << detail::fixed4(100.0 * data.auxiliary->density()) << "%)\n";
    }
    const auto rows = run_grid(config, corpus, workers, [&log](const std::string& w) { log << "warning: " << w << '\n'; });
    write_outputs(config, corpus, rows);
    log << "wrote " << rows.size() << " result rows to " << config.output_dir.string() << '\n';
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArgument ? kExitConfig : kExitData;
  }
  return kExitOk;
}

inline int synth(const std::filesystem::path& spec_path, std::ostream& log) {
  try {
    const auto job = SyntheticJob::load(spec_path);
    const auto corpus = generate_synthetic(job.spec);
    for (const auto& p : {job.target_out, job.auxiliary_out}) {
      if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    }
    write_csv(job.target_out, corpus.target);
    write_csv(job.auxiliary_out, corpus.auxiliary);
    log << "wrote " << corpus.target.size() << " target and " << corpus.auxiliary.size() << " auxiliary ratings\n";
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}

inline int convert_snap(const std::filesystem::path& in, const std::string& domain_name,
                        const std::filesystem::path& out, std::ostream& log) {
  const auto domain = parse_domain(domain_name);
  if (!domain) {
    log << "error: --domain must be 'target' or 'auxiliary'\n";
    return kExitConfig;
  }
  try {
    const auto ratings = elicit::convert_snap(in, *domain, &log);
    write_csv(out, ratings);
    log << "wrote " << ratings.size() << " ratings to " << out.string() << '\n';
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

/// Trains one model on every rating in a CSV and writes the debug dump.
inline int dump_model(const std::filesystem::path& in, const std::filesystem::path& out,
                      const Hyperparams& hp, std::ostream& log) {
  try {
    auto ratings = load_csv(in);
    for (auto& r : ratings) r.domain = Domain::Target;
    const Dataset ds = build_dataset(std::move(ratings), Domain::Target);
    TrainingReport report;
    const auto model = train(ds.observations(), ds.users().size(), ds.items().size(), hp, &report);
    if (report.loss_increases > 0) {
      log << "warning: training loss rose in " << report.loss_increases << " epochs\n";
    }
    std::ofstream file(out);
    if (!file) throw Error(ErrorCode::MissingFile, "cannot write " + out.string());
    write_model(file, model);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace elicit::cli
