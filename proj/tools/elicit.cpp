#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "elicit/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Offline simulator for new-user rating elicitation in single- and cross-domain recommenders"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the scenario x strategy grid described by a config file");
  run->add_option("--config", config_path, "Experiment config (key = value)")->required();

  std::string spec_path;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-domain corpus");
  synth->add_option("--spec", spec_path, "Generator spec (key = value)")->required();

  std::string snap_in, snap_domain, snap_out;
  auto* convert = app.add_subcommand("convert-snap", "Convert a SNAP review dump to rating CSV");
  convert->add_option("--in", snap_in, "SNAP dump")->required();
  convert->add_option("--domain", snap_domain, "target or auxiliary")->required();
  convert->add_option("--out", snap_out, "Output CSV")->required();

  std::string dump_in, dump_out;
  elicit::Hyperparams hp;
  auto* dump = app.add_subcommand("dump-model", "Train on a rating CSV and write the factor model as text");
  dump->add_option("--in", dump_in, "Rating CSV")->required();
  dump->add_option("--out", dump_out, "Model dump path")->required();
  dump->add_option("--factors", hp.factor_count, "Latent factor count");
  dump->add_option("--learning-rate", hp.learning_rate, "SGD learning rate");
  dump->add_option("--regularization", hp.regularization, "L2 regularization");
  dump->add_option("--epochs", hp.epochs_per_factor, "Epochs per factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : elicit::cli::kExitConfig;
  }

  if (*run) return elicit::cli::run(config_path, std::cerr, elicit::cli::workers_from_env());
  if (*synth) return elicit::cli::synth(spec_path, std::cerr);
  if (*convert) return elicit::cli::convert_snap(snap_in, snap_domain, snap_out, std::cerr);
  if (*dump) return elicit::cli::dump_model(dump_in, dump_out, hp, std::cerr);
  return elicit::cli::kExitConfig;
}
