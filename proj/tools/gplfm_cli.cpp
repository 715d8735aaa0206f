// Command-line front end for the switching latent-force identification
// pipeline. Verbs:
//   simulate        build the dataset only and write dataset.csv
//   identify        run the full experiment pipeline
//   sweep           run one experiment per value along snr / t_f / f_s
//   validate-config parse and validate a config, print the canonical form
// All behavior comes from the config file plus explicit --set overrides;
// environment variables are never consulted.
#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gplfm/csv_io.hpp"
#include "gplfm/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;  // optional override of config.output_dir
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "JSON experiment config")->required();
  cmd->add_option("--set", args.overrides,
                  "Override a config key, e.g. --set signal.snr_db=90 (repeatable)");
  cmd->add_option("-o,--output-dir", args.output_dir, "Override the config's output directory");
}

gplfm::ExperimentConfig load(const CommonArgs& args) {
  gplfm::ExperimentConfig config = gplfm::load_config(args.config_path, args.overrides);
  if (!args.output_dir.empty()) config.output_dir = args.output_dir;
  return config;
}

int run_simulate(const CommonArgs& args) {
  const gplfm::ExperimentConfig config = load(args);
  const gplfm::Dataset data = gplfm::build_dataset(config);
  std::filesystem::create_directories(config.output_dir);

  gplfm::CsvTable table;
  table.add_column("time [s]", data.time);
  if (config.excitation.kind == gplfm::ExcitationKind::DirectForce) {
    table.add_column("input force [N]", data.inputs.col(0));
  } else {
    table.add_column("base displacement [m]", data.inputs.col(0));
    table.add_column("base velocity [m/s]", data.inputs.col(1));
  }
  table.add_column("observation [m]", data.observations);
  if (data.truth) {
    table.add_column("true position [m]", data.truth->position);
    table.add_column("true velocity [m/s]", data.truth->velocity);
    table.add_column("true acceleration [m/s^2]", data.truth->acceleration);
    table.add_column("true friction [N]", data.truth->friction);
  }
  const std::string path = config.output_dir + "/dataset.csv";
  gplfm::write_csv(path, table);
  std::printf("wrote %s (%ld samples, noise sd %.6g)\n", path.c_str(), data.samples(),
              data.noise_sd);
  return 0;
}

int run_identify(const CommonArgs& args) {
  const gplfm::ExperimentConfig config = load(args);
  const gplfm::ExperimentReport report = gplfm::run_experiment(config);

  for (const auto& variant : report.variants) {
    if (variant.metrics) {
      std::printf("%-22s NMSE[z] %.4g %%  NMSE[F] %.4g %%  NMV[F] %.4g %%\n",
                  variant.name.c_str(), variant.metrics->nmse_position,
                  variant.metrics->nmse_force, variant.metrics->nmv_force);
    } else {
      std::printf("%-22s log-likelihood %.6g\n", variant.name.c_str(), variant.log_likelihood);
    }
  }
  if (report.correction) {
    const gplfm::SystemParams& corrected = report.correction->correction.corrected;
    std::printf("corrected parameters   m %.6g  c %.6g  k %.6g\n", corrected.mass,
                corrected.damping, corrected.stiffness);
  }
  if (report.static_friction) {
    std::printf("static friction        %.6g N (sd %.3g, %ld stops)\n",
                report.static_friction->mean, report.static_friction->standard_deviation,
                report.static_friction->count);
  }
  if (report.prediction_nmse) {
    std::printf("prediction NMSE        %.4g %%\n", *report.prediction_nmse);
  }
  std::printf("report: %s/report.json\n", config.output_dir.c_str());
  return 0;
}

int run_sweep_cmd(const CommonArgs& args, const std::string& axis_text,
                  const std::vector<std::string>& value_texts, int workers) {
  const gplfm::ExperimentConfig config = load(args);
  const gplfm::SweepAxis axis = gplfm::parse_sweep_axis(axis_text);

  std::vector<double> values;
  values.reserve(value_texts.size());
  for (const std::string& text : value_texts) {
    if (text == "inf") {
      values.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      values.push_back(v);
    } catch (const std::exception&) {
      throw gplfm::ConfigError("sweep value '" + text + "' is not a number");
    }
  }

  const gplfm::SweepResult result = gplfm::run_sweep(config, axis, values, workers);
  std::fputs(result.table_text.c_str(), stdout);
  std::printf("table: %s/sweep_%s.csv\n", config.output_dir.c_str(),
              gplfm::sweep_axis_name(axis).c_str());
  return 0;
}

int run_validate(const CommonArgs& args) {
  const gplfm::ExperimentConfig config = load(args);
  std::fputs(gplfm::canonical_config_text(config).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switching Gaussian-process latent force identification"};
  app.require_subcommand(1);

  CommonArgs simulate_args, identify_args, sweep_args, validate_args;
  std::string sweep_axis;
  std::vector<std::string> sweep_values;
  int sweep_workers = 1;

  add_common(app.add_subcommand("simulate", "Generate or load the dataset only"), simulate_args);
  add_common(app.add_subcommand("identify", "Run the full identification pipeline"),
             identify_args);
  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(sweep, sweep_args);
  sweep->add_option("--axis", sweep_axis, "Sweep axis: snr, t_f, or f_s")->required();
  sweep->add_option("--values", sweep_values, "Axis values ('inf' allowed for snr)")
      ->required()
      ->expected(-1);
  sweep->add_option("--workers", sweep_workers, "Bounded worker-pool size (default 1)");
  add_common(app.add_subcommand("validate-config", "Validate a config and print canonical form"),
             validate_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("simulate")) return run_simulate(simulate_args);
    if (app.got_subcommand("identify")) return run_identify(identify_args);
    if (app.got_subcommand("sweep")) {
      return run_sweep_cmd(sweep_args, sweep_axis, sweep_values, sweep_workers);
    }
    return run_validate(validate_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
