#include "gplfm/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "gplfm/csv_io.hpp"

namespace gplfm {

namespace {

using nlohmann::ordered_json;

SignalFunction make_synthetic_signal(const ExperimentConfig& config) {
  const SyntheticSignalConfig& spec = config.excitation.signal;
  if (spec.type == SyntheticSignalConfig::Type::Jonswap) {
    return as_signal(jonswap_multisine(spec.jonswap));
  }
  return as_signal(
      harmonic_signal(spec.harmonic_amplitude, spec.harmonic_frequency_hz, spec.harmonic_phase));
}

// Piecewise-linear interpolant over sampled input data, for forward
// prediction from CSV sources. Outside the sampled range the edge value is
// held. The velocity channel uses the provided samples when available and
// the segment slope otherwise.
SignalFunction sampled_signal(const Eigen::VectorXd& time, const Eigen::VectorXd& value,
                              const Eigen::VectorXd& velocity) {
  struct Data {
    Eigen::VectorXd t, v, vel;
  };
  auto data = std::make_shared<Data>(Data{time, value, velocity});

  auto locate = [data](double at) {
    const long n = data->t.size();
    if (at <= data->t(0)) return 0L;
    if (at >= data->t(n - 1)) return n - 2;
    long lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const long mid = (lo + hi) / 2;
      (data->t(mid) <= at ? lo : hi) = mid;
    }
    return lo;
  };

  auto interp = [data, locate](double at, const Eigen::VectorXd& y) {
    const long n = data->t.size();
    if (at <= data->t(0)) return y(0);
    if (at >= data->t(n - 1)) return y(n - 1);
    const long i = locate(at);
    const double w = (at - data->t(i)) / (data->t(i + 1) - data->t(i));
    return y(i) + w * (y(i + 1) - y(i));
  };

  SignalFunction out;
  out.value = [data, interp](double at) { return interp(at, data->v); };
  if (velocity.size() > 0) {
    out.velocity = [data, interp](double at) { return interp(at, data->vel); };
  } else {
    out.velocity = [data, locate](double at) {
      const long i = locate(at);
      return (data->v(i + 1) - data->v(i)) / (data->t(i + 1) - data->t(i));
    };
  }
  return out;
}

Dataset synthetic_dataset(const ExperimentConfig& config) {
  const SignalFunction input = make_synthetic_signal(config);
  const Trajectory sim = simulate_stick_slip(config.system, config.friction, input,
                                             config.signal.final_time, config.excitation.kind);
  const Trajectory res = resample_uniform(sim, config.signal.sampling_frequency);

  Dataset data;
  data.time = res.time;
  data.dt = 1.0 / config.signal.sampling_frequency;
  const long n = res.size();
  data.inputs.resize(n, input_dim(config.excitation.kind));
  data.inputs.col(0) = res.input;
  if (config.excitation.kind == ExcitationKind::BaseMotion) {
    data.inputs.col(1) = res.input_velocity;
  }
  if (std::isinf(config.signal.snr_db)) {
    data.observations = res.position;
    data.noise_sd = 0.0;
  } else {
    const NoisySignal noisy =
        add_noise_snr(res.position, config.signal.snr_db, config.seeds.noise);
    data.observations = noisy.values;
    data.noise_sd = noisy.noise_sd;
  }
  data.truth = res;
  return data;
}

Dataset csv_dataset(const ExperimentConfig& config) {
  const CsvTable table = read_csv(config.resolved_csv_path());
  const CsvSourceConfig& src = config.excitation.csv;

  Dataset data;
  data.time = table.column(src.time_column);
  const long n = data.time.size();
  if (n < 3) throw ConfigError("excitation.source.path: dataset needs at least 3 samples");
  if (std::abs(data.time(0)) > 1e-12) {
    throw ConfigError("excitation.source.time_column: time must start at 0");
  }
  const double dt = data.time(1) - data.time(0);
  if (!(dt > 0.0)) throw ConfigError("excitation.source.time_column: time must increase");
  for (long t = 1; t < n; ++t) {
    if (std::abs(data.time(t) - data.time(t - 1) - dt) > 1e-6 * dt) {
      throw ConfigError("excitation.source.time_column: sampling is not uniform at row " +
                        std::to_string(t + 1));
    }
  }
  data.dt = dt;
  data.observations = table.column(src.observation_column);

  const Eigen::VectorXd raw_input = table.column(src.input_column);
  data.inputs.resize(n, input_dim(config.excitation.kind));
  if (config.excitation.kind == ExcitationKind::DirectForce) {
    data.inputs.col(0) = raw_input;
  } else if (!src.input_velocity_column.empty()) {
    data.inputs.col(0) = raw_input;
    data.inputs.col(1) = table.column(src.input_velocity_column);
  } else {
    // No measured input velocity: reconstruct the pair with the kinematic
    // smoother, which also de-noises the displacement.
    const BaseInputSmoother hyper =
        optimize_base_smoother(raw_input, 1.0 / dt, 600, config.optimizer.seed);
    const SmoothedInput smoothed = smooth_base_input(raw_input, 1.0 / dt, hyper);
    data.inputs.col(0) = smoothed.displacement;
    data.inputs.col(1) = smoothed.velocity;
  }
  data.noise_sd = 0.0;
  return data;
}

VariantMetrics score_variant(const VariantResult& v, const Trajectory& truth) {
  VariantMetrics m;
  m.nmse_position = nmse(truth.position, v.position_mean);
  m.nmse_velocity = nmse(truth.velocity, v.velocity_mean);
  m.nmse_acceleration = nmse(truth.acceleration, v.acceleration_mean);
  m.nmse_force = nmse(truth.friction, v.force_mean);
  m.nmv_force = nmv(truth.friction, v.force_var);
  if (v.regime_kinds.size() > 1) {
    long mismatches = 0;
    const long n = static_cast<long>(v.map_labels.size());
    for (long t = 0; t < n; ++t) {
      const RegimeKind kind = v.regime_kinds[static_cast<size_t>(v.map_labels[t])];
      const MotionPhase est =
          kind == RegimeKind::Sliding ? MotionPhase::Slip : MotionPhase::Stick;
      if (est != truth.labels[static_cast<size_t>(t)]) ++mismatches;
    }
    m.regime_error = static_cast<double>(mismatches) / static_cast<double>(n);
  }
  return m;
}

std::string format_index(size_t index) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%02zu", index);
  return buffer;
}

// --------------------------------------------------------------------------
// Report serialization
// --------------------------------------------------------------------------

ordered_json system_json(const SystemParams& p) {
  return ordered_json{{"mass", p.mass}, {"damping", p.damping}, {"stiffness", p.stiffness}};
}

ordered_json friction_json(const FrictionParams& p) {
  return ordered_json{{"f_star", p.f_star}, {"a", p.a},           {"b", p.b},
                      {"c", p.c},           {"v_star", p.v_star}, {"epsilon", p.epsilon}};
}

ordered_json metrics_json(const VariantMetrics& m) {
  ordered_json out{{"nmse_position_percent", m.nmse_position},
                   {"nmse_velocity_percent", m.nmse_velocity},
                   {"nmse_acceleration_percent", m.nmse_acceleration},
                   {"nmse_force_percent", m.nmse_force},
                   {"nmv_force_percent", m.nmv_force}};
  if (m.regime_error) out["regime_error"] = *m.regime_error;
  return out;
}

ordered_json variant_json(const VariantResult& v) {
  ordered_json out;
  out["name"] = v.name;
  out["system"] = system_json(v.system);
  out["hyperparameters"] = ordered_json{{"force_variance", v.hyper.force_variance},
                                        {"lengthscale", v.hyper.lengthscale},
                                        {"noise_variance", v.hyper.noise_variance},
                                        {"log_posterior", v.hyper.log_posterior},
                                        {"evaluations", v.hyper.evaluations}};
  out["log_likelihood"] = v.log_likelihood;
  out["metrics"] = v.metrics ? metrics_json(*v.metrics) : ordered_json(nullptr);
  return out;
}

std::string build_report_text(const ExperimentConfig& config, const ExperimentReport& report) {
  ordered_json doc;
  doc["schema"] = "gplfm-report-v1";
  doc["config"] = ordered_json::parse(canonical_config_text(config));

  ordered_json dataset;
  dataset["source"] = config.excitation.synthetic ? "synthetic" : "csv";
  dataset["samples"] = report.data.samples();
  dataset["dt"] = report.data.dt;
  dataset["duration"] = report.data.time(report.data.samples() - 1);
  dataset["noise_sd"] = report.data.noise_sd;
  if (report.data.truth) {
    const Trajectory& truth = *report.data.truth;
    long sticks = 0, stops = 0;
    for (size_t t = 0; t < truth.labels.size(); ++t) {
      if (truth.labels[t] == MotionPhase::Stick) {
        ++sticks;
        if (t + 1 < truth.labels.size() && truth.labels[t + 1] == MotionPhase::Slip) ++stops;
      }
    }
    dataset["truth"] = ordered_json{
        {"stick_fraction", static_cast<double>(sticks) / static_cast<double>(truth.size())},
        {"stops", stops}};
  }
  doc["dataset"] = dataset;

  ordered_json variants = ordered_json::array();
  for (const auto& v : report.variants) variants.push_back(variant_json(v));
  doc["variants"] = variants;

  if (report.correction) {
    const CorrectionReport& c = *report.correction;
    ordered_json fit{{"a0", c.fit.a0},
                     {"a1", c.fit.a1},
                     {"a2", c.fit.a2},
                     {"a3", c.fit.a3 ? ordered_json(*c.fit.a3) : ordered_json(nullptr)},
                     {"residual_rms", c.fit.residual_rms}};
    doc["correction"] = ordered_json{{"coefficients", fit},
                                     {"delta_mass", c.correction.delta_mass},
                                     {"delta_damping", c.correction.delta_damping},
                                     {"delta_stiffness", c.correction.delta_stiffness},
                                     {"corrected", system_json(c.correction.corrected)}};
  } else {
    doc["correction"] = nullptr;
  }

  if (report.static_friction) {
    doc["static_friction"] = ordered_json{{"mean", report.static_friction->mean},
                                          {"sd", report.static_friction->standard_deviation},
                                          {"stops", report.static_friction->count}};
  } else {
    doc["static_friction"] = nullptr;
  }

  if (report.law) {
    ordered_json law;
    law["slip_samples"] = report.law->slip_samples;
    law["unconstrained"] = friction_json(report.law->unconstrained);
    law["constrained"] = report.law->constrained ? friction_json(*report.law->constrained)
                                                 : ordered_json(nullptr);
    doc["friction_law"] = law;
  } else {
    doc["friction_law"] = nullptr;
  }

  doc["prediction"] = report.prediction_nmse
                          ? ordered_json{{"nmse_percent", *report.prediction_nmse}}
                          : ordered_json(nullptr);

  ordered_json files = ordered_json::array();
  for (const auto& f : report.files) files.push_back(f);
  doc["files"] = files;
  return doc.dump(2) + "\n";
}

Eigen::VectorXd to_sd(const Eigen::VectorXd& variance) {
  return variance.cwiseMax(0.0).cwiseSqrt();
}

void write_dataset_csv(const std::string& dir, const ExperimentConfig& config,
                       const Dataset& data, std::vector<std::string>& files) {
  CsvTable table;
  table.add_column("time [s]", data.time);
  if (config.excitation.kind == ExcitationKind::DirectForce) {
    table.add_column("input force [N]", data.inputs.col(0));
  } else {
    table.add_column("base displacement [m]", data.inputs.col(0));
    table.add_column("base velocity [m/s]", data.inputs.col(1));
  }
  table.add_column("observation [m]", data.observations);
  if (data.truth) {
    const Trajectory& truth = *data.truth;
    table.add_column("true position [m]", truth.position);
    table.add_column("true velocity [m/s]", truth.velocity);
    table.add_column("true acceleration [m/s^2]", truth.acceleration);
    table.add_column("true friction [N]", truth.friction);
    Eigen::VectorXd regime(truth.size());
    for (long t = 0; t < truth.size(); ++t) {
      regime(t) = truth.labels[static_cast<size_t>(t)] == MotionPhase::Stick ? 1.0 : 0.0;
    }
    table.add_column("true stick [0/1]", regime);
  }
  write_csv(dir + "/dataset.csv", table);
  files.push_back("dataset.csv");
}

void write_variant_csvs(const std::string& dir, const Dataset& data, const VariantResult& v,
                        std::vector<std::string>& files) {
  CsvTable states;
  states.add_column("time [s]", data.time);
  states.add_column("position mean [m]", v.position_mean);
  states.add_column("position sd [m]", to_sd(v.position_var));
  states.add_column("velocity mean [m/s]", v.velocity_mean);
  states.add_column("velocity sd [m/s]", to_sd(v.velocity_var));
  states.add_column("acceleration mean [m/s^2]", v.acceleration_mean);
  states.add_column("acceleration sd [m/s^2]", to_sd(v.acceleration_var));
  states.add_column("force mean [N]", v.force_mean);
  states.add_column("force sd [N]", to_sd(v.force_var));
  const std::string states_name = "states_" + v.name + ".csv";
  write_csv(dir + "/" + states_name, states);
  files.push_back(states_name);

  if (v.regime_kinds.size() > 1) {
    CsvTable regimes;
    regimes.add_column("time [s]", data.time);
    for (size_t s = 0; s < v.regime_kinds.size(); ++s) {
      const char* label = v.regime_kinds[s] == RegimeKind::Sliding    ? "p slide [-]"
                          : v.regime_kinds[s] == RegimeKind::Sticking ? "p stick [-]"
                                                                      : "p reset [-]";
      regimes.add_column(label, v.regime_probabilities.col(static_cast<long>(s)));
    }
    Eigen::VectorXd map_col(data.samples());
    for (long t = 0; t < data.samples(); ++t) {
      map_col(t) = static_cast<double>(v.map_labels[static_cast<size_t>(t)]);
    }
    regimes.add_column("map regime [index]", map_col);
    const std::string name = "regimes_" + v.name + ".csv";
    write_csv(dir + "/" + name, regimes);
    files.push_back(name);
  }
}

}  // namespace

Dataset build_dataset(const ExperimentConfig& config) {
  return config.excitation.synthetic ? synthetic_dataset(config) : csv_dataset(config);
}

VariantResult run_variant(const std::string& name, const SystemParams& system, bool stick_slip,
                          const ExperimentConfig& config, const Dataset& data) {
  InferenceProblem problem;
  problem.system = system;
  problem.excitation = config.excitation.kind;
  problem.observed = ObservedQuantity::Displacement;
  problem.stick_slip = stick_slip;
  problem.reset_prior_variance =
      stick_slip ? std::optional<double>(config.switching.reset_prior_variance) : std::nullopt;
  problem.persistence = config.switching.persistence;
  problem.dt = data.dt;
  problem.inference.filter_components = stick_slip ? config.switching.filter_components : 1;
  problem.inference.smoother_components = stick_slip ? config.switching.smoother_components : 1;
  problem.inputs = data.inputs;
  problem.observations = data.observations;

  VariantResult out;
  out.name = name;
  out.system = system;
  out.hyper = optimize_hyperparameters(config.prior, problem, config.optimizer.budget,
                                       config.optimizer.seed);

  const RegimeModelSet models =
      problem.assemble(out.hyper.force_variance, out.hyper.lengthscale, out.hyper.noise_variance);
  const MarkovSwitchModel markov =
      markov_transition_matrix(models.count(), config.switching.persistence);
  const FilterResult filtered =
      adf_filter(models, markov, data.inputs, data.observations, problem.inference);
  const SmootherResult smoothed =
      ec_smoother(filtered, models, markov, data.inputs, problem.inference);

  out.log_likelihood = filtered.log_likelihood;
  out.regime_probabilities = smoothed.regimes.probabilities;
  out.map_labels = smoothed.regimes.map_labels;
  for (const auto& regime : models.regimes) out.regime_kinds.push_back(regime.kind);

  const long n = data.samples();
  const int dim = models.state_dim;
  out.position_mean.resize(n);
  out.position_var.resize(n);
  out.velocity_mean.resize(n);
  out.velocity_var.resize(n);
  out.acceleration_mean.resize(n);
  out.acceleration_var.resize(n);
  out.force_mean.resize(n);
  out.force_var.resize(n);

  RowVec read_position = RowVec::Zero(dim);
  read_position(0) = 1.0;
  RowVec read_velocity = RowVec::Zero(dim);
  read_velocity(1) = 1.0;
  RowVec read_force = RowVec::Zero(dim);
  read_force(2) = 1.0;
  // z'' = (load - c z' - k z - f) / m with the regime-independent load term
  // entering through the offset.
  RowVec read_accel = RowVec::Zero(dim);
  read_accel(0) = -system.stiffness / system.mass;
  read_accel(1) = -system.damping / system.mass;
  read_accel(2) = -1.0 / system.mass;

  for (long t = 0; t < n; ++t) {
    const GaussianMixtureBelief& belief = smoothed.beliefs[static_cast<size_t>(t)];
    double mean = 0.0, var = 0.0;
    belief.functional_moments(read_position, 0.0, mean, var);
    out.position_mean(t) = mean;
    out.position_var(t) = var;
    belief.functional_moments(read_velocity, 0.0, mean, var);
    out.velocity_mean(t) = mean;
    out.velocity_var(t) = var;
    belief.functional_moments(read_force, 0.0, mean, var);
    out.force_mean(t) = mean;
    out.force_var(t) = var;

    double load = data.inputs(t, 0);
    if (config.excitation.kind == ExcitationKind::BaseMotion) {
      load = system.stiffness * data.inputs(t, 0) + system.damping * data.inputs(t, 1);
    }
    belief.functional_moments(read_accel, load / system.mass, mean, var);
    out.acceleration_mean(t) = mean;
    out.acceleration_var(t) = var;
  }

  if (data.truth) out.metrics = score_variant(out, *data.truth);
  return out;
}

const VariantResult& ExperimentReport::final_variant() const {
  if (variants.empty()) throw std::logic_error("report has no variants");
  return variants.back();
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.data = build_dataset(config);
  const Dataset& data = report.data;

  const SystemParams inference_system = config.guesses ? *config.guesses : config.system;
  if (config.switching.compare_standard || !config.switching.enabled) {
    report.variants.push_back(run_variant("standard", inference_system, false, config, data));
  }
  if (config.switching.enabled) {
    report.variants.push_back(run_variant("switching", inference_system, true, config, data));
  }

  // Parameter correction from the last variant's latent force, then either a
  // rerun with the corrected model or the algebraic latent-force transform.
  if (config.guesses) {
    const VariantResult& base = report.variants.back();
    CorrectionReport corr;
    const Eigen::VectorXd input_velocity =
        config.excitation.kind == ExcitationKind::BaseMotion
            ? Eigen::VectorXd(data.inputs.col(1))
            : Eigen::VectorXd();
    corr.fit = fit_linear_residual(base.force_mean, base.position_mean, base.velocity_mean,
                                   data.inputs.col(0), config.excitation.kind, input_velocity);
    corr.correction = correct_parameters(corr.fit, *config.guesses);
    report.correction = corr;

    if (config.reinfer_after_correction) {
      report.variants.push_back(run_variant(base.name + "_corrected",
                                            corr.correction.corrected,
                                            config.switching.enabled, config, data));
    } else {
      VariantResult transformed = base;
      transformed.name = base.name + "_transformed";
      transformed.system = corr.correction.corrected;
      const RecoveredFriction rec =
          recover_friction(base.force_mean, base.position_mean, base.velocity_mean,
                           data.inputs.col(0), corr.fit);
      transformed.force_mean = rec.force;
      transformed.force_var = base.force_var * rec.variance_scale;
      if (data.truth) transformed.metrics = score_variant(transformed, *data.truth);
      report.variants.push_back(std::move(transformed));
    }
  }

  const VariantResult& final = report.final_variant();

  // Regime-dependent stages need the switching layout.
  if (config.switching.enabled && final.regime_kinds.size() > 1) {
    std::vector<RegimeKind> kinds(final.map_labels.size());
    for (size_t t = 0; t < final.map_labels.size(); ++t) {
      kinds[t] = final.regime_kinds[static_cast<size_t>(final.map_labels[t])];
    }
    try {
      // Production MAP sequences jitter at stop boundaries: require a held
      // stick of >= 2 samples and fold interruptions of <= 3 samples into one
      // episode so each physical stop is sampled once, at its held phase.
      report.static_friction = estimate_static_friction(final.force_mean, kinds, 2, 3);
    } catch (const NoStopsError&) {
      report.static_friction.reset();
    }

    const ForceVelocityEstimates slip =
        collect_slip_estimates(final.velocity_mean, final.velocity_var, final.force_mean,
                               final.force_var, final.regime_probabilities.col(0));
    if (slip.velocity_mean.size() >= 20) {
      LawFitReport law;
      law.slip_samples = slip.velocity_mean.size();
      law.unconstrained = fit_friction_law(slip, config.friction.v_star, config.friction.epsilon,
                                           std::nullopt, 6000, config.optimizer.seed);
      if (report.static_friction) {
        law.constrained = fit_friction_law(slip, config.friction.v_star, config.friction.epsilon,
                                           report.static_friction, 6000, config.optimizer.seed);
      }
      report.law = law;
    }
  }

  // Forward prediction with the fitted law and the final parameter estimate.
  if (report.law) {
    const SignalFunction input =
        config.excitation.synthetic
            ? make_synthetic_signal(config)
            : sampled_signal(data.time, data.inputs.col(0),
                             config.excitation.kind == ExcitationKind::BaseMotion
                                 ? Eigen::VectorXd(data.inputs.col(1))
                                 : Eigen::VectorXd());
    const double final_time = data.time(data.samples() - 1);
    const Trajectory predicted = forward_predict(final.system, report.law->unconstrained, input,
                                                 final_time, config.excitation.kind);
    const Trajectory sampled = resample_uniform(predicted, 1.0 / data.dt);
    const long overlap = std::min(sampled.size(), data.samples());
    const Eigen::VectorXd reference =
        data.truth ? data.truth->position.head(overlap) : data.observations.head(overlap);
    report.prediction_nmse = nmse(reference, sampled.position.head(overlap));

    std::filesystem::create_directories(config.output_dir);
    CsvTable prediction;
    prediction.add_column("time [s]", data.time.head(overlap));
    prediction.add_column("predicted position [m]", sampled.position.head(overlap));
    prediction.add_column(data.truth ? "true position [m]" : "observed position [m]", reference);
    write_csv(config.output_dir + "/prediction.csv", prediction);
    report.files.push_back("prediction.csv");
  }

  // Report bundle.
  std::filesystem::create_directories(config.output_dir);
  write_dataset_csv(config.output_dir, config, data, report.files);
  for (const auto& variant : report.variants) {
    write_variant_csvs(config.output_dir, data, variant, report.files);
  }
  if (report.law) {
    const ForceVelocityEstimates slip =
        collect_slip_estimates(final.velocity_mean, final.velocity_var, final.force_mean,
                               final.force_var, final.regime_probabilities.col(0));
    CsvTable fv;
    Eigen::VectorXd stamp(slip.velocity_mean.size());
    for (long i = 0; i < stamp.size(); ++i) {
      stamp(i) = data.time(slip.steps[static_cast<size_t>(i)]);
    }
    fv.add_column("time [s]", stamp);
    fv.add_column("velocity mean [m/s]", slip.velocity_mean);
    fv.add_column("velocity sd [m/s]", to_sd(slip.velocity_variance));
    fv.add_column("force mean [N]", slip.force_mean);
    fv.add_column("force sd [N]", to_sd(slip.force_variance));
    write_csv(config.output_dir + "/force_velocity.csv", fv);
    report.files.push_back("force_velocity.csv");
  }

  std::sort(report.files.begin(), report.files.end());
  report.report_text = build_report_text(config, report);
  std::ofstream out(config.output_dir + "/report.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + config.output_dir + "/report.json");
  out.write(report.report_text.data(), static_cast<std::streamsize>(report.report_text.size()));
  return report;
}

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "snr") return SweepAxis::Snr;
  if (text == "t_f") return SweepAxis::FinalTime;
  if (text == "f_s") return SweepAxis::SamplingFrequency;
  throw ConfigError("sweep axis: expected 'snr', 't_f', or 'f_s', got '" + text + "'");
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Snr:
      return "snr";
    case SweepAxis::FinalTime:
      return "t_f";
    default:
      return "f_s";
  }
}

SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<double>& values, int workers) {
  if (!config.excitation.synthetic) {
    throw ConfigError("sweep: requires a synthetic excitation source");
  }
  if (values.empty()) throw ConfigError("sweep: values must not be empty");

  const std::string axis_name = sweep_axis_name(axis);
  auto point_config = [&](size_t index) {
    ExperimentConfig point = config;
    const double value = values[index];
    switch (axis) {
      case SweepAxis::Snr:
        point.signal.snr_db = value;
        break;
      case SweepAxis::FinalTime:
        point.signal.final_time = value;
        break;
      case SweepAxis::SamplingFrequency:
        point.signal.sampling_frequency = value;
        break;
    }
    try {
      point.signal.validate();
    } catch (const std::exception& e) {
      throw ConfigError("sweep value [" + std::to_string(index) + "]: " + e.what());
    }
    // Shared base seed, per-value offset: every point sees the same input
    // realization but an independent noise draw.
    point.seeds.noise = config.seeds.noise + static_cast<unsigned>(index);
    point.output_dir =
        config.output_dir + "/sweep_" + axis_name + "/point_" + format_index(index);
    return point;
  };

  const size_t n = values.size();
  std::vector<SweepRow> rows(n);
  std::vector<std::exception_ptr> failures(n);

  std::atomic<size_t> cursor{0};
  auto worker_body = [&] {
    for (size_t index = cursor.fetch_add(1); index < n; index = cursor.fetch_add(1)) {
      try {
        const ExperimentConfig point = point_config(index);
        const ExperimentReport result = run_experiment(point);
        SweepRow row;
        row.value = values[index];
        const VariantResult& final = result.final_variant();
        if (!final.metrics) {
          throw std::runtime_error("sweep point has no ground-truth metrics");
        }
        row.nmse_force = final.metrics->nmse_force;
        row.regime_error = final.metrics->regime_error;
        row.nmse_prediction = result.prediction_nmse;
        if (result.correction) {
          const SystemParams& corrected = result.correction->correction.corrected;
          row.mass_error = std::abs(corrected.mass - config.system.mass) / config.system.mass;
          row.damping_error =
              std::abs(corrected.damping - config.system.damping) / config.system.damping;
          row.stiffness_error =
              std::abs(corrected.stiffness - config.system.stiffness) / config.system.stiffness;
        }
        rows[index] = row;
      } catch (...) {
        failures[index] = std::current_exception();
      }
    }
  };

  const int pool = std::clamp<int>(workers, 1, static_cast<int>(n));
  if (pool <= 1) {
    worker_body();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(pool));
    for (int w = 0; w < pool; ++w) threads.emplace_back(worker_body);
    for (auto& thread : threads) thread.join();
  }
  for (size_t i = 0; i < n; ++i) {
    if (failures[i]) std::rethrow_exception(failures[i]);
  }

  SweepResult result;
  result.axis = axis;
  result.rows = rows;

  CsvTable table;
  const long rows_n = static_cast<long>(n);
  Eigen::VectorXd col(rows_n);
  auto fill = [&](auto getter) {
    for (long i = 0; i < rows_n; ++i) col(i) = getter(rows[static_cast<size_t>(i)]);
    return col;
  };
  const char* axis_header = axis == SweepAxis::Snr          ? "snr [dB]"
                            : axis == SweepAxis::FinalTime ? "final time [s]"
                                                            : "sampling frequency [Hz]";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  table.add_column(axis_header, fill([](const SweepRow& r) { return r.value; }));
  table.add_column("nmse force [%]", fill([](const SweepRow& r) { return r.nmse_force; }));
  table.add_column("nmse prediction [%]", fill([nan](const SweepRow& r) {
                     return r.nmse_prediction ? *r.nmse_prediction : nan;
                   }));
  table.add_column("regime error [-]", fill([nan](const SweepRow& r) {
                     return r.regime_error ? *r.regime_error : nan;
                   }));
  table.add_column("mass error [-]", fill([](const SweepRow& r) { return r.mass_error; }));
  table.add_column("damping error [-]", fill([](const SweepRow& r) { return r.damping_error; }));
  table.add_column("stiffness error [-]",
                   fill([](const SweepRow& r) { return r.stiffness_error; }));
  result.table_text = to_csv_string(table);

  std::filesystem::create_directories(config.output_dir);
  const std::string table_path = config.output_dir + "/sweep_" + axis_name + ".csv";
  std::ofstream out(table_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + table_path);
  out.write(result.table_text.data(), static_cast<std::streamsize>(result.table_text.size()));
  return result;
}

}  // namespace gplfm
