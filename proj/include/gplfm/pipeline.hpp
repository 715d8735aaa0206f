#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gplfm/config.hpp"
#include "gplfm/post_id.hpp"
#include "gplfm/switching.hpp"

namespace gplfm {

// Uniformly sampled experiment data: simulated from the config's synthetic
// spec or loaded from CSV. `truth` carries the noise-free ground-truth
// channels and regime labels (synthetic runs only).
struct Dataset {
  Eigen::VectorXd time;
  Eigen::MatrixXd inputs;        // T x input_dim(excitation)
  Eigen::VectorXd observations;  // measured displacement
  double dt = 0.0;
  double noise_sd = 0.0;  // realized measurement-noise sd (0 when unknown)
  std::optional<Trajectory> truth;

  long samples() const { return time.size(); }
};

Dataset build_dataset(const ExperimentConfig& config);

// Accuracy scores against ground truth, all in percent. regime_error is the
// fraction of steps whose most-probable regime disagrees with the true
// motion phase (multi-regime variants only).
struct VariantMetrics {
  double nmse_position = 0.0;
  double nmse_velocity = 0.0;
  double nmse_acceleration = 0.0;
  double nmse_force = 0.0;
  double nmv_force = 0.0;
  std::optional<double> regime_error;
};

// One inference pass: hyperparameter MAP, filtering + smoothing, and the
// smoothed per-step moments of the physical channels.
struct VariantResult {
  std::string name;
  SystemParams system{};
  HyperEstimate hyper;
  double log_likelihood = 0.0;
  Eigen::VectorXd position_mean, position_var;
  Eigen::VectorXd velocity_mean, velocity_var;
  Eigen::VectorXd acceleration_mean, acceleration_var;
  Eigen::VectorXd force_mean, force_var;
  Eigen::MatrixXd regime_probabilities;  // T x S
  std::vector<int> map_labels;
  std::vector<RegimeKind> regime_kinds;  // per regime index
  std::optional<VariantMetrics> metrics;
};

// Runs one variant (single-regime standard when stick_slip is false, full
// switching layout otherwise) on the dataset with the given system
// parameters.
VariantResult run_variant(const std::string& name, const SystemParams& system, bool stick_slip,
                          const ExperimentConfig& config, const Dataset& data);

struct CorrectionReport {
  LinearResidualFit fit;
  ParameterCorrection correction;
};

struct LawFitReport {
  long slip_samples = 0;
  FrictionParams unconstrained;
  std::optional<FrictionParams> constrained;
};

struct ExperimentReport {
  Dataset data;
  std::vector<VariantResult> variants;
  std::optional<CorrectionReport> correction;
  std::optional<StaticFrictionEstimate> static_friction;
  std::optional<LawFitReport> law;
  std::optional<double> prediction_nmse;  // percent
  std::string report_text;                // exact bytes of report.json
  std::vector<std::string> files;         // names written under output_dir

  // The variant driving post-identification (corrected rerun when present).
  const VariantResult& final_variant() const;
};

// End-to-end experiment: build or load the dataset, run the configured
// variants, correct parameters when guesses are provided, estimate the
// static friction and the friction law, forward-predict, and write the
// report bundle (report.json + CSVs) under config.output_dir. Deterministic
// given the config: identical configs produce byte-identical reports.
ExperimentReport run_experiment(const ExperimentConfig& config);

enum class SweepAxis { Snr, FinalTime, SamplingFrequency };

// Accepts "snr", "t_f", "f_s".
SweepAxis parse_sweep_axis(const std::string& text);
std::string sweep_axis_name(SweepAxis axis);

// The four performance indices per sweep value. Parameter errors are
// relative to the true parameters; all-zero when the config has no guesses.
struct SweepRow {
  double value = 0.0;
  double nmse_force = 0.0;
  std::optional<double> nmse_prediction;
  std::optional<double> regime_error;
  double mass_error = 0.0;
  double damping_error = 0.0;
  double stiffness_error = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Snr;
  std::vector<SweepRow> rows;
  std::string table_text;  // exact bytes of the sweep table CSV
};

// One experiment per axis value: the axis field is overridden, the noise
// seed is offset by the value index, and outputs land in
// output_dir/sweep_<axis>/point_<index>. Points run in a bounded worker
// pool; each point is an isolated pure pipeline, so the result does not
// depend on the worker count. Requires a synthetic source.
SweepResult run_sweep(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<double>& values, int workers = 1);

}  // namespace gplfm
