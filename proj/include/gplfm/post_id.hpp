#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

#include "gplfm/friction_sim.hpp"
#include "gplfm/hyper_opt.hpp"
#include "gplfm/signals.hpp"
#include "gplfm/ssm_builder.hpp"

namespace gplfm {

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

// Population variance (1/T) * sum (g - mean)^2 of a series.
double population_variance(const Eigen::VectorXd& series);

// Normalised mean squared error in percent: 100/(T var(g)) * sum (g - m)^2.
// 0 for a perfect fit; 100 when the estimate is the truth's mean everywhere.
// Throws std::invalid_argument on length mismatch or a constant truth series.
double nmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate_means);

// Normalised mean variance in percent: 100/(T var_truth) * sum variances.
// 0 for exact (zero-variance) predictions; 100 when every predictive variance
// equals the truth variance.
double nmv(double truth_variance, const Eigen::VectorXd& estimate_variances);
double nmv(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate_variances);

// ---------------------------------------------------------------------------
// Latent-force linear residual and physical parameter correction
// ---------------------------------------------------------------------------

// Least-squares coefficients of the linear trend that incorrect physical
// parameters imprint on the latent force:
//   direct force:  F_L ~ a0 + a1 z + a2 z' + a3 u
//   base motion:   F_L ~ a0 + a1 (z - u) + a2 (z' - u')   (no a3)
struct LinearResidualFit {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  std::optional<double> a3;  // absent for base-motion fits
  double residual_rms = 0.0;
};

// Fits the latent-force series on the states and input. Exploits the odd
// symmetry of the friction force about the origin by negating response and
// all regressors (constant included) on samples with negative velocity, so
// both branches superpose. `input_velocity` is required for base motion.
// Throws std::invalid_argument when samples < 10x coefficients and
// std::runtime_error on a rank-deficient design.
LinearResidualFit fit_linear_residual(const Eigen::VectorXd& latent_force,
                                      const Eigen::VectorXd& position,
                                      const Eigen::VectorXd& velocity,
                                      const Eigen::VectorXd& input,
                                      ExcitationKind excitation,
                                      const Eigen::VectorXd& input_velocity = {});

// Correction is singular (a3 = 1) or produces unphysical parameters.
struct CorrectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter errors recovered from the linear-residual coefficients and the
// corrected parameter set (guess + delta).
struct ParameterCorrection {
  double delta_mass = 0.0;       // kg
  double delta_damping = 0.0;    // N s/m
  double delta_stiffness = 0.0;  // N/m
  SystemParams corrected;
};

// Direct force: delta_k = (a1 + a3 k)/(1 - a3), delta_c = (a2 + a3 c)/(1 - a3),
// delta_m = a3 m/(1 - a3), all relative to the guesses. Base motion (no a3):
// the mass is not identifiable, delta_k = a1 and delta_c = a2.
// Throws CorrectionError when |1 - a3| is vanishing or the corrected mass or
// stiffness is non-positive.
ParameterCorrection correct_parameters(const LinearResidualFit& fit,
                                       const SystemParams& guesses);

// Friction force recovered from a latent force inferred under incorrect
// parameters: F_f = (F_L - a1 z - a2 z' - a3 u)/(1 - a3). Predictive variances
// of the latent force scale by variance_scale = 1/(1 - a3)^2 (the states and
// input enter as known regressors). Requires a direct-force fit.
struct RecoveredFriction {
  Eigen::VectorXd force;
  double variance_scale = 1.0;
};

RecoveredFriction recover_friction(const Eigen::VectorXd& latent_force,
                                   const Eigen::VectorXd& position,
                                   const Eigen::VectorXd& velocity,
                                   const Eigen::VectorXd& input,
                                   const LinearResidualFit& fit);

// ---------------------------------------------------------------------------
// Slip-phase force-velocity estimates and friction-law characterization
// ---------------------------------------------------------------------------

// Per-sample posterior moments of sliding velocity and friction force on the
// slip-labeled subset of the record.
struct ForceVelocityEstimates {
  Eigen::VectorXd velocity_mean;
  Eigen::VectorXd velocity_variance;
  Eigen::VectorXd force_mean;
  Eigen::VectorXd force_variance;
  std::vector<long> steps;  // indices into the original series
};

// Selects the samples whose sliding-regime posterior probability exceeds the
// threshold (stick-phase force values carry no force-velocity information).
ForceVelocityEstimates collect_slip_estimates(const Eigen::VectorXd& velocity_mean,
                                              const Eigen::VectorXd& velocity_variance,
                                              const Eigen::VectorXd& force_mean,
                                              const Eigen::VectorXd& force_variance,
                                              const Eigen::VectorXd& sliding_probability,
                                              double threshold = 0.5);

// Raised when a record contains no stick-to-slip transition: continuous
// sliding gives no information about the breakaway force.
struct NoStopsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StaticFrictionEstimate {
  double mean = 0.0;                // N
  double standard_deviation = 0.0;  // N; 0 by convention for a single stop
  long count = 0;                   // number of stick-to-slip transitions used
};

// Breakaway-force estimate from stick-to-slip transitions in a MAP regime
// sequence. Sticking runs separated by at most merge_gap_samples non-sticking
// steps belong to one stick episode: estimated sequences jitter at regime
// boundaries (short resetting or sliding interruptions inside a genuine stop),
// and counting each fragment as its own stop would both overcount stops and
// sample the latent force mid-stop, where it is far from the breakaway value.
// Each episode that hands over to sliding (after any trailing resetting steps)
// contributes |E(F_f)| at the last step of its last sticking run of at least
// min_run_samples steps; episodes with no such run are too ambiguous to sample.
// Returns the sample mean and (count > 1) the sample standard deviation.
// Throws NoStopsError when no episode qualifies.
StaticFrictionEstimate estimate_static_friction(const Eigen::VectorXd& force_mean,
                                                const std::vector<RegimeKind>& regime_sequence,
                                                long min_run_samples = 1,
                                                long merge_gap_samples = 1);

// Least-squares fit of the steady-state friction law magnitude
//   F(s) = F* + a log((s + eps)/V*) + b log(c + V*/(s + eps))
// to sign-folded force-velocity estimates (force * sign(v) against |v|).
// V* and eps are held fixed. When a static estimate is supplied, b is bound
// by F(0) = F_s via b = a + (F_s - F*)/(log V* - log eps) and only (a, c, F*)
// are free. Derivative-free bounded minimization; deterministic per seed.
// Throws std::invalid_argument with fewer than 20 samples and
// OptimizationError when no finite objective value is found.
FrictionParams fit_friction_law(const ForceVelocityEstimates& estimates, double v_star,
                                double epsilon,
                                const std::optional<StaticFrictionEstimate>& static_force = {},
                                long budget = 6000, unsigned seed = 0);

// ---------------------------------------------------------------------------
// Base-input smoothing (measured base displacement -> input and derivative)
// ---------------------------------------------------------------------------

struct BaseInputSmoother {
  double acceleration_variance = 1.0;  // (m/s^2)^2, process noise
  double measurement_variance = 1e-6;  // m^2, sensor noise
  void validate() const;
};

struct SmoothedInput {
  Eigen::VectorXd displacement;
  Eigen::VectorXd velocity;
  double log_likelihood = 0.0;
};

// Constant-acceleration kinematic model (state [u, u'], unknown acceleration
// as white process noise) filtered and RTS-smoothed over the raw record.
SmoothedInput smooth_base_input(const Eigen::VectorXd& raw, double sampling_frequency,
                                const BaseInputSmoother& hyper);

// Maximum-marginal-likelihood selection of the smoother hyperparameters with
// the same bounded derivative-free engine used for kernel hyperparameters.
BaseInputSmoother optimize_base_smoother(const Eigen::VectorXd& raw, double sampling_frequency,
                                         long budget = 600, unsigned seed = 0);

// ---------------------------------------------------------------------------
// Forward prediction with identified parameters
// ---------------------------------------------------------------------------

// Response prediction for an assigned input: the stick-slip simulator run
// with the identified system parameters and fitted friction law.
Trajectory forward_predict(const SystemParams& system, const FrictionParams& law,
                           const SignalFunction& input, double final_time,
                           ExcitationKind excitation = ExcitationKind::DirectForce,
                           const OdeOptions& options = {});

}  // namespace gplfm
