#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gplfm/ode45.hpp"
#include "gplfm/signals.hpp"
#include "gplfm/ssm_builder.hpp"

namespace gplfm {

// Steady-state rate-dependent friction law
//   F(v) = [F_star + a ln((|v|+eps)/V_star) + b ln(c + V_star/(|v|+eps))] sgn(v).
// The v = 0 force balance is the integrator's job, not the law's.
struct FrictionParams {
  double f_star = 1.0;    // N
  double a = 0.07;        // N
  double b = 0.09;        // N
  double c = 0.022;       // dimensionless
  double v_star = 0.003;  // m/s
  double epsilon = 1e-6;  // m/s

  void validate() const;
};

double dieterich_ruina(double velocity, const FrictionParams& params);

// Breakaway threshold: the v -> 0+ limit of the sliding law. A stick phase
// holds as long as the balanced force stays at or below this magnitude.
double static_friction_limit(const FrictionParams& params);

enum class MotionPhase { Slip, Stick };

// Simulated (or resampled) response channels. input_velocity is filled for
// base-motion excitation only. During stick-labeled samples the velocity is
// exactly zero and the friction force balances the net load.
struct Trajectory {
  Eigen::VectorXd time;          // s, strictly increasing
  Eigen::VectorXd position;      // m
  Eigen::VectorXd velocity;      // m/s
  Eigen::VectorXd acceleration;  // m/s^2
  Eigen::VectorXd friction;      // N
  Eigen::VectorXd input;         // N (direct force) or m (base displacement)
  Eigen::VectorXd input_velocity;
  std::vector<MotionPhase> labels;
  ExcitationKind excitation = ExcitationKind::DirectForce;

  long size() const { return time.size(); }
};

// Observation-window settings shared by the experiment configs: final time,
// sampling rate, and the measurement signal-to-noise ratio (infinity means
// noise-free).
struct SignalSpec {
  double final_time = 5.0;          // s
  double sampling_frequency = 500;  // Hz
  double snr_db = 80.0;             // dB, may be +infinity

  void validate() const;
};

// Integrates the oscillator from rest under the given input, switching
// between sliding integration (embedded RK 4(5), velocity zero-crossings
// located on the dense output) and algebraic stick phases (position held,
// friction balancing the load, exit when the load reaches the breakaway
// threshold). Samples are emitted at every accepted solver step and on a
// max_step grid during stick, so the output is always denser than max_step.
Trajectory simulate_stick_slip(const SystemParams& system, const FrictionParams& friction,
                               const SignalFunction& input, double final_time,
                               ExcitationKind excitation, const OdeOptions& options = {});

// Linear interpolation of every channel onto t = 0, 1/f_s, 2/f_s, ...;
// regime labels are taken from the sample at or immediately left of each
// stamp.
Trajectory resample_uniform(const Trajectory& trajectory, double sampling_frequency);

struct NoisySignal {
  Eigen::VectorXd values;
  double noise_sd = 0.0;  // realized standard deviation of the added noise
};

// Additive white Gaussian noise with power signal_mean_square / 10^(snr/10);
// an infinite SNR returns the input unchanged. Deterministic per seed.
NoisySignal add_noise_snr(const Eigen::VectorXd& signal, double snr_db, unsigned seed);

}  // namespace gplfm
