#pragma once

#include <Eigen/Dense>
#include <functional>

namespace gplfm {

// Random-phase multisine shaped by a JONSWAP spectrum. The frequency symbols
// are angular (rad/s): the spectral peak sits at 2*pi/peak_period, and the
// synthesis grid spans [grid_start, grid_stop] in steps of grid_step.
// amplitude_scale converts the wave-amplitude-like harmonics into the force
// (or base-displacement) units of the experiment; it multiplies every
// harmonic, so it only rescales the signal.
struct JonswapParams {
  double significant_wave_height = 10.0;  // m
  double peak_period = 0.5;               // s
  double sigma_below = 0.07;              // spectral width below the peak
  double sigma_above = 0.09;              // and at/above
  double grid_start = 0.02;               // rad/s
  double grid_step = 0.02;                // rad/s
  double grid_stop = 100.0;               // rad/s
  double amplitude_scale = 1.0;
  unsigned seed = 0;

  double peak_frequency() const { return 2.0 * M_PI / peak_period; }
  void validate() const;
};

// Spectral density S(omega): the Pierson-Moskowitz shape 320 (H_s/T_p^2)^2
// omega^-5 exp(-1.25 (omega_p/omega)^4) times the peak-enhancement factor
// 3.3^A with A = exp(-(omega/omega_p - 1)^2 / (2 sigma_p^2)), sigma_p
// switching at the peak.
double jonswap_spectrum(double omega, const JonswapParams& params);

// Finite cosine sum u(t) = sum_k A_k cos(omega_k t + phi_k) with an analytic
// derivative. Evaluation uses one complex rotation per harmonic, so a point
// costs O(K) with no transcendental calls inside the loop; this requires the
// frequency grid to be uniformly spaced (single tones trivially qualify).
struct MultisineSignal {
  Eigen::VectorXd omega;      // rad/s, strictly increasing
  Eigen::VectorXd amplitude;  // same units as the signal
  Eigen::VectorXd phase;      // rad

  double eval(double t) const;
  double derivative(double t) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& times) const;
};

// Draws the phases phi_k ~ uniform[0, 2*pi) from the seed and sets the
// harmonic amplitudes to amplitude_scale * sqrt(2 S(omega_k) domega).
// Deterministic per seed.
MultisineSignal jonswap_multisine(const JonswapParams& params);

// Single-tone signal u(t) = amplitude * sin(2*pi*frequency_hz*t + phase).
MultisineSignal harmonic_signal(double amplitude, double frequency_hz, double phase = 0.0);

// Time-domain input handed to the simulator: value is u(t); velocity is du/dt
// and is only consumed by base-motion excitation.
struct SignalFunction {
  std::function<double(double)> value;
  std::function<double(double)> velocity;
};

SignalFunction as_signal(const MultisineSignal& signal);

}  // namespace gplfm
