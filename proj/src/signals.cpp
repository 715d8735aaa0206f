#include "gplfm/signals.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

namespace gplfm {

void JonswapParams::validate() const {
  if (!(significant_wave_height > 0.0)) {
    throw std::invalid_argument("JonswapParams: significant_wave_height must be positive");
  }
  if (!(peak_period > 0.0)) {
    throw std::invalid_argument("JonswapParams: peak_period must be positive");
  }
  if (!(sigma_below > 0.0) || !(sigma_above > 0.0)) {
    throw std::invalid_argument("JonswapParams: spectral widths must be positive");
  }
  if (!(grid_start > 0.0) || !(grid_step > 0.0) || !(grid_stop >= grid_start)) {
    throw std::invalid_argument("JonswapParams: frequency grid must be increasing and positive");
  }
  if (!(amplitude_scale > 0.0)) {
    throw std::invalid_argument("JonswapParams: amplitude_scale must be positive");
  }
}

double jonswap_spectrum(double omega, const JonswapParams& params) {
  params.validate();
  if (!(omega > 0.0)) throw std::invalid_argument("jonswap_spectrum: omega must be positive");
  const double omega_p = params.peak_frequency();
  const double sigma = omega < omega_p ? params.sigma_below : params.sigma_above;
  const double ratio = params.significant_wave_height / (params.peak_period * params.peak_period);
  const double pm = 320.0 * ratio * ratio * std::pow(omega, -5.0) *
                    std::exp(-1.25 * std::pow(omega_p / omega, 4.0));
  const double detune = omega / omega_p - 1.0;
  const double enhancement = std::exp(-detune * detune / (2.0 * sigma * sigma));
  return pm * std::pow(3.3, enhancement);
}

double MultisineSignal::eval(double t) const {
  // sum A_k cos(w_k t + p_k) = Re sum A_k e^{i p_k} e^{i w_k t}; with the
  // uniform grid w_k = w_1 + (k-1) dw the time factor advances by a constant
  // rotation per harmonic.
  const long k_count = omega.size();
  if (k_count == 0) return 0.0;
  const double dw = k_count > 1 ? omega(1) - omega(0) : 0.0;
  const std::complex<double> step = std::polar(1.0, dw * t);
  std::complex<double> rotor = std::polar(1.0, omega(0) * t);
  double total = 0.0;
  for (long k = 0; k < k_count; ++k) {
    total += amplitude(k) * (rotor * std::polar(1.0, phase(k))).real();
    rotor *= step;
  }
  return total;
}

double MultisineSignal::derivative(double t) const {
  const long k_count = omega.size();
  if (k_count == 0) return 0.0;
  const double dw = k_count > 1 ? omega(1) - omega(0) : 0.0;
  const std::complex<double> step = std::polar(1.0, dw * t);
  std::complex<double> rotor = std::polar(1.0, omega(0) * t);
  double total = 0.0;
  for (long k = 0; k < k_count; ++k) {
    total -= amplitude(k) * omega(k) * (rotor * std::polar(1.0, phase(k))).imag();
    rotor *= step;
  }
  return total;
}

Eigen::VectorXd MultisineSignal::sample(const Eigen::VectorXd& times) const {
  Eigen::VectorXd out(times.size());
  for (long i = 0; i < times.size(); ++i) out(i) = eval(times(i));
  return out;
}

MultisineSignal jonswap_multisine(const JonswapParams& params) {
  params.validate();
  const long k_count =
      static_cast<long>(std::floor((params.grid_stop - params.grid_start) / params.grid_step +
                                   0.5)) +
      1;
  MultisineSignal signal;
  signal.omega.resize(k_count);
  signal.amplitude.resize(k_count);
  signal.phase.resize(k_count);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
  for (long k = 0; k < k_count; ++k) {
    const double w = params.grid_start + static_cast<double>(k) * params.grid_step;
    signal.omega(k) = w;
    signal.amplitude(k) =
        params.amplitude_scale * std::sqrt(2.0 * jonswap_spectrum(w, params) * params.grid_step);
    signal.phase(k) = unif(rng);
  }
  return signal;
}

MultisineSignal harmonic_signal(double amplitude, double frequency_hz, double phase) {
  if (!(frequency_hz > 0.0)) {
    throw std::invalid_argument("harmonic_signal: frequency must be positive");
  }
  MultisineSignal signal;
  signal.omega = Eigen::VectorXd::Constant(1, 2.0 * M_PI * frequency_hz);
  signal.amplitude = Eigen::VectorXd::Constant(1, amplitude);
  // sin(w t + p) = cos(w t + p - pi/2).
  signal.phase = Eigen::VectorXd::Constant(1, phase - M_PI / 2.0);
  return signal;
}

SignalFunction as_signal(const MultisineSignal& signal) {
  return SignalFunction{[signal](double t) { return signal.eval(t); },
                        [signal](double t) { return signal.derivative(t); }};
}

}  // namespace gplfm
