#include "gplfm/friction_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gplfm {

namespace {

// Magnitude of the sliding law at speed w >= 0; the caller applies the sign.
double law_magnitude(double speed, const FrictionParams& p) {
  const double reg = speed + p.epsilon;
  const double weakening = p.c + p.v_star / reg;
  if (!(reg > 0.0) || !(weakening > 0.0)) {
    throw std::domain_error("dieterich_ruina: non-positive logarithm argument");
  }
  return p.f_star + p.a * std::log(reg / p.v_star) + p.b * std::log(weakening);
}

double effective_load(const SignalFunction& input, const SystemParams& system,
                      ExcitationKind excitation, double t) {
  if (excitation == ExcitationKind::DirectForce) return input.value(t);
  return system.stiffness * input.value(t) + system.damping * input.velocity(t);
}

// Row-by-row trajectory builder; keeps channel vectors in lockstep.
struct SampleSink {
  std::vector<double> time, position, velocity, acceleration, friction, input, input_velocity;
  std::vector<MotionPhase> labels;
  const SignalFunction* signal;
  ExcitationKind excitation;

  void push(double t, double z, double v, double a, double f, MotionPhase phase) {
    time.push_back(t);
    position.push_back(z);
    velocity.push_back(v);
    acceleration.push_back(a);
    friction.push_back(f);
    input.push_back(signal->value(t));
    if (excitation == ExcitationKind::BaseMotion) input_velocity.push_back(signal->velocity(t));
    labels.push_back(phase);
  }

  Trajectory finish() const {
    Trajectory out;
    const long n = static_cast<long>(time.size());
    out.time = Eigen::Map<const Eigen::VectorXd>(time.data(), n);
    out.position = Eigen::Map<const Eigen::VectorXd>(position.data(), n);
    out.velocity = Eigen::Map<const Eigen::VectorXd>(velocity.data(), n);
    out.acceleration = Eigen::Map<const Eigen::VectorXd>(acceleration.data(), n);
    out.friction = Eigen::Map<const Eigen::VectorXd>(friction.data(), n);
    out.input = Eigen::Map<const Eigen::VectorXd>(input.data(), n);
    if (excitation == ExcitationKind::BaseMotion) {
      out.input_velocity =
          Eigen::Map<const Eigen::VectorXd>(input_velocity.data(), n);
    }
    out.labels = labels;
    out.excitation = excitation;
    return out;
  }
};

double interpolate(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double at, long hint) {
  if (at <= x(0)) return y(0);
  const long n = x.size();
  if (at >= x(n - 1)) return y(n - 1);
  long i = hint;
  while (x(i + 1) < at) ++i;
  // Exact node hits pass through bitwise (w = 1 would reintroduce rounding).
  if (x(i) == at) return y(i);
  if (x(i + 1) == at) return y(i + 1);
  const double w = (at - x(i)) / (x(i + 1) - x(i));
  return y(i) + w * (y(i + 1) - y(i));
}

}  // namespace

void FrictionParams::validate() const {
  if (!(v_star > 0.0)) throw std::invalid_argument("FrictionParams: v_star must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("FrictionParams: epsilon must be positive");
  if (!(c >= 0.0)) {
    throw std::invalid_argument("FrictionParams: c must be non-negative for a valid logarithm");
  }
}

double dieterich_ruina(double velocity, const FrictionParams& params) {
  params.validate();
  if (velocity == 0.0) return 0.0;
  const double sign = velocity > 0.0 ? 1.0 : -1.0;
  return law_magnitude(std::abs(velocity), params) * sign;
}

double static_friction_limit(const FrictionParams& params) {
  params.validate();
  return law_magnitude(0.0, params);
}

void SignalSpec::validate() const {
  if (!(final_time > 0.0)) throw std::invalid_argument("SignalSpec: final_time must be positive");
  if (!(sampling_frequency > 0.0)) {
    throw std::invalid_argument("SignalSpec: sampling_frequency must be positive");
  }
  if (std::isnan(snr_db)) throw std::invalid_argument("SignalSpec: snr_db must not be NaN");
}

Trajectory simulate_stick_slip(const SystemParams& system, const FrictionParams& friction,
                               const SignalFunction& input, double final_time,
                               ExcitationKind excitation, const OdeOptions& options) {
  system.validate();
  friction.validate();
  if (!(final_time > 0.0)) {
    throw std::invalid_argument("simulate_stick_slip: final_time must be positive");
  }
  if (!std::isfinite(options.max_step)) {
    throw std::invalid_argument("simulate_stick_slip: max_step must be finite");
  }

  const double f_static = static_friction_limit(friction);
  const auto load = [&](double t) { return effective_load(input, system, excitation, t); };

  SampleSink sink;
  sink.signal = &input;
  sink.excitation = excitation;

  double t = 0.0;
  double z = 0.0;
  bool sticking = std::abs(load(0.0)) <= f_static;
  double slip_sign = sticking ? 0.0 : (load(0.0) > 0.0 ? 1.0 : -1.0);

  // Sliding dynamics for the current slip direction. The sign is frozen for
  // the phase so the right-hand side stays smooth across the stopping event;
  // the segment past the located crossing is discarded anyway.
  double rhs_sign = slip_sign;
  const auto rhs = [&](double at, const Eigen::Vector2d& y, Eigen::Vector2d& dy) {
    const double f = law_magnitude(std::abs(y(1)), friction) * rhs_sign;
    dy(0) = y(1);
    dy(1) = (load(at) - system.stiffness * y(0) - system.damping * y(1) - f) / system.mass;
  };
  Dopri5 solver(rhs, options);

  const auto slip_acceleration = [&](double at, double pos, double sign) {
    return (load(at) - system.stiffness * pos - f_static * sign) / system.mass;
  };

  while (t < final_time) {
    if (sticking) {
      // Algebraic phase: position held, friction balances the load. Scan the
      // max_step grid for the first breakaway, then bisect to event_tol with
      // the invariant  |load| - f_static <= 0 on the left, > 0 on the right.
      const auto margin = [&](double at) {
        return std::abs(load(at) - system.stiffness * z) - f_static;
      };
      sink.push(t, z, 0.0, 0.0, load(t) - system.stiffness * z, MotionPhase::Stick);
      double left = t;
      bool breakaway = false;
      while (left < final_time) {
        const double right = std::min(left + options.max_step, final_time);
        if (margin(right) > 0.0) {
          breakaway = true;
          double lo = left, hi = right;
          while (hi - lo > options.event_tol) {
            const double mid = 0.5 * (lo + hi);
            (margin(mid) > 0.0 ? hi : lo) = mid;
          }
          sink.push(lo, z, 0.0, 0.0, load(lo) - system.stiffness * z, MotionPhase::Stick);
          t = hi;
          break;
        }
        left = right;
        if (left < final_time) {
          sink.push(left, z, 0.0, 0.0, load(left) - system.stiffness * z, MotionPhase::Stick);
        }
      }
      if (!breakaway) {
        sink.push(final_time, z, 0.0, 0.0, load(final_time) - system.stiffness * z,
                  MotionPhase::Stick);
        break;
      }
      sticking = false;
      slip_sign = load(t) - system.stiffness * z > 0.0 ? 1.0 : -1.0;
    }

    // Sliding phase from (t, z, v = 0) until the velocity next crosses zero.
    rhs_sign = slip_sign;
    sink.push(t, z, 0.0, slip_acceleration(t, z, slip_sign), f_static * slip_sign,
              MotionPhase::Slip);
    solver.start(t, Eigen::Vector2d(z, 0.0));
    bool crossed = false;
    double cross_time = final_time;
    while (solver.step(final_time)) {
      const DenseSegment& segment = solver.segment();
      // Probe the dense output at interior points as well as the step end so
      // a crossing that dips and recovers inside one step is still caught.
      double first_nonpositive = -1.0;
      for (double fraction : {0.25, 0.5, 0.75, 1.0}) {
        const double probe = segment.t0 + fraction * segment.h;
        const double v_probe = fraction == 1.0 ? solver.state()(1) : segment.eval(probe)(1);
        if (v_probe * slip_sign <= 0.0) {
          first_nonpositive = probe;
          break;
        }
      }
      if (first_nonpositive >= 0.0) {
        // Bisect the dense output: velocity (in slip direction) is >= 0 at
        // the segment start by construction of the phase.
        double lo = segment.t0, hi = first_nonpositive;
        while (hi - lo > options.event_tol) {
          const double mid = 0.5 * (lo + hi);
          (segment.eval(mid)(1) * slip_sign > 0.0 ? lo : hi) = mid;
        }
        cross_time = hi;
        z = segment.eval(cross_time)(0);
        crossed = true;
        break;
      }
      const Eigen::Vector2d& y = solver.state();
      const double f = law_magnitude(std::abs(y(1)), friction) * slip_sign;
      sink.push(solver.time(), y(0), y(1),
                (load(solver.time()) - system.stiffness * y(0) - system.damping * y(1) - f) /
                    system.mass,
                f, MotionPhase::Slip);
    }
    if (!crossed) {
      t = final_time;
      break;
    }

    t = cross_time;
    const double residual = load(t) - system.stiffness * z;
    if (std::abs(residual) <= f_static) {
      sticking = true;
    } else {
      slip_sign = residual > 0.0 ? 1.0 : -1.0;
    }
  }

  return sink.finish();
}

Trajectory resample_uniform(const Trajectory& trajectory, double sampling_frequency) {
  if (!(sampling_frequency > 0.0)) {
    throw std::invalid_argument("resample_uniform: sampling frequency must be positive");
  }
  if (trajectory.size() < 2) {
    throw std::invalid_argument("resample_uniform: trajectory needs at least two samples");
  }
  const double final_time = trajectory.time(trajectory.size() - 1);
  const long count = static_cast<long>(std::floor(final_time * sampling_frequency + 1e-9)) + 1;

  Trajectory out;
  out.excitation = trajectory.excitation;
  out.time.resize(count);
  out.position.resize(count);
  out.velocity.resize(count);
  out.acceleration.resize(count);
  out.friction.resize(count);
  out.input.resize(count);
  const bool base = trajectory.excitation == ExcitationKind::BaseMotion;
  if (base) out.input_velocity.resize(count);
  out.labels.resize(count);

  long hint = 0;
  for (long k = 0; k < count; ++k) {
    const double stamp = static_cast<double>(k) / sampling_frequency;
    while (hint + 2 < trajectory.size() && trajectory.time(hint + 1) < stamp) ++hint;
    out.time(k) = stamp;
    out.position(k) = interpolate(trajectory.time, trajectory.position, stamp, hint);
    out.velocity(k) = interpolate(trajectory.time, trajectory.velocity, stamp, hint);
    out.acceleration(k) = interpolate(trajectory.time, trajectory.acceleration, stamp, hint);
    out.friction(k) = interpolate(trajectory.time, trajectory.friction, stamp, hint);
    out.input(k) = interpolate(trajectory.time, trajectory.input, stamp, hint);
    if (base) {
      out.input_velocity(k) =
          interpolate(trajectory.time, trajectory.input_velocity, stamp, hint);
    }
    // Label from the sample at or immediately left of the stamp.
    long left = hint;
    while (left + 1 < trajectory.size() && trajectory.time(left + 1) <= stamp) ++left;
    out.labels[static_cast<size_t>(k)] = trajectory.labels[static_cast<size_t>(left)];
  }
  return out;
}

NoisySignal add_noise_snr(const Eigen::VectorXd& signal, double snr_db, unsigned seed) {
  if (std::isnan(snr_db)) throw std::invalid_argument("add_noise_snr: snr_db must not be NaN");
  if (signal.size() == 0) throw std::invalid_argument("add_noise_snr: signal is empty");
  if (!signal.allFinite()) {
    throw std::invalid_argument("add_noise_snr: signal must be finite");
  }
  NoisySignal out;
  if (std::isinf(snr_db) && snr_db > 0.0) {
    out.values = signal;
    out.noise_sd = 0.0;
    return out;
  }
  const double mean_square = signal.squaredNorm() / static_cast<double>(signal.size());
  const double sd = std::sqrt(mean_square / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.values = signal;
  for (long i = 0; i < signal.size(); ++i) out.values(i) += sd * gauss(rng);
  out.noise_sd = sd;
  return out;
}

}  // namespace gplfm
