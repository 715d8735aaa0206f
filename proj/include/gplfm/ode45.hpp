#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <stdexcept>

namespace gplfm {

// Tolerances for the embedded Runge-Kutta 5(4) integrator. The defaults are
// the simulation-study settings: tight state tolerances, steps capped so the
// output grid stays denser than any sampling rate of interest, and event
// times located to a tenth of a nanosecond.
struct OdeOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double max_step = 2.5e-4;   // s
  double initial_step = 0.0;  // 0 picks max_step / 16
  double event_tol = 1e-10;   // s
  long max_steps = 200000000;
};

// Integration broke down (step-size underflow or step budget exhausted).
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double at_time)
      : std::runtime_error(what + " at t = " + std::to_string(at_time)), time(at_time) {}
  double time;
};

using OdeRhs = std::function<void(double, const Eigen::Vector2d&, Eigen::Vector2d&)>;

// Quartic dense-output polynomial over one accepted step [t0, t0 + h].
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  Eigen::Vector2d r1, r2, r3, r4, r5;

  Eigen::Vector2d eval(double t) const {
    const double s = (t - t0) / h;
    return r1 + s * (r2 + (1.0 - s) * (r3 + s * (r4 + (1.0 - s) * r5)));
  }
};

// Dormand-Prince 5(4) with step-size control and per-step dense output. The
// caller drives it one accepted step at a time, so regime switching can
// inspect each segment for events before continuing.
class Dopri5 {
 public:
  Dopri5(OdeRhs rhs, const OdeOptions& options);

  // Resets the integrator state to (t, y) and evaluates the derivative there.
  void start(double t, const Eigen::Vector2d& y);

  // Advances one accepted step, never beyond t_limit. Returns false once the
  // current time has already reached t_limit.
  bool step(double t_limit);

  double time() const { return t_; }
  const Eigen::Vector2d& state() const { return y_; }
  const Eigen::Vector2d& derivative() const { return k1_; }
  const DenseSegment& segment() const { return segment_; }

 private:
  OdeRhs rhs_;
  OdeOptions options_;
  double t_ = 0.0;
  double h_ = 0.0;
  Eigen::Vector2d y_;
  Eigen::Vector2d k1_;  // derivative at (t_, y_); reused first stage
  DenseSegment segment_;
  long steps_taken_ = 0;
};

}  // namespace gplfm
