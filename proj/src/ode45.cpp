#include "gplfm/ode45.hpp"

#include <algorithm>
#include <cmath>

namespace gplfm {

namespace {

// Dormand-Prince coefficients: stage nodes, stage weights, the 5th-order
// solution weights (row seven doubles as the FSAL first stage of the next
// step), the embedded 4th-order weights, and the dense-output weights.
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;

constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0, kA74 = 125.0 / 192.0,
                 kA75 = -2187.0 / 6784.0, kA76 = 11.0 / 84.0;

constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

constexpr double kD1 = -12715105075.0 / 11282082432.0, kD3 = 87487479700.0 / 32700410799.0,
                 kD4 = -10690763975.0 / 1880347072.0, kD5 = 701980252875.0 / 199316789632.0,
                 kD6 = -1453857185.0 / 822651844.0, kD7 = 69997945.0 / 29380423.0;

}  // namespace

Dopri5::Dopri5(OdeRhs rhs, const OdeOptions& options) : rhs_(std::move(rhs)), options_(options) {
  if (!(options_.abs_tol > 0.0) || !(options_.rel_tol > 0.0)) {
    throw std::invalid_argument("Dopri5: tolerances must be positive");
  }
  if (!(options_.max_step > 0.0)) {
    throw std::invalid_argument("Dopri5: max_step must be positive");
  }
}

void Dopri5::start(double t, const Eigen::Vector2d& y) {
  t_ = t;
  y_ = y;
  rhs_(t_, y_, k1_);
  h_ = options_.initial_step > 0.0 ? options_.initial_step : options_.max_step / 16.0;
  h_ = std::min(h_, options_.max_step);
}

bool Dopri5::step(double t_limit) {
  if (t_ >= t_limit) return false;
  Eigen::Vector2d k2, k3, k4, k5, k6, k7, y_new, y_stage;

  while (true) {
    if (++steps_taken_ > options_.max_steps) {
      throw SolverError("integration step budget exhausted", t_);
    }
    double h = std::min({h_, options_.max_step, t_limit - t_});
    if (h < 1e-13 * std::max(1.0, std::abs(t_))) {
      throw SolverError("step size underflow", t_);
    }

    y_stage = y_ + h * kA21 * k1_;
    rhs_(t_ + kC2 * h, y_stage, k2);
    y_stage = y_ + h * (kA31 * k1_ + kA32 * k2);
    rhs_(t_ + kC3 * h, y_stage, k3);
    y_stage = y_ + h * (kA41 * k1_ + kA42 * k2 + kA43 * k3);
    rhs_(t_ + kC4 * h, y_stage, k4);
    y_stage = y_ + h * (kA51 * k1_ + kA52 * k2 + kA53 * k3 + kA54 * k4);
    rhs_(t_ + kC5 * h, y_stage, k5);
    y_stage = y_ + h * (kA61 * k1_ + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
    rhs_(t_ + h, y_stage, k6);
    y_new = y_ + h * (kA71 * k1_ + kA73 * k3 + kA74 * k4 + kA75 * k5 + kA76 * k6);
    rhs_(t_ + h, y_new, k7);

    const Eigen::Vector2d error_vec =
        h * (kE1 * k1_ + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
    double error = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double scale =
          options_.abs_tol + options_.rel_tol * std::max(std::abs(y_(i)), std::abs(y_new(i)));
      const double ratio = error_vec(i) / scale;
      error += ratio * ratio;
    }
    error = std::sqrt(error / 2.0);

    const double factor = std::clamp(0.9 * std::pow(std::max(error, 1e-12), -0.2), 0.2, 5.0);
    if (error <= 1.0) {
      segment_.t0 = t_;
      segment_.h = h;
      segment_.r1 = y_;
      segment_.r2 = y_new - y_;
      segment_.r3 = h * k1_ - segment_.r2;
      segment_.r4 = segment_.r2 - h * k7 - segment_.r3;
      segment_.r5 =
          h * (kD1 * k1_ + kD3 * k3 + kD4 * k4 + kD5 * k5 + kD6 * k6 + kD7 * k7);
      t_ += h;
      y_ = y_new;
      k1_ = k7;
      h_ = std::min(h * factor, options_.max_step);
      return true;
    }
    h_ = h * factor;
  }
}

}  // namespace gplfm
