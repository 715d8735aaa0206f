#include "gplfm/post_id.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gplfm/kalman.hpp"
#include "gplfm/nelder_mead.hpp"

namespace gplfm {

namespace {

void require_same_length(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* where) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(where) + ": series lengths differ");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

double population_variance(const Eigen::VectorXd& series) {
  if (series.size() == 0) {
    throw std::invalid_argument("population_variance: empty series");
  }
  const double mean = series.mean();
  return (series.array() - mean).square().sum() / static_cast<double>(series.size());
}

double nmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate_means) {
  require_same_length(truth, estimate_means, "nmse");
  const double variance = population_variance(truth);
  if (!(variance > 0.0)) {
    throw std::invalid_argument("nmse: truth series is constant (zero variance)");
  }
  const double mse =
      (truth - estimate_means).squaredNorm() / static_cast<double>(truth.size());
  return 100.0 * mse / variance;
}

double nmv(double truth_variance, const Eigen::VectorXd& estimate_variances) {
  if (!(truth_variance > 0.0)) {
    throw std::invalid_argument("nmv: truth variance must be positive");
  }
  if (estimate_variances.size() == 0) {
    throw std::invalid_argument("nmv: empty variance series");
  }
  if ((estimate_variances.array() < 0.0).any()) {
    throw std::invalid_argument("nmv: negative predictive variance");
  }
  const double mean_variance =
      estimate_variances.sum() / static_cast<double>(estimate_variances.size());
  return 100.0 * mean_variance / truth_variance;
}

double nmv(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate_variances) {
  require_same_length(truth, estimate_variances, "nmv");
  return nmv(population_variance(truth), estimate_variances);
}

// ---------------------------------------------------------------------------
// Linear residual fit and parameter correction
// ---------------------------------------------------------------------------

LinearResidualFit fit_linear_residual(const Eigen::VectorXd& latent_force,
                                      const Eigen::VectorXd& position,
                                      const Eigen::VectorXd& velocity,
                                      const Eigen::VectorXd& input,
                                      ExcitationKind excitation,
                                      const Eigen::VectorXd& input_velocity) {
  require_same_length(latent_force, position, "fit_linear_residual");
  require_same_length(latent_force, velocity, "fit_linear_residual");
  require_same_length(latent_force, input, "fit_linear_residual");
  const bool base = excitation == ExcitationKind::BaseMotion;
  if (base) {
    require_same_length(latent_force, input_velocity, "fit_linear_residual");
  }
  const long n = latent_force.size();
  const long n_coeffs = base ? 3 : 4;
  if (n < 10 * n_coeffs) {
    throw std::invalid_argument("fit_linear_residual: need at least 10 samples per coefficient");
  }

  Eigen::MatrixXd design(n, n_coeffs);
  Eigen::VectorXd response(n);
  for (long t = 0; t < n; ++t) {
    // Odd symmetry about the origin: superpose the branches by negating the
    // whole row (constant regressor included) where the velocity is negative.
    const double fold = velocity(t) < 0.0 ? -1.0 : 1.0;
    design(t, 0) = fold;
    if (base) {
      design(t, 1) = fold * (position(t) - input(t));
      design(t, 2) = fold * (velocity(t) - input_velocity(t));
    } else {
      design(t, 1) = fold * position(t);
      design(t, 2) = fold * velocity(t);
      design(t, 3) = fold * input(t);
    }
    response(t) = fold * latent_force(t);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < n_coeffs) {
    throw std::runtime_error("fit_linear_residual: rank-deficient design matrix");
  }
  const Eigen::VectorXd coeffs = qr.solve(response);

  LinearResidualFit fit;
  fit.a0 = coeffs(0);
  fit.a1 = coeffs(1);
  fit.a2 = coeffs(2);
  if (!base) fit.a3 = coeffs(3);
  fit.residual_rms =
      std::sqrt((design * coeffs - response).squaredNorm() / static_cast<double>(n));
  if (!std::isfinite(fit.a0) || !std::isfinite(fit.a1) || !std::isfinite(fit.a2) ||
      (fit.a3 && !std::isfinite(*fit.a3))) {
    throw std::runtime_error("fit_linear_residual: non-finite coefficients");
  }
  return fit;
}

ParameterCorrection correct_parameters(const LinearResidualFit& fit,
                                       const SystemParams& guesses) {
  ParameterCorrection out;
  if (fit.a3) {
    const double denom = 1.0 - *fit.a3;
    if (std::abs(denom) < 1e-9) {
      throw CorrectionError("correct_parameters: a3 = 1 makes the correction singular");
    }
    out.delta_stiffness = (fit.a1 + *fit.a3 * guesses.stiffness) / denom;
    out.delta_damping = (fit.a2 + *fit.a3 * guesses.damping) / denom;
    out.delta_mass = *fit.a3 * guesses.mass / denom;
  } else {
    // Base motion: the mass is not identifiable from base and mass motion,
    // so only stiffness and damping are corrected.
    out.delta_stiffness = fit.a1;
    out.delta_damping = fit.a2;
    out.delta_mass = 0.0;
  }
  out.corrected.mass = guesses.mass + out.delta_mass;
  out.corrected.damping = guesses.damping + out.delta_damping;
  out.corrected.stiffness = guesses.stiffness + out.delta_stiffness;
  if (!(out.corrected.mass > 0.0) || !(out.corrected.stiffness > 0.0)) {
    throw CorrectionError("correct_parameters: corrected mass/stiffness not positive");
  }
  return out;
}

RecoveredFriction recover_friction(const Eigen::VectorXd& latent_force,
                                   const Eigen::VectorXd& position,
                                   const Eigen::VectorXd& velocity,
                                   const Eigen::VectorXd& input,
                                   const LinearResidualFit& fit) {
  require_same_length(latent_force, position, "recover_friction");
  require_same_length(latent_force, velocity, "recover_friction");
  require_same_length(latent_force, input, "recover_friction");
  if (!fit.a3) {
    throw std::invalid_argument("recover_friction: requires a direct-force fit (a3 present)");
  }
  const double denom = 1.0 - *fit.a3;
  if (std::abs(denom) < 1e-9) {
    throw CorrectionError("recover_friction: a3 = 1 makes the transform singular");
  }
  RecoveredFriction out;
  out.force = (latent_force - fit.a1 * position - fit.a2 * velocity - *fit.a3 * input) / denom;
  out.variance_scale = 1.0 / (denom * denom);
  return out;
}

// ---------------------------------------------------------------------------
// Slip estimates, static friction, friction-law fit
// ---------------------------------------------------------------------------

ForceVelocityEstimates collect_slip_estimates(const Eigen::VectorXd& velocity_mean,
                                              const Eigen::VectorXd& velocity_variance,
                                              const Eigen::VectorXd& force_mean,
                                              const Eigen::VectorXd& force_variance,
                                              const Eigen::VectorXd& sliding_probability,
                                              double threshold) {
  require_same_length(velocity_mean, velocity_variance, "collect_slip_estimates");
  require_same_length(velocity_mean, force_mean, "collect_slip_estimates");
  require_same_length(velocity_mean, force_variance, "collect_slip_estimates");
  require_same_length(velocity_mean, sliding_probability, "collect_slip_estimates");

  std::vector<long> steps;
  for (long t = 0; t < velocity_mean.size(); ++t) {
    if (sliding_probability(t) > threshold) steps.push_back(t);
  }
  ForceVelocityEstimates out;
  const long m = static_cast<long>(steps.size());
  out.velocity_mean.resize(m);
  out.velocity_variance.resize(m);
  out.force_mean.resize(m);
  out.force_variance.resize(m);
  for (long i = 0; i < m; ++i) {
    const long t = steps[static_cast<size_t>(i)];
    out.velocity_mean(i) = velocity_mean(t);
    out.velocity_variance(i) = velocity_variance(t);
    out.force_mean(i) = force_mean(t);
    out.force_variance(i) = force_variance(t);
  }
  out.steps = std::move(steps);
  return out;
}

StaticFrictionEstimate estimate_static_friction(const Eigen::VectorXd& force_mean,
                                                const std::vector<RegimeKind>& regime_sequence,
                                                long min_run_samples, long merge_gap_samples) {
  if (force_mean.size() != static_cast<long>(regime_sequence.size())) {
    throw std::invalid_argument("estimate_static_friction: series lengths differ");
  }
  if (min_run_samples < 1) {
    throw std::invalid_argument("estimate_static_friction: min_run_samples must be >= 1");
  }
  if (merge_gap_samples < 0) {
    throw std::invalid_argument("estimate_static_friction: merge_gap_samples must be >= 0");
  }
  const size_t n = regime_sequence.size();

  // Maximal sticking runs as [first, last] index pairs.
  std::vector<std::pair<size_t, size_t>> runs;
  for (size_t t = 0; t < n; ++t) {
    if (regime_sequence[t] != RegimeKind::Sticking) continue;
    size_t last = t;
    while (last + 1 < n && regime_sequence[last + 1] == RegimeKind::Sticking) ++last;
    runs.emplace_back(t, last);
    t = last;
  }

  // Group runs into episodes: consecutive runs whose gap does not exceed the
  // merge tolerance describe one physical stop with boundary label jitter.
  std::vector<double> breakaway;
  for (size_t r = 0; r < runs.size();) {
    size_t r_end = r;
    while (r_end + 1 < runs.size() &&
           runs[r_end + 1].first - runs[r_end].second - 1 <=
               static_cast<size_t>(merge_gap_samples)) {
      ++r_end;
    }
    // The episode hands over to sliding when, after its final sticking step
    // and any number of resetting steps, the sequence continues with sliding.
    // Episodes cut off by the end of the record never broke away.
    size_t next = runs[r_end].second + 1;
    while (next < n && regime_sequence[next] == RegimeKind::Resetting) ++next;
    if (next < n && regime_sequence[next] == RegimeKind::Sliding) {
      // Sample at the end of the last run long enough to be a held stick:
      // shorter trailing fragments lag the physical breakaway and overshoot.
      for (size_t q = r_end + 1; q-- > r;) {
        if (runs[q].second - runs[q].first + 1 >= static_cast<size_t>(min_run_samples)) {
          breakaway.push_back(std::abs(force_mean(static_cast<long>(runs[q].second))));
          break;
        }
      }
    }
    r = r_end + 1;
  }
  if (breakaway.empty()) {
    throw NoStopsError(
        "estimate_static_friction: no stick-to-slip transition in the regime sequence");
  }
  StaticFrictionEstimate out;
  out.count = static_cast<long>(breakaway.size());
  double sum = 0.0;
  for (double f : breakaway) sum += f;
  out.mean = sum / static_cast<double>(out.count);
  if (out.count > 1) {
    double ss = 0.0;
    for (double f : breakaway) ss += (f - out.mean) * (f - out.mean);
    out.standard_deviation = std::sqrt(ss / static_cast<double>(out.count - 1));
  } else {
    out.standard_deviation = 0.0;  // single stop: spread not estimable
  }
  return out;
}

namespace {

double law_magnitude_at(double speed, double a, double b, double c, double f_star,
                        double v_star, double epsilon) {
  const double s = speed + epsilon;
  return f_star + a * std::log(s / v_star) + b * std::log(c + v_star / s);
}

}  // namespace

FrictionParams fit_friction_law(const ForceVelocityEstimates& estimates, double v_star,
                                double epsilon,
                                const std::optional<StaticFrictionEstimate>& static_force,
                                long budget, unsigned seed) {
  const long n = estimates.velocity_mean.size();
  if (n < 20) {
    throw std::invalid_argument("fit_friction_law: need at least 20 slip samples");
  }
  if (!(v_star > 0.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("fit_friction_law: v_star and epsilon must be positive");
  }

  // Sign-fold onto the positive branch: the law is odd, so force * sign(v)
  // against |v| superposes both branches.
  Eigen::VectorXd speed(n), force(n);
  for (long i = 0; i < n; ++i) {
    const double v = estimates.velocity_mean(i);
    speed(i) = std::abs(v);
    force(i) = v < 0.0 ? -estimates.force_mean(i) : estimates.force_mean(i);
  }

  const double force_scale = std::max(force.cwiseAbs().maxCoeff(), 1e-6);
  const double log_span = std::log(v_star) - std::log(epsilon);

  const bool constrained = static_force.has_value();
  const double f_s = constrained ? static_force->mean : 0.0;

  // Free parameters: (a, c, F*) with b bound by the static constraint, or
  // (a, b, c, F*) unconstrained. The regularizer c spans decades and only
  // its order of magnitude is identifiable a priori, so the simplex walks
  // log10(c); a linear c axis would give the initial simplex a step the size
  // of the whole bound span.
  const int dim = constrained ? 3 : 4;
  auto unpack = [&](const Eigen::VectorXd& x, double& a, double& b, double& c,
                    double& f_star) {
    a = x(0);
    if (constrained) {
      c = std::pow(10.0, x(1));
      f_star = x(2);
      b = a + (f_s - f_star) / log_span;
    } else {
      b = x(1);
      c = std::pow(10.0, x(2));
      f_star = x(3);
    }
  };

  auto objective = [&](const Eigen::VectorXd& x) {
    double a, b, c, f_star;
    unpack(x, a, b, c, f_star);
    double sse = 0.0;
    for (long i = 0; i < n; ++i) {
      const double r = force(i) - law_magnitude_at(speed(i), a, b, c, f_star, v_star, epsilon);
      sse += r * r;
    }
    return sse / static_cast<double>(n);
  };

  Eigen::VectorXd lower(dim), upper(dim), start(dim);
  const double log_c_start = std::log10(0.02);
  if (constrained) {
    lower << -2.0 * force_scale, -6.0, 1e-8;
    upper << 2.0 * force_scale, 1.0, 4.0 * force_scale;
    start << 0.05 * force_scale, log_c_start, force_scale;
  } else {
    lower << -2.0 * force_scale, -2.0 * force_scale, -6.0, 1e-8;
    upper << 2.0 * force_scale, 2.0 * force_scale, 1.0, 4.0 * force_scale;
    start << 0.05 * force_scale, 0.08 * force_scale, log_c_start, force_scale;
  }

  const OptimizerResult result =
      nelder_mead_minimize(objective, lower, upper, budget, seed, {start});
  if (!result.found_finite()) {
    throw OptimizationError("fit_friction_law: no finite objective value found");
  }

  FrictionParams fitted;
  unpack(result.best_point, fitted.a, fitted.b, fitted.c, fitted.f_star);
  fitted.v_star = v_star;
  fitted.epsilon = epsilon;
  fitted.validate();
  return fitted;
}

// ---------------------------------------------------------------------------
// Base-input smoothing
// ---------------------------------------------------------------------------

void BaseInputSmoother::validate() const {
  if (!(acceleration_variance > 0.0)) {
    throw std::invalid_argument("BaseInputSmoother: acceleration variance must be positive");
  }
  if (!(measurement_variance > 0.0)) {
    throw std::invalid_argument("BaseInputSmoother: measurement variance must be positive");
  }
}

namespace {

DiscreteLGSSM kinematic_model(double dt, const BaseInputSmoother& hyper) {
  DiscreteLGSSM model;
  model.A.resize(2, 2);
  model.A << 1.0, dt, 0.0, 1.0;
  model.B = InputMat::Zero(2, 1);
  // Unknown constant acceleration over each step enters through [dt^2/2; dt].
  Vec g(2);
  g << 0.5 * dt * dt, dt;
  model.Q = hyper.acceleration_variance * (g * g.transpose());
  model.C.resize(2);
  model.C << 1.0, 0.0;
  model.D = InputRow::Zero(1);
  model.R = hyper.measurement_variance;
  model.dt = dt;
  return model;
}

Gaussian kinematic_initial(const Eigen::VectorXd& raw, double dt,
                           const BaseInputSmoother& hyper) {
  Gaussian init;
  init.mean.resize(2);
  init.mean << raw(0), (raw(1) - raw(0)) / dt;
  init.cov.resize(2, 2);
  // Weakly informative: the first sample fixes u to sensor accuracy; the
  // finite-difference start for the velocity carries the propagated noise.
  const double vu = hyper.measurement_variance;
  init.cov << vu, 0.0, 0.0, 2.0 * vu / (dt * dt) + hyper.acceleration_variance * dt * dt;
  return init;
}

}  // namespace

SmoothedInput smooth_base_input(const Eigen::VectorXd& raw, double sampling_frequency,
                                const BaseInputSmoother& hyper) {
  hyper.validate();
  if (!(sampling_frequency > 0.0)) {
    throw std::invalid_argument("smooth_base_input: sampling frequency must be positive");
  }
  if (raw.size() < 2) {
    throw std::invalid_argument("smooth_base_input: need at least two samples");
  }
  const double dt = 1.0 / sampling_frequency;
  const DiscreteLGSSM model = kinematic_model(dt, hyper);
  const InputVec zero_input = InputVec::Zero(1);
  const long n = raw.size();

  std::vector<Gaussian> filtered(static_cast<size_t>(n));
  double log_likelihood = 0.0;
  Gaussian belief = kinematic_initial(raw, dt, hyper);
  {
    const UpdateResult first = kalman_update(model, belief, raw(0), zero_input);
    log_likelihood += first.log_evidence;
    filtered[0] = first.posterior;
  }
  for (long t = 1; t < n; ++t) {
    const Gaussian predicted = kalman_predict(model, filtered[static_cast<size_t>(t - 1)],
                                              zero_input);
    const UpdateResult updated = kalman_update(model, predicted, raw(t), zero_input);
    log_likelihood += updated.log_evidence;
    filtered[static_cast<size_t>(t)] = updated.posterior;
  }

  SmoothedInput out;
  out.displacement.resize(n);
  out.velocity.resize(n);
  out.log_likelihood = log_likelihood;
  Gaussian smoothed = filtered[static_cast<size_t>(n - 1)];
  out.displacement(n - 1) = smoothed.mean(0);
  out.velocity(n - 1) = smoothed.mean(1);
  for (long t = n - 2; t >= 0; --t) {
    smoothed = rts_step(model, filtered[static_cast<size_t>(t)], smoothed, zero_input);
    out.displacement(t) = smoothed.mean(0);
    out.velocity(t) = smoothed.mean(1);
  }
  return out;
}

BaseInputSmoother optimize_base_smoother(const Eigen::VectorXd& raw, double sampling_frequency,
                                         long budget, unsigned seed) {
  if (raw.size() < 4) {
    throw std::invalid_argument("optimize_base_smoother: need at least four samples");
  }
  auto objective = [&](const Eigen::VectorXd& x) {
    BaseInputSmoother hyper;
    hyper.acceleration_variance = std::pow(10.0, x(0));
    hyper.measurement_variance = std::pow(10.0, x(1));
    try {
      return -smooth_base_input(raw, sampling_frequency, hyper).log_likelihood;
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd lower(2), upper(2), start(2);
  lower << -24.0, -24.0;
  upper << 8.0, 4.0;
  // Moment heuristics: second differences bound the acceleration level and
  // first differences the sensor noise.
  const long n = raw.size();
  double dd = 0.0;
  for (long t = 2; t < n; ++t) {
    const double second = raw(t) - 2.0 * raw(t - 1) + raw(t - 2);
    dd += second * second;
  }
  dd /= static_cast<double>(n - 2);
  const double dt = 1.0 / sampling_frequency;
  start << std::log10(std::max(dd / (dt * dt * dt * dt), 1e-20)),
      std::log10(std::max(dd / 6.0, 1e-20));

  const OptimizerResult result = nelder_mead_minimize(objective, lower, upper, budget, seed,
                                                      {start});
  if (!result.found_finite()) {
    throw OptimizationError("optimize_base_smoother: no finite likelihood found");
  }
  BaseInputSmoother hyper;
  hyper.acceleration_variance = std::pow(10.0, result.best_point(0));
  hyper.measurement_variance = std::pow(10.0, result.best_point(1));
  return hyper;
}

// ---------------------------------------------------------------------------
// Forward prediction
// ---------------------------------------------------------------------------

Trajectory forward_predict(const SystemParams& system, const FrictionParams& law,
                           const SignalFunction& input, double final_time,
                           ExcitationKind excitation, const OdeOptions& options) {
  return simulate_stick_slip(system, law, input, final_time, excitation, options);
}

}  // namespace gplfm
