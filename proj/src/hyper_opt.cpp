#include "gplfm/hyper_opt.hpp"

#include <cmath>
#include <limits>

namespace gplfm {

namespace {

constexpr double kPositiveFloor = 1e-30;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gaussian_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * variance) + d * d / variance);
}

}  // namespace

void HyperPrior::validate() const {
  if (!(force_variance_var > 0.0) || !(lengthscale_var > 0.0) || !(noise_variance_var > 0.0)) {
    throw std::invalid_argument("HyperPrior: prior variances must be positive");
  }
}

RegimeModelSet InferenceProblem::assemble(double force_variance, double lengthscale,
                                          double noise_variance) const {
  const KernelSpec kernel(force_variance, lengthscale);
  const ObservationKind obs{observed, noise_variance};
  return assemble_regimes(system, excitation, kernel, dt, obs, reset_prior_variance, stick_slip);
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> hyper_bounds(const HyperPrior& prior) {
  prior.validate();
  const Eigen::Vector3d mean(prior.force_variance_mean, prior.lengthscale_mean,
                             prior.noise_variance_mean);
  const Eigen::Vector3d sd(std::sqrt(prior.force_variance_var), std::sqrt(prior.lengthscale_var),
                           std::sqrt(prior.noise_variance_var));
  // The lower clamp must stay far below any plausible optimum: the search runs in
  // log space, so a floor tied to the prior mean keeps the box finite without
  // excluding small noise variances that the likelihood may genuinely favour.
  Eigen::Vector3d lower = (mean - 6.0 * sd).cwiseMax(mean * 1e-8).cwiseMax(kPositiveFloor);
  Eigen::Vector3d upper = mean + 6.0 * sd;
  return {lower, upper};
}

double log_posterior(const Eigen::Vector3d& theta, const InferenceProblem& problem,
                     const HyperPrior& prior, std::string* diagnostic) {
  prior.validate();
  for (int i = 0; i < 3; ++i) {
    if (!(theta(i) >= kPositiveFloor)) {
      if (diagnostic) *diagnostic = "hyperparameter below the positive floor";
      return kNegInf;
    }
  }
  double log_prior = log_gaussian_density(theta(0), prior.force_variance_mean,
                                          prior.force_variance_var) +
                     log_gaussian_density(theta(1), prior.lengthscale_mean,
                                          prior.lengthscale_var) +
                     log_gaussian_density(theta(2), prior.noise_variance_mean,
                                          prior.noise_variance_var);
  try {
    const RegimeModelSet set = problem.assemble(theta(0), theta(1), theta(2));
    const MarkovSwitchModel markov =
        markov_transition_matrix(set.count(), problem.persistence);
    const FilterResult filtered =
        adf_filter(set, markov, problem.inputs, problem.observations, problem.inference);
    const double value = filtered.log_likelihood + log_prior;
    if (!std::isfinite(value)) {
      if (diagnostic) *diagnostic = "non-finite likelihood";
      return kNegInf;
    }
    return value;
  } catch (const std::exception& error) {
    if (diagnostic) *diagnostic = error.what();
    return kNegInf;
  }
}

HyperEstimate optimize_hyperparameters(const HyperPrior& prior, const InferenceProblem& problem,
                                       long budget, unsigned seed) {
  if (budget < 50) throw std::invalid_argument("optimize_hyperparameters: budget must be >= 50");
  const auto [lower, upper] = hyper_bounds(prior);
  const Eigen::Vector3d log_lower = lower.array().log();
  const Eigen::Vector3d log_upper = upper.array().log();

  const auto objective = [&](const Eigen::VectorXd& log_theta) {
    const Eigen::Vector3d theta = log_theta.array().exp();
    return -log_posterior(theta, problem, prior);
  };

  // Start the first run at the prior mean (clamped into the box).
  const Eigen::Vector3d mean_start =
      Eigen::Vector3d(prior.force_variance_mean, prior.lengthscale_mean,
                      prior.noise_variance_mean)
          .cwiseMax(lower)
          .cwiseMin(upper)
          .array()
          .log();
  const OptimizerResult optimized = nelder_mead_minimize(objective, log_lower, log_upper, budget,
                                                         seed, {mean_start});
  if (!optimized.found_finite()) {
    throw OptimizationError("hyperparameter optimization failed: every evaluation was -inf");
  }

  HyperEstimate estimate;
  const Eigen::Vector3d theta = optimized.best_point.array().exp();
  estimate.force_variance = theta(0);
  estimate.lengthscale = theta(1);
  estimate.noise_variance = theta(2);
  estimate.log_posterior = -optimized.best_value;
  estimate.evaluations = optimized.evaluations;
  estimate.best_trace.reserve(optimized.best_trace.size());
  for (double v : optimized.best_trace) estimate.best_trace.push_back(-v);
  return estimate;
}

}  // namespace gplfm
