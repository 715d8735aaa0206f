#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>

#include "gplfm/nelder_mead.hpp"
#include "gplfm/ssm_builder.hpp"
#include "gplfm/switching.hpp"

namespace gplfm {

// Every hyperparameter evaluation returned minus infinity; there is no point
// estimate to report.
struct OptimizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Independent Gaussian priors over (force variance, lengthscale, noise
// variance), all in natural units (N^2, s, m^2). The priors have unbounded
// support; evaluation truncates them at a small positive floor instead of
// reparameterizing.
struct HyperPrior {
  double force_variance_mean = 20.0;
  double force_variance_var = 100.0;
  double lengthscale_mean = 20.0;
  double lengthscale_var = 100.0;
  double noise_variance_mean = 2e-11;
  double noise_variance_var = 1e-22;

  void validate() const;
};

// Point hyperparameter estimate plus the optimizer's audit trail. best_trace
// holds the best log-posterior after each evaluation (non-decreasing).
struct HyperEstimate {
  double force_variance = 0.0;
  double lengthscale = 0.0;
  double noise_variance = 0.0;
  double log_posterior = 0.0;
  std::vector<double> best_trace;
  long evaluations = 0;
};

// Everything the marginal likelihood needs besides the hyperparameters: the
// mechanical system, regime layout, switching settings, and the dataset. The
// same context drives both the standard (single-regime) and the switching
// variants.
struct InferenceProblem {
  SystemParams system{};
  ExcitationKind excitation = ExcitationKind::DirectForce;
  ObservedQuantity observed = ObservedQuantity::Displacement;
  bool stick_slip = true;
  std::optional<double> reset_prior_variance = 0.05;
  double persistence = 0.92;
  double dt = 0.0;
  InferenceConfig inference{};
  Eigen::MatrixXd inputs;        // T x input_dim(excitation)
  Eigen::VectorXd observations;  // T

  RegimeModelSet assemble(double force_variance, double lengthscale,
                          double noise_variance) const;
};

// Natural-unit optimization box derived from the prior: mean +/- 6 sd on each
// coordinate, clipped to the positive floor 1e-12.
std::pair<Eigen::Vector3d, Eigen::Vector3d> hyper_bounds(const HyperPrior& prior);

// Log joint density log p(y | theta) + log p(theta) with theta = (force
// variance, lengthscale, noise variance) in natural units. Inference failures
// and out-of-domain parameters map to -infinity; when `diagnostic` is given it
// receives the failure reason.
double log_posterior(const Eigen::Vector3d& theta, const InferenceProblem& problem,
                     const HyperPrior& prior, std::string* diagnostic = nullptr);

// MAP estimate via multi-start Nelder-Mead over log theta inside
// hyper_bounds. Deterministic given (problem, prior, budget, seed). Throws
// OptimizationError when no evaluation is finite.
HyperEstimate optimize_hyperparameters(const HyperPrior& prior, const InferenceProblem& problem,
                                       long budget, unsigned seed);

}  // namespace gplfm
