#pragma once

#include <optional>
#include <vector>

#include "gplfm/kalman.hpp"
#include "gplfm/ssm_builder.hpp"
#include "gplfm/types.hpp"

namespace gplfm {

// Sparse regime-switch prior: a non-final regime persists with probability
// rho or hands over to the final (resetting) regime, which redistributes
// uniformly over the others and never repeats. S = 1 degenerates to [1].
struct MarkovSwitchModel {
  int regime_count = 1;
  double persistence = 1.0;
  Eigen::MatrixXd transition;      // row s: p(next | current = s)
  Eigen::MatrixXd log_transition;  // -inf marks forbidden moves
};

MarkovSwitchModel markov_transition_matrix(int regime_count, double persistence);

struct WeightedGaussian {
  double log_weight;  // normalized within its regime: sum exp = 1
  Gaussian state;
};

// Per-regime Gaussian mixture plus the regime marginal, at one time step.
struct RegimeBelief {
  double log_prob;  // log p(regime | data)
  std::vector<WeightedGaussian> components;
};

struct GaussianMixtureBelief {
  std::vector<RegimeBelief> regimes;

  // Moment-matched mixture moments of a linear functional a'x + offset.
  void functional_moments(const RowVec& a, double offset, double& mean, double& var) const;
  // Moment-matched mean and per-dimension variance of the state.
  void state_moments(Vec& mean, Vec& var) const;
};

// Mixture sizes for the filter (per regime) and smoother (per regime).
struct InferenceConfig {
  int filter_components = 1;
  int smoother_components = 1;

  void validate() const;
};

// Reduces a mixture to at most target components: the highest-weight
// components survive unchanged and the tail is moment-matched into one.
// Total weight is preserved. Weights are log scale and need not be normalized.
std::vector<WeightedGaussian> collapse_mixture(std::vector<WeightedGaussian> components,
                                               int target);

// Moment-match a whole mixture into a single Gaussian (weights log scale).
Gaussian moment_match(const std::vector<WeightedGaussian>& components);

// Analytic one-step prediction for the sticking regime: velocity pinned at
// zero, force pinned at the load balance, covariance carried through.
Gaussian sticking_predict(const Gaussian& prev, const InputVec& u_prev,
                          const SystemParams& params, ExcitationKind excitation);

// Per-step regime marginals and the maximum-probability labels (ties resolve
// to the lower regime index).
struct RegimeSequenceEstimate {
  Eigen::MatrixXd probabilities;  // T x S
  std::vector<int> map_labels;
};

struct FilterResult {
  std::vector<GaussianMixtureBelief> beliefs;
  RegimeSequenceEstimate regimes;
  double log_likelihood;
};

// Assumed-density (Gaussian-sum) filter over the switching model. inputs is
// T x n_inputs, observations has length T; the first sample is absorbed as a
// measurement update of the stationary prior. An explicit initial belief
// overrides the stationary prior (shared across regimes).
FilterResult adf_filter(const RegimeModelSet& models, const MarkovSwitchModel& markov,
                        const Eigen::MatrixXd& inputs, const Eigen::VectorXd& observations,
                        const InferenceConfig& config,
                        const std::optional<Gaussian>& initial = std::nullopt);

struct SmootherResult {
  std::vector<GaussianMixtureBelief> beliefs;
  RegimeSequenceEstimate regimes;
};

// Expectation-correction smoother: conditioned backward passes over regime
// pairs with the future-dependence approximation evaluated at the smoothed
// mean. Reduces to the RTS smoother for one regime and one component.
SmootherResult ec_smoother(const FilterResult& filtered, const RegimeModelSet& models,
                           const MarkovSwitchModel& markov, const Eigen::MatrixXd& inputs,
                           const InferenceConfig& config);

}  // namespace gplfm
