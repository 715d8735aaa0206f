#pragma once

#include "gplfm/ssm_builder.hpp"
#include "gplfm/types.hpp"

namespace gplfm {

struct Gaussian {
  Vec mean;
  Mat cov;
};

// One-step state prediction under the linear model.
Gaussian kalman_predict(const DiscreteLGSSM& model, const Gaussian& prior, const InputVec& u_prev);

struct UpdateResult {
  Gaussian posterior;
  double log_evidence;  // log N(y | C mu + D u, C P C' + R)
};

// Scalar-observation measurement update in Joseph form. Returns the posterior
// and the log predictive density of the observation.
UpdateResult kalman_update(const DiscreteLGSSM& model, const Gaussian& predicted, double y,
                           const InputVec& u_now);

// One backward smoothing step: combines the filtered state at t with the
// smoothed state at t+1 through the model used for the t -> t+1 transition.
Gaussian rts_step(const DiscreteLGSSM& model, const Gaussian& filtered, const Gaussian& smoothed_next,
                  const InputVec& u_t);

}  // namespace gplfm
