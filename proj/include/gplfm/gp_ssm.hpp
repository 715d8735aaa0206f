#pragma once

#include <Eigen/Dense>

#include "gplfm/types.hpp"

namespace gplfm {

// Matern smoothness values the interface accommodates. Only Half (exponential
// kernel) has a state-space conversion here; the others are reserved.
enum class MaternSmoothness { Half, ThreeHalves, FiveHalves };

// Stationary Matern covariance k(t, t') = variance * exp(-|t - t'| / lengthscale)
// for smoothness 1/2. Construction rejects non-positive parameters and any
// smoothness without a conversion, so downstream code never re-validates.
struct KernelSpec {
  double variance;
  double lengthscale;
  MaternSmoothness smoothness;

  KernelSpec(double variance_, double lengthscale_,
             MaternSmoothness smoothness_ = MaternSmoothness::Half);
};

// Linear time-invariant SDE whose stationary output is the kernel's GP:
//   df = drift * f dt + noise_loading * dw,   dw with spectral density
struct LatentForceSSM {
  Mat drift;
  Vec noise_loading;
  double spectral_density;
  int state_dim;
};

// Exponential-kernel GP as a first-order SDE: drift -1/l, unit loading,
// spectral density 2 * variance / l (stationary variance q*l/2 = variance).
LatentForceSSM matern_half_to_ssm(const KernelSpec& kernel);

double kernel_eval(const KernelSpec& kernel, double t1, double t2);

// Dense covariance matrix over a set of time stamps.
Eigen::MatrixXd kernel_gram(const KernelSpec& kernel, const Eigen::VectorXd& times);

}  // namespace gplfm
