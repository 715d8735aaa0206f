#include "gplfm/gp_ssm.hpp"

#include <cmath>

namespace gplfm {

KernelSpec::KernelSpec(double variance_, double lengthscale_, MaternSmoothness smoothness_)
    : variance(variance_), lengthscale(lengthscale_), smoothness(smoothness_) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("KernelSpec: variance must be positive");
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
    throw std::invalid_argument("KernelSpec: lengthscale must be positive");
  if (smoothness != MaternSmoothness::Half)
    throw UnsupportedKernelError("KernelSpec: only Matern smoothness 1/2 has a state-space form");
}

LatentForceSSM matern_half_to_ssm(const KernelSpec& kernel) {
  LatentForceSSM ssm;
  ssm.state_dim = 1;
  ssm.drift = Mat::Constant(1, 1, -1.0 / kernel.lengthscale);
  ssm.noise_loading = Vec::Constant(1, 1.0);
  ssm.spectral_density = 2.0 * kernel.variance / kernel.lengthscale;
  return ssm;
}

double kernel_eval(const KernelSpec& kernel, double t1, double t2) {
  return kernel.variance * std::exp(-std::abs(t1 - t2) / kernel.lengthscale);
}

Eigen::MatrixXd kernel_gram(const KernelSpec& kernel, const Eigen::VectorXd& times) {
  const Eigen::Index n = times.size();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(kernel, times[i], times[j]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  return gram;
}

}  // namespace gplfm
