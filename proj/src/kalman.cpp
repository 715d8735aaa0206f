#include "gplfm/kalman.hpp"

#include <cmath>

#include "gplfm/linalg.hpp"

namespace gplfm {

Gaussian kalman_predict(const DiscreteLGSSM& model, const Gaussian& prior, const InputVec& u_prev) {
  Gaussian out;
  out.mean = model.A * prior.mean;
  if (model.B.cols() > 0) out.mean += model.B * u_prev;
  out.cov = model.A * prior.cov * model.A.transpose() + model.Q;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

UpdateResult kalman_update(const DiscreteLGSSM& model, const Gaussian& predicted, double y,
                           const InputVec& u_now) {
  double predicted_y = model.C * predicted.mean;
  if (model.D.cols() > 0) predicted_y += model.D * u_now;
  const double e = y - predicted_y;
  const double s = (model.C * predicted.cov * model.C.transpose())(0) + model.R;
  if (!(s > 0.0) || !std::isfinite(s))
    throw InferenceError("kalman_update: non-positive innovation variance");

  const Vec gain = predicted.cov * model.C.transpose() / s;
  UpdateResult out;
  out.posterior.mean = predicted.mean + gain * e;
  const Eigen::Index n = predicted.mean.size();
  const Mat ikc = Mat::Identity(n, n) - gain * model.C;
  out.posterior.cov = ikc * predicted.cov * ikc.transpose() + gain * model.R * gain.transpose();
  out.posterior.cov = 0.5 * (out.posterior.cov + out.posterior.cov.transpose()).eval();
  out.log_evidence = log_gaussian_scalar(e, s);
  return out;
}

Gaussian rts_step(const DiscreteLGSSM& model, const Gaussian& filtered, const Gaussian& smoothed_next,
                  const InputVec& u_t) {
  const Gaussian pred = kalman_predict(model, filtered, u_t);
  // Gain G = P_f A' P_pred^{-1}, via a solve against the symmetric prediction.
  Eigen::LDLT<Mat> ldlt(pred.cov);
  if (ldlt.info() != Eigen::Success)
    throw InferenceError("rts_step: predicted covariance not factorizable");
  const Mat gain = ldlt.solve(Mat(model.A * filtered.cov)).transpose();

  Gaussian out;
  out.mean = filtered.mean + gain * (smoothed_next.mean - pred.mean);
  out.cov = filtered.cov + gain * (smoothed_next.cov - pred.cov) * gain.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace gplfm
