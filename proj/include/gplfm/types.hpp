#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace gplfm {

// State-space objects in this library are small (joint state dimension is the
// two mechanical states plus the latent-force states, never more than 8), so
// the workhorse matrix types use fixed-capacity storage: dynamic sizes without
// heap allocation in the filtering hot loops.
inline constexpr int kMaxStateDim = 8;
inline constexpr int kMaxInputDim = 2;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxStateDim, kMaxStateDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxStateDim, 1>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxStateDim>;
using InputMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxStateDim, kMaxInputDim>;
using InputRow = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxInputDim>;
using InputVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxInputDim, 1>;

// Kernel requested with a smoothness the state-space conversion does not cover.
struct UnsupportedKernelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Continuous-time model whose drift is not Hurwitz; no stationary covariance.
struct UnstableModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filtering/smoothing broke down (degenerate weights, indefinite covariance).
struct InferenceError : std::runtime_error {
  explicit InferenceError(const std::string& what, long step_index = -1)
      : std::runtime_error(step_index >= 0 ? what + " (time step " + std::to_string(step_index) + ")"
                                           : what),
        step(step_index) {}
  long step;
};

}  // namespace gplfm
