#pragma once

#include <span>

#include "gplfm/types.hpp"

namespace gplfm {

// Matrix exponential by scaling-and-squaring with Pade approximants.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// True when all eigenvalues of a have real part below -tol.
bool is_hurwitz(const Eigen::MatrixXd& a, double tol = 1e-12);

// Solves a*p + p*a' + w = 0 for the stationary covariance p by Kronecker
// vectorization; a must be Hurwitz and w symmetric PSD. Intended for the
// small systems used here (n <= 8, so the linear solve is at most 64x64).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w);

// Symmetrizes and clips tiny negative eigenvalues (>= -1e-12) to zero.
// Throws InferenceError for negativity beyond that, which indicates a real
// defect upstream rather than rounding.
Mat make_psd(const Mat& m, double hard_floor = -1e-12);

// log(sum(exp(x))) guarded against overflow; -inf for an empty or all -inf set.
double log_sum_exp(std::span<const double> x);

// Log density of a scalar Gaussian with variance s evaluated at residual e.
double log_gaussian_scalar(double e, double s);

// Log density of N(mean, cov) at x. cov must be symmetric positive definite.
double log_gaussian(const Vec& x, const Vec& mean, const Mat& cov);

}  // namespace gplfm
