#include "gplfm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace gplfm {

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix must be square");
  return a.exp();
}

bool is_hurwitz(const Eigen::MatrixXd& a, double tol) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().real().maxCoeff() < -tol;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || w.rows() != n || w.cols() != n)
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  if (!is_hurwitz(a))
    throw UnstableModelError("solve_lyapunov: drift matrix is not Hurwitz");

  // vec(a*p + p*a') = (kron(I, a) + kron(a, I)) vec(p) = -vec(w)
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) k.block(j * n, j * n, n, n) = a;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      k.block(i * n, j * n, n, n).diagonal().array() += a(i, j);

  Eigen::VectorXd rhs(n * n);
  for (Eigen::Index j = 0; j < n; ++j) rhs.segment(j * n, n) = -w.col(j);

  Eigen::VectorXd vp = k.colPivHouseholderQr().solve(rhs);
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index j = 0; j < n; ++j) p.col(j) = vp.segment(j * n, n);
  p = 0.5 * (p + p.transpose()).eval();

  const double residual = (a * p + p * a.transpose() + w).norm();
  const double scale = std::max(1.0, w.norm());
  if (!(residual < 1e-8 * scale))
    throw UnstableModelError("solve_lyapunov: solve failed (residual " + std::to_string(residual) + ")");
  return p;
}

Mat make_psd(const Mat& m, double hard_floor) {
  Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(sym)};
  Eigen::VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() >= 0.0) return sym;
  if (lam.minCoeff() < hard_floor)
    throw InferenceError("make_psd: covariance eigenvalue " + std::to_string(lam.minCoeff()) +
                         " below tolerated rounding floor");
  lam = lam.cwiseMax(0.0);
  Eigen::MatrixXd rebuilt =
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return Mat(0.5 * (rebuilt + rebuilt.transpose()));
}

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;  // empty or all -inf (or a stray +inf propagates)
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double log_gaussian_scalar(double e, double s) {
  if (!(s > 0.0) || !std::isfinite(s))
    throw InferenceError("log_gaussian_scalar: non-positive predictive variance");
  constexpr double log2pi = 1.8378770664093453;
  return -0.5 * (log2pi + std::log(s) + e * e / s);
}

double log_gaussian(const Vec& x, const Vec& mean, const Mat& cov) {
  const Eigen::Index n = x.size();
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw InferenceError("log_gaussian: covariance not positive definite");
  Vec d = x - mean;
  Vec sol = llt.solve(d);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  constexpr double log2pi = 1.8378770664093453;
  return -0.5 * (static_cast<double>(n) * log2pi + d.dot(sol)) - logdet;
}

}  // namespace gplfm
