#pragma once

// Reference implementations used only by tests. Each is written along an
// independent route from the library code it checks (series expansions,
// quadrature, dense-matrix batch formulas, exhaustive enumeration), so an
// agreement failure points at a real defect rather than a shared mistake.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gplfm/kalman.hpp"
#include "gplfm/ssm_builder.hpp"

namespace oracle {

// Matrix exponential by argument scaling plus a plain Taylor series. Slow and
// simple on purpose; independent of Pade-based implementations.
inline Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::MatrixXd scaled = a;
  while (norm > 0.25) {
    scaled *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 30; ++k) {
    term = (term * scaled / static_cast<double>(k)).eval();
    result += term;
    if (term.norm() < 1e-18 * result.norm()) break;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

// Process-noise covariance integral int_0^dt e^{A s} L q L' e^{A' s} ds by
// Gauss-Legendre quadrature with interval splitting.
inline Eigen::MatrixXd process_noise_quadrature(const Eigen::MatrixXd& a,
                                                const Eigen::VectorXd& loading,
                                                double spectral_density, double dt,
                                                int panels = 16) {
  // 10-point Gauss-Legendre nodes/weights on [-1, 1].
  static const double nodes[10] = {-0.9739065285171717, -0.8650633666889845,
                                   -0.6794095682990244, -0.4333953941292472,
                                   -0.1488743389816312, 0.1488743389816312,
                                   0.4333953941292472,  0.6794095682990244,
                                   0.8650633666889845,  0.9739065285171717};
  static const double weights[10] = {0.0666713443086881, 0.1494513491505806,
                                     0.2190863625159820, 0.2692667193099963,
                                     0.2955242247147529, 0.2955242247147529,
                                     0.2692667193099963, 0.2190863625159820,
                                     0.1494513491505806, 0.0666713443086881};
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd w = spectral_density * (loading * loading.transpose());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  const double h = dt / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int i = 0; i < 10; ++i) {
      const double s = mid + 0.5 * h * nodes[i];
      const Eigen::MatrixXd e = expm_taylor(a * s);
      q += (0.5 * h * weights[i]) * (e * w * e.transpose());
    }
  }
  return q;
}

// Random Hurwitz drift with a driven last state, shaped like the augmented
// models under test (chain structure is not required, just stability).
inline Eigen::MatrixXd random_hurwitz(int n, std::mt19937_64& rng, double min_decay = 0.2) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = gauss(rng);
  // Shift the spectrum left of the imaginary axis.
  Eigen::VectorXcd ev = m.eigenvalues();
  double max_re = ev.real().maxCoeff();
  m -= (max_re + min_decay + std::abs(gauss(rng))) * Eigen::MatrixXd::Identity(n, n);
  return m;
}

// Symmetric square root with negative eigenvalues clipped, for sampling from
// possibly singular covariances.
inline Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Batch (whole-trajectory) treatment of a linear-Gaussian state-space model.
// Builds the joint Gaussian of all states and observations with dense matrix
// algebra -- no recursion, no Riccati steps -- so it cross-checks both the
// sequential filter's evidence and the smoother's marginals.
struct BatchLGSSMResult {
  double log_evidence;
  Eigen::MatrixXd smoothed_mean;  // T x n
  Eigen::MatrixXd smoothed_var;   // T x n, marginal variances
  std::vector<Eigen::MatrixXd> smoothed_cov;
};

inline BatchLGSSMResult batch_lgssm(const gplfm::DiscreteLGSSM& model,
                                    const Eigen::VectorXd& mean0, const Eigen::MatrixXd& cov0,
                                    const Eigen::MatrixXd& inputs, const Eigen::VectorXd& y) {
  const Eigen::Index t_count = y.size();
  const Eigen::Index n = model.A.rows();
  const Eigen::MatrixXd a = model.A;
  const Eigen::MatrixXd b = model.B;
  const Eigen::MatrixXd q = model.Q;
  const Eigen::RowVectorXd c = model.C;
  const Eigen::RowVectorXd d = model.D;

  // Stacked state mean and full state covariance over all steps.
  Eigen::VectorXd xbar(t_count * n);
  xbar.segment(0, n) = mean0;
  for (Eigen::Index t = 1; t < t_count; ++t)
    xbar.segment(t * n, n) =
        a * xbar.segment((t - 1) * n, n) + b * inputs.row(t - 1).transpose();

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(t_count * n, t_count * n);
  sigma.block(0, 0, n, n) = cov0;
  for (Eigen::Index t = 1; t < t_count; ++t)
    sigma.block(t * n, t * n, n, n) =
        a * sigma.block((t - 1) * n, (t - 1) * n, n, n) * a.transpose() + q;
  // Cross blocks: cov(x_s, x_t) = cov(x_s, x_{t-1}) A' for s < t.
  for (Eigen::Index s = 0; s < t_count; ++s)
    for (Eigen::Index t = s + 1; t < t_count; ++t) {
      sigma.block(s * n, t * n, n, n) = sigma.block(s * n, (t - 1) * n, n, n) * a.transpose();
      sigma.block(t * n, s * n, n, n) = sigma.block(s * n, t * n, n, n).transpose();
    }

  // Observation moments and state-observation cross covariance.
  Eigen::VectorXd ybar(t_count);
  for (Eigen::Index t = 0; t < t_count; ++t)
    ybar(t) = (c * xbar.segment(t * n, n))(0) + (d * inputs.row(t).transpose())(0);
  Eigen::MatrixXd sigma_xy(t_count * n, t_count);
  for (Eigen::Index t = 0; t < t_count; ++t)
    sigma_xy.col(t) = sigma.middleCols(t * n, n) * c.transpose();
  Eigen::MatrixXd s_yy(t_count, t_count);
  for (Eigen::Index t = 0; t < t_count; ++t)
    s_yy.col(t) = (c * sigma_xy.col(t).reshaped(n, t_count)).transpose();
  s_yy = 0.5 * (s_yy + s_yy.transpose());
  s_yy.diagonal().array() += model.R;

  Eigen::LLT<Eigen::MatrixXd> llt(s_yy);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("batch_lgssm: observation covariance not positive definite");
  const Eigen::VectorXd resid = y - ybar;
  const Eigen::VectorXd sol = llt.solve(resid);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < t_count; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  constexpr double log2pi = 1.8378770664093453;
  BatchLGSSMResult out;
  out.log_evidence =
      -0.5 * (static_cast<double>(t_count) * log2pi + resid.dot(sol)) - logdet;

  const Eigen::MatrixXd gain = llt.solve(sigma_xy.transpose()).transpose();
  const Eigen::VectorXd xpost = xbar + gain * resid;
  out.smoothed_mean.resize(t_count, n);
  out.smoothed_var.resize(t_count, n);
  out.smoothed_cov.resize(t_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    out.smoothed_mean.row(t) = xpost.segment(t * n, n).transpose();
    Eigen::MatrixXd cov = sigma.block(t * n, t * n, n, n) -
                          gain.middleRows(t * n, n) * sigma_xy.middleRows(t * n, n).transpose();
    cov = 0.5 * (cov + cov.transpose());
    out.smoothed_cov[t] = cov;
    out.smoothed_var.row(t) = cov.diagonal().transpose();
  }
  return out;
}

// Exact inference for a switching linear model by exhausting every regime
// sequence with nonzero prior probability: each surviving branch keeps its own
// Kalman chain, and smoothed quantities come from per-sequence RTS passes
// mixed by exact posterior sequence weights. Feasible only for tiny T.
struct ExactSwitchingResult {
  double log_evidence;
  Eigen::MatrixXd filtered_marginals;  // T x S
  Eigen::MatrixXd smoothed_marginals;  // T x S
  Eigen::MatrixXd smoothed_mean;       // T x n
  Eigen::MatrixXd smoothed_var;        // T x n
};

inline ExactSwitchingResult exact_switching(const std::vector<gplfm::DiscreteLGSSM>& models,
                                            const Eigen::MatrixXd& transition,
                                            const Eigen::MatrixXd& inputs,
                                            const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& mean0,
                                            const Eigen::MatrixXd& cov0) {
  const Eigen::Index t_count = y.size();
  const int s_count = static_cast<int>(models.size());
  const Eigen::Index n = models.front().A.rows();

  struct Branch {
    double lw;
    std::vector<int> labels;
    std::vector<gplfm::Gaussian> filtered;
  };
  std::vector<Branch> branches;
  for (int s = 0; s < s_count; ++s) {
    gplfm::UpdateResult up = gplfm::kalman_update(
        models[s], gplfm::Gaussian{mean0, cov0}, y(0), inputs.row(0).transpose());
    branches.push_back(Branch{-std::log(double(s_count)) + up.log_evidence,
                              {s},
                              {up.posterior}});
  }

  ExactSwitchingResult out;
  out.filtered_marginals = Eigen::MatrixXd::Zero(t_count, s_count);
  auto record_filtered = [&](Eigen::Index t) {
    double maxlw = -std::numeric_limits<double>::infinity();
    for (const auto& br : branches) maxlw = std::max(maxlw, br.lw);
    double total = 0.0;
    std::vector<double> w(branches.size());
    for (size_t i = 0; i < branches.size(); ++i) {
      w[i] = std::exp(branches[i].lw - maxlw);
      total += w[i];
    }
    for (size_t i = 0; i < branches.size(); ++i)
      out.filtered_marginals(t, branches[i].labels.back()) += w[i] / total;
  };
  record_filtered(0);

  for (Eigen::Index t = 1; t < t_count; ++t) {
    std::vector<Branch> next;
    for (const auto& br : branches) {
      const int s_old = br.labels.back();
      for (int s_new = 0; s_new < s_count; ++s_new) {
        if (transition(s_old, s_new) <= 0.0) continue;
        gplfm::Gaussian pred = gplfm::kalman_predict(models[s_new], br.filtered.back(),
                                                     inputs.row(t - 1).transpose());
        gplfm::UpdateResult up =
            gplfm::kalman_update(models[s_new], pred, y(t), inputs.row(t).transpose());
        Branch nb = br;
        nb.lw += std::log(transition(s_old, s_new)) + up.log_evidence;
        nb.labels.push_back(s_new);
        nb.filtered.push_back(up.posterior);
        next.push_back(std::move(nb));
      }
    }
    branches = std::move(next);
    record_filtered(t);
  }

  std::vector<double> lws;
  for (const auto& br : branches) lws.push_back(br.lw);
  const double maxlw = *std::max_element(lws.begin(), lws.end());
  double total = 0.0;
  for (double lw : lws) total += std::exp(lw - maxlw);
  out.log_evidence = maxlw + std::log(total);

  out.smoothed_marginals = Eigen::MatrixXd::Zero(t_count, s_count);
  out.smoothed_mean = Eigen::MatrixXd::Zero(t_count, n);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(t_count, n);
  for (const auto& br : branches) {
    const double w = std::exp(br.lw - out.log_evidence);
    std::vector<gplfm::Gaussian> smoothed(t_count);
    smoothed[t_count - 1] = br.filtered[t_count - 1];
    for (Eigen::Index t = t_count - 2; t >= 0; --t)
      smoothed[t] = gplfm::rts_step(models[br.labels[t + 1]], br.filtered[t], smoothed[t + 1],
                                    inputs.row(t).transpose());
    for (Eigen::Index t = 0; t < t_count; ++t) {
      out.smoothed_marginals(t, br.labels[t]) += w;
      out.smoothed_mean.row(t) += w * smoothed[t].mean.transpose();
      second.row(t) +=
          w * (smoothed[t].cov.diagonal() + smoothed[t].mean.cwiseProduct(smoothed[t].mean))
                  .transpose();
    }
  }
  out.smoothed_var = (second - out.smoothed_mean.cwiseProduct(out.smoothed_mean)).cwiseMax(0.0);
  return out;
}

// Samples one trajectory from a switching linear model; regime sequence drawn
// from the transition rows, first regime uniform.
struct SwitchingSample {
  std::vector<int> labels;
  Eigen::MatrixXd states;  // T x n
  Eigen::VectorXd y;
};

inline SwitchingSample sample_switching(const std::vector<gplfm::DiscreteLGSSM>& models,
                                        const Eigen::MatrixXd& transition,
                                        const Eigen::MatrixXd& inputs,
                                        const Eigen::VectorXd& mean0,
                                        const Eigen::MatrixXd& cov0, std::mt19937_64& rng) {
  const Eigen::Index t_count = inputs.rows();
  const Eigen::Index n = models.front().A.rows();
  const int s_count = static_cast<int>(models.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](Eigen::Index dim) {
    Eigen::VectorXd z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z(i) = gauss(rng);
    return z;
  };

  SwitchingSample out;
  out.labels.resize(t_count);
  out.states.resize(t_count, n);
  out.y.resize(t_count);
  out.labels[0] = static_cast<int>(unif(rng) * s_count) % s_count;
  Eigen::VectorXd x = mean0 + sqrt_psd(cov0) * draw(n);
  std::vector<Eigen::MatrixXd> q_sqrt(models.size());
  for (size_t s = 0; s < models.size(); ++s) q_sqrt[s] = sqrt_psd(models[s].Q);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (t > 0) {
      double u = unif(rng);
      int s_new = s_count - 1;
      for (int s = 0; s < s_count; ++s) {
        u -= transition(out.labels[t - 1], s);
        if (u <= 0.0) {
          s_new = s;
          break;
        }
      }
      out.labels[t] = s_new;
      const auto& m = models[s_new];
      x = (m.A * x + m.B * inputs.row(t - 1).transpose()).eval();
      x += q_sqrt[s_new] * draw(n);
    }
    out.states.row(t) = x.transpose();
    const auto& m = models[out.labels[t]];
    out.y(t) = (m.C * x)(0) + (m.D * inputs.row(t).transpose())(0) +
               std::sqrt(m.R) * gauss(rng);
  }
  return out;
}

}  // namespace oracle
