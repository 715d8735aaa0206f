#include "gplfm/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gplfm/linalg.hpp"

namespace gplfm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Clips rounding-level negative eigenvalues that smoothing arithmetic can
// introduce; anything clearly negative is a defect and raises.
Mat psd_guard(const Mat& m) {
  Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig >= 0.0) return sym;
  const double scale = 1.0 + es.eigenvalues().cwiseAbs().maxCoeff();
  if (min_eig < -1e-6 * scale)
    throw InferenceError("covariance lost positive semidefiniteness");
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return Mat(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

double robust_log_gaussian(const Vec& x, const Vec& mean, const Mat& cov) {
  try {
    return log_gaussian(x, mean, cov);
  } catch (const InferenceError&) {
    Mat ridged = cov;
    ridged.diagonal().array() += 1e-12 * (1.0 + cov.diagonal().cwiseAbs().maxCoeff());
    return log_gaussian(x, mean, ridged);
  }
}

}  // namespace

MarkovSwitchModel markov_transition_matrix(int regime_count, double persistence) {
  if (regime_count < 1)
    throw std::invalid_argument("markov_transition_matrix: need at least one regime");
  MarkovSwitchModel m;
  m.regime_count = regime_count;
  m.persistence = persistence;
  if (regime_count == 1) {
    m.transition = Eigen::MatrixXd::Constant(1, 1, 1.0);
  } else {
    if (!(persistence > 0.0 && persistence < 1.0))
      throw std::invalid_argument("markov_transition_matrix: persistence must lie in (0, 1)");
    const int last = regime_count - 1;
    m.transition = Eigen::MatrixXd::Zero(regime_count, regime_count);
    for (int s = 0; s < last; ++s) {
      m.transition(s, s) = persistence;
      m.transition(s, last) = 1.0 - persistence;
    }
    // The final regime redistributes uniformly and never repeats.
    for (int s = 0; s < last; ++s) m.transition(last, s) = 1.0 / last;
  }
  m.log_transition = m.transition.array().log().matrix();
  return m;
}

void InferenceConfig::validate() const {
  if (filter_components < 1)
    throw std::invalid_argument("InferenceConfig: need at least one filter component");
  if (smoother_components < 1 || smoother_components > filter_components)
    throw std::invalid_argument(
        "InferenceConfig: smoother components must lie in [1, filter components]");
}

Gaussian moment_match(const std::vector<WeightedGaussian>& components) {
  if (components.empty())
    throw InferenceError("moment_match: empty mixture");
  std::vector<double> lws;
  lws.reserve(components.size());
  for (const auto& c : components) lws.push_back(c.log_weight);
  const double total = log_sum_exp(lws);
  if (!std::isfinite(total))
    throw InferenceError("moment_match: zero total weight");

  const Eigen::Index n = components.front().state.mean.size();
  Vec mean = Vec::Zero(n);
  for (const auto& c : components) mean += std::exp(c.log_weight - total) * c.state.mean;
  Mat cov = Mat::Zero(n, n);
  for (const auto& c : components) {
    const double w = std::exp(c.log_weight - total);
    const Vec d = c.state.mean - mean;
    cov += w * (c.state.cov + d * d.transpose());
  }
  return Gaussian{mean, psd_guard(cov)};
}

std::vector<WeightedGaussian> collapse_mixture(std::vector<WeightedGaussian> components,
                                               int target) {
  if (target < 1) throw std::invalid_argument("collapse_mixture: target must be positive");
  {
    std::vector<double> lws;
    for (const auto& c : components) lws.push_back(c.log_weight);
    if (!std::isfinite(log_sum_exp(lws)))
      throw InferenceError("collapse_mixture: zero total weight");
  }
  if (static_cast<int>(components.size()) <= target) return components;

  std::sort(components.begin(), components.end(),
            [](const WeightedGaussian& a, const WeightedGaussian& b) {
              return a.log_weight > b.log_weight;
            });
  std::vector<WeightedGaussian> out(components.begin(), components.begin() + (target - 1));
  std::vector<WeightedGaussian> tail(components.begin() + (target - 1), components.end());
  std::vector<double> tail_lws;
  for (const auto& c : tail) tail_lws.push_back(c.log_weight);
  const double tail_total = log_sum_exp(tail_lws);
  if (std::isfinite(tail_total)) {
    out.push_back(WeightedGaussian{tail_total, moment_match(tail)});
  } else {
    // The tail carries no mass; keep the best component instead to preserve size.
    out.push_back(tail.front());
  }
  return out;
}

Gaussian sticking_predict(const Gaussian& prev, const InputVec& u_prev,
                          const SystemParams& params, ExcitationKind excitation) {
  const Eigen::Index n = prev.mean.size();
  if (n < 3) throw std::invalid_argument("sticking_predict: need system and force states");
  double load = u_prev(0) * (excitation == ExcitationKind::DirectForce
                                 ? 1.0
                                 : params.stiffness);
  if (excitation == ExcitationKind::BaseMotion) load += params.damping * u_prev(1);

  Gaussian out;
  out.mean = Vec::Zero(n);
  out.mean(0) = prev.mean(0);
  out.mean(1) = 0.0;
  out.mean(2) = load - params.stiffness * prev.mean(0);
  // Extra latent-force states (if any) keep zero mean; covariance is carried
  // through unchanged.
  out.cov = prev.cov;
  return out;
}

namespace {

Gaussian predict_regime(const RegimeModelSet& models, int s, const Gaussian& prior,
                        const InputVec& u_prev) {
  const Regime& regime = models.regimes[s];
  if (regime.kind == RegimeKind::Sticking)
    return sticking_predict(prior, u_prev, models.params, models.excitation);
  return kalman_predict(regime.model, prior, u_prev);
}

void check_normalized(const GaussianMixtureBelief& belief, long step) {
  std::vector<double> lps;
  for (const auto& r : belief.regimes) lps.push_back(r.log_prob);
  const double total = log_sum_exp(lps);
  if (!std::isfinite(total) || std::abs(total) > 1e-8)
    throw InferenceError("regime probabilities not normalized", step);
  for (const auto& r : belief.regimes) {
    if (!std::isfinite(r.log_prob)) continue;  // zero-probability regime is fine
    std::vector<double> lws;
    for (const auto& c : r.components) lws.push_back(c.log_weight);
    const double w = log_sum_exp(lws);
    if (!std::isfinite(w) || std::abs(w) > 1e-8)
      throw InferenceError("mixture weights not normalized", step);
  }
}

void fill_regime_estimate(RegimeSequenceEstimate& est, const GaussianMixtureBelief& belief,
                          long t) {
  const int s_count = static_cast<int>(belief.regimes.size());
  int best = 0;
  double best_lp = kNegInf;
  for (int s = 0; s < s_count; ++s) {
    const double lp = belief.regimes[s].log_prob;
    est.probabilities(t, s) = std::isfinite(lp) ? std::exp(lp) : 0.0;
    if (lp > best_lp) {
      best_lp = lp;
      best = s;
    }
  }
  est.map_labels[t] = best;
}

}  // namespace

void GaussianMixtureBelief::functional_moments(const RowVec& a, double offset, double& mean,
                                               double& var) const {
  double m1 = 0.0, m2 = 0.0;
  for (const auto& r : regimes) {
    if (!std::isfinite(r.log_prob)) continue;
    for (const auto& c : r.components) {
      const double w = std::exp(r.log_prob + c.log_weight);
      const double mu = (a * c.state.mean)(0) + offset;
      const double v = (a * c.state.cov * a.transpose())(0);
      m1 += w * mu;
      m2 += w * (v + mu * mu);
    }
  }
  mean = m1;
  var = std::max(0.0, m2 - m1 * m1);
}

void GaussianMixtureBelief::state_moments(Vec& mean, Vec& var) const {
  const Eigen::Index n = regimes.front().components.front().state.mean.size();
  mean = Vec::Zero(n);
  Vec m2 = Vec::Zero(n);
  for (const auto& r : regimes) {
    if (!std::isfinite(r.log_prob)) continue;
    for (const auto& c : r.components) {
      const double w = std::exp(r.log_prob + c.log_weight);
      mean += w * c.state.mean;
      m2 += w * (c.state.cov.diagonal() + c.state.mean.cwiseProduct(c.state.mean));
    }
  }
  var = (m2 - mean.cwiseProduct(mean)).cwiseMax(0.0);
}

FilterResult adf_filter(const RegimeModelSet& models, const MarkovSwitchModel& markov,
                        const Eigen::MatrixXd& inputs, const Eigen::VectorXd& observations,
                        const InferenceConfig& config, const std::optional<Gaussian>& initial) {
  config.validate();
  const int s_count = models.count();
  if (markov.regime_count != s_count)
    throw std::invalid_argument("adf_filter: switch prior and regime set disagree");
  const long t_count = observations.size();
  if (t_count == 0) throw std::invalid_argument("adf_filter: empty observation sequence");
  if (inputs.rows() != t_count || inputs.cols() != models.n_inputs)
    throw std::invalid_argument("adf_filter: input series shape mismatch");

  Gaussian prior;
  if (initial) {
    prior = *initial;
  } else {
    prior.mean = Vec::Zero(models.state_dim);
    prior.cov = models.initial_covariance;
  }

  FilterResult result;
  result.beliefs.resize(t_count);
  result.regimes.probabilities.resize(t_count, s_count);
  result.regimes.map_labels.assign(t_count, 0);
  result.log_likelihood = 0.0;

  // t = 0: measurement update of the shared prior under a uniform regime prior.
  {
    GaussianMixtureBelief& belief = result.beliefs[0];
    belief.regimes.resize(s_count);
    const InputVec u0 = inputs.row(0).transpose();
    std::vector<double> joint(s_count);
    std::vector<UpdateResult> updates(s_count);
    for (int s = 0; s < s_count; ++s) {
      updates[s] = kalman_update(models.observation_model(s), prior, observations(0), u0);
      joint[s] = -std::log(static_cast<double>(s_count)) + updates[s].log_evidence;
    }
    const double step_evidence = log_sum_exp(joint);
    if (!std::isfinite(step_evidence))
      throw InferenceError("adf_filter: first observation has zero likelihood", 0);
    result.log_likelihood += step_evidence;
    for (int s = 0; s < s_count; ++s) {
      belief.regimes[s].log_prob = joint[s] - step_evidence;
      belief.regimes[s].components = {WeightedGaussian{0.0, updates[s].posterior}};
    }
    check_normalized(belief, 0);
    fill_regime_estimate(result.regimes, belief, 0);
  }

  struct Candidate {
    double log_post;   // includes the observation likelihood
    double log_prior;  // transition and source weights only
    Gaussian state;
  };
  std::vector<std::vector<Candidate>> cands(s_count);

  for (long t = 1; t < t_count; ++t) {
    const GaussianMixtureBelief& prev = result.beliefs[t - 1];
    GaussianMixtureBelief& belief = result.beliefs[t];
    belief.regimes.resize(s_count);
    const InputVec u_prev = inputs.row(t - 1).transpose();
    const InputVec u_now = inputs.row(t).transpose();

    std::vector<double> regime_totals(s_count, kNegInf);
    for (int s_new = 0; s_new < s_count; ++s_new) {
      auto& list = cands[s_new];
      list.clear();
      for (int s_old = 0; s_old < s_count; ++s_old) {
        const double ltrans = markov.log_transition(s_old, s_new);
        if (!std::isfinite(ltrans)) continue;
        const double lsrc = prev.regimes[s_old].log_prob;
        if (!std::isfinite(lsrc)) continue;
        for (const auto& comp : prev.regimes[s_old].components) {
          if (!std::isfinite(comp.log_weight)) continue;
          const Gaussian pred = predict_regime(models, s_new, comp.state, u_prev);
          const UpdateResult up =
              kalman_update(models.observation_model(s_new), pred, observations(t), u_now);
          const double lp = lsrc + comp.log_weight + ltrans;
          list.push_back(Candidate{lp + up.log_evidence, lp, up.posterior});
        }
      }
      std::vector<double> lws;
      lws.reserve(list.size());
      for (const auto& c : list) lws.push_back(c.log_post);
      regime_totals[s_new] = log_sum_exp(lws);
    }

    const double step_evidence = log_sum_exp(regime_totals);
    if (!std::isfinite(step_evidence))
      throw InferenceError("adf_filter: degenerate mixture weights", t);
    result.log_likelihood += step_evidence;

    for (int s_new = 0; s_new < s_count; ++s_new) {
      auto& list = cands[s_new];
      RegimeBelief& regime = belief.regimes[s_new];
      regime.log_prob = regime_totals[s_new] - step_evidence;
      std::vector<WeightedGaussian> comps;
      comps.reserve(list.size());
      if (std::isfinite(regime_totals[s_new])) {
        for (auto& c : list)
          comps.push_back(WeightedGaussian{c.log_post - regime_totals[s_new], std::move(c.state)});
      } else if (!list.empty()) {
        // Zero posterior mass in this regime at this step: keep the
        // prior-weighted moments so the structure stays well-formed.
        std::vector<double> lpriors;
        for (const auto& c : list) lpriors.push_back(c.log_prior);
        const double prior_total = log_sum_exp(lpriors);
        for (auto& c : list) {
          const double lw = std::isfinite(prior_total)
                                ? c.log_prior - prior_total
                                : -std::log(static_cast<double>(list.size()));
          comps.push_back(WeightedGaussian{lw, std::move(c.state)});
        }
      } else {
        throw InferenceError("adf_filter: regime has no admissible predecessors", t);
      }
      regime.components = collapse_mixture(std::move(comps), config.filter_components);
    }
    check_normalized(belief, t);
    fill_regime_estimate(result.regimes, belief, t);
  }
  return result;
}

SmootherResult ec_smoother(const FilterResult& filtered, const RegimeModelSet& models,
                           const MarkovSwitchModel& markov, const Eigen::MatrixXd& inputs,
                           const InferenceConfig& config) {
  config.validate();
  const int s_count = models.count();
  const long t_count = static_cast<long>(filtered.beliefs.size());
  if (t_count == 0) throw std::invalid_argument("ec_smoother: empty filter result");

  SmootherResult result;
  result.beliefs.resize(t_count);
  result.regimes.probabilities.resize(t_count, s_count);
  result.regimes.map_labels.assign(t_count, 0);

  // Final step: smoothing changes nothing beyond the mixture-size reduction.
  {
    GaussianMixtureBelief last = filtered.beliefs[t_count - 1];
    for (auto& regime : last.regimes)
      if (std::isfinite(regime.log_prob))
        regime.components = collapse_mixture(std::move(regime.components),
                                             config.smoother_components);
    result.beliefs[t_count - 1] = std::move(last);
    fill_regime_estimate(result.regimes, result.beliefs[t_count - 1], t_count - 1);
  }

  struct Branch {
    int s_old;
    double log_base;  // filtered regime + component weight + transition
    const WeightedGaussian* comp;
    Gaussian pred;
    Mat gain;
  };
  std::vector<Branch> branches;

  for (long t = t_count - 2; t >= 0; --t) {
    const GaussianMixtureBelief& filt = filtered.beliefs[t];
    const GaussianMixtureBelief& next = result.beliefs[t + 1];
    const InputVec u_t = inputs.row(t).transpose();

    std::vector<std::vector<WeightedGaussian>> grouped(s_count);
    for (int s1 = 0; s1 < s_count; ++s1) {
      const RegimeBelief& future = next.regimes[s1];
      if (!std::isfinite(future.log_prob)) continue;

      branches.clear();
      for (int s0 = 0; s0 < s_count; ++s0) {
        const double ltrans = markov.log_transition(s0, s1);
        if (!std::isfinite(ltrans)) continue;
        const double lsrc = filt.regimes[s0].log_prob;
        if (!std::isfinite(lsrc)) continue;
        for (const auto& comp : filt.regimes[s0].components) {
          if (!std::isfinite(comp.log_weight)) continue;
          Branch b;
          b.s_old = s0;
          b.log_base = lsrc + comp.log_weight + ltrans;
          b.comp = &comp;
          b.pred = predict_regime(models, s1, comp.state, u_t);
          if (models.regimes[s1].kind == RegimeKind::Sticking) {
            // The sticking step shifts the mean analytically and carries the
            // covariance, i.e. an identity map plus offset; its reversal gain
            // is the identity.
            b.gain = Mat::Identity(b.pred.cov.rows(), b.pred.cov.cols());
          } else {
            Eigen::LDLT<Mat> ldlt(b.pred.cov);
            if (ldlt.info() != Eigen::Success)
              throw InferenceError("ec_smoother: predicted covariance not factorizable", t);
            b.gain =
                ldlt.solve(Mat(models.regimes[s1].model.A * comp.state.cov)).transpose();
          }
          branches.push_back(std::move(b));
        }
      }
      if (branches.empty()) continue;

      for (const auto& jcomp : future.components) {
        if (!std::isfinite(jcomp.log_weight)) continue;
        std::vector<double> mix(branches.size());
        for (size_t b = 0; b < branches.size(); ++b)
          mix[b] = branches[b].log_base +
                   robust_log_gaussian(jcomp.state.mean, branches[b].pred.mean,
                                       branches[b].pred.cov);
        const double mix_total = log_sum_exp(mix);
        if (!std::isfinite(mix_total)) continue;

        const double l_future = future.log_prob + jcomp.log_weight;
        for (size_t b = 0; b < branches.size(); ++b) {
          const Branch& br = branches[b];
          WeightedGaussian wg;
          wg.log_weight = l_future + (mix[b] - mix_total);
          wg.state.mean = br.comp->state.mean + br.gain * (jcomp.state.mean - br.pred.mean);
          wg.state.cov = psd_guard(Mat(br.comp->state.cov +
                                       br.gain * (jcomp.state.cov - br.pred.cov) *
                                           br.gain.transpose()));
          grouped[br.s_old].push_back(std::move(wg));
        }
      }
    }

    GaussianMixtureBelief& belief = result.beliefs[t];
    belief.regimes.resize(s_count);
    std::vector<double> totals(s_count, kNegInf);
    for (int s0 = 0; s0 < s_count; ++s0) {
      std::vector<double> lws;
      for (const auto& c : grouped[s0]) lws.push_back(c.log_weight);
      totals[s0] = log_sum_exp(lws);
    }
    const double norm = log_sum_exp(totals);
    if (!std::isfinite(norm))
      throw InferenceError("ec_smoother: degenerate smoothed weights", t);

    for (int s0 = 0; s0 < s_count; ++s0) {
      RegimeBelief& regime = belief.regimes[s0];
      regime.log_prob = totals[s0] - norm;
      if (std::isfinite(totals[s0])) {
        for (auto& c : grouped[s0]) c.log_weight -= totals[s0];
        regime.components = collapse_mixture(std::move(grouped[s0]),
                                             config.smoother_components);
      } else {
        // Regime has no smoothed mass; carry the filtered moments.
        regime.components = filt.regimes[s0].components;
      }
    }
    check_normalized(belief, t);
    fill_regime_estimate(result.regimes, belief, t);
  }
  return result;
}

}  // namespace gplfm
