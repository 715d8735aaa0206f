#include "gplfm/ssm_builder.hpp"

#include <cmath>

#include "gplfm/linalg.hpp"

namespace gplfm {

void SystemParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::invalid_argument("SystemParams: mass must be positive");
  if (!(damping >= 0.0) || !std::isfinite(damping))
    throw std::invalid_argument("SystemParams: damping must be non-negative");
  if (!(stiffness >= 0.0) || !std::isfinite(stiffness))
    throw std::invalid_argument("SystemParams: stiffness must be non-negative");
}

ContinuousStateModel build_system_model(const SystemParams& params, ExcitationKind excitation) {
  params.validate();
  ContinuousStateModel m;
  m.drift = Mat::Zero(2, 2);
  m.drift(0, 1) = 1.0;
  m.drift(1, 0) = -params.stiffness / params.mass;
  m.drift(1, 1) = -params.damping / params.mass;

  const int nu = input_dim(excitation);
  m.input = InputMat::Zero(2, nu);
  if (excitation == ExcitationKind::DirectForce) {
    m.input(1, 0) = 1.0 / params.mass;
  } else {
    m.input(1, 0) = params.stiffness / params.mass;
    m.input(1, 1) = params.damping / params.mass;
  }

  m.noise_loading = Vec::Zero(2);
  m.spectral_density = 0.0;
  // The friction force always acts on the acceleration equation.
  m.force_loading = Vec::Zero(2);
  m.force_loading(1) = 1.0 / params.mass;
  return m;
}

ContinuousStateModel augment(const ContinuousStateModel& system, const LatentForceSSM& force) {
  const int ns = static_cast<int>(system.drift.rows());
  const int nf = force.state_dim;
  const int n = ns + nf;
  if (system.force_loading.size() != ns)
    throw std::invalid_argument("augment: system model has no force channel");
  if (n > kMaxStateDim) throw std::invalid_argument("augment: joint state dimension too large");

  ContinuousStateModel m;
  m.drift = Mat::Zero(n, n);
  m.drift.topLeftCorner(ns, ns) = system.drift;
  // Latent force enters with a negative sign: it opposes the applied load.
  m.drift.block(0, ns, ns, 1) = -system.force_loading;
  m.drift.bottomRightCorner(nf, nf) = force.drift;

  m.input = InputMat::Zero(n, system.input.cols());
  m.input.topRows(ns) = system.input;

  m.noise_loading = Vec::Zero(n);
  m.noise_loading.tail(nf) = force.noise_loading;
  m.spectral_density = force.spectral_density;
  m.force_loading.resize(0);
  return m;
}

Mat stationary_covariance(const ContinuousStateModel& model) {
  const Eigen::Index n = model.drift.rows();
  if (!is_hurwitz(model.drift))
    throw UnstableModelError("stationary_covariance: drift matrix is not Hurwitz");
  if (model.spectral_density == 0.0 || model.noise_loading.size() == 0)
    return Mat::Zero(n, n);
  Eigen::MatrixXd w = model.spectral_density *
                      (Eigen::VectorXd(model.noise_loading) *
                       Eigen::VectorXd(model.noise_loading).transpose());
  return Mat(solve_lyapunov(Eigen::MatrixXd(model.drift), w));
}

namespace {

void fill_observation(DiscreteLGSSM& d, int n, const ObservationKind& obs,
                      const SystemParams& params, ExcitationKind excitation) {
  const int nu = input_dim(excitation);
  d.C = RowVec::Zero(n);
  d.D = InputRow::Zero(nu);
  if (obs.quantity == ObservedQuantity::Displacement) {
    d.C(0) = 1.0;
  } else {
    // Acceleration as a linear readout of the balance equation.
    params.validate();
    if (n < 3)
      throw std::invalid_argument("discretize: acceleration output needs system + force states");
    d.C(0) = -params.stiffness / params.mass;
    d.C(1) = -params.damping / params.mass;
    d.C(2) = -1.0 / params.mass;
    if (excitation == ExcitationKind::DirectForce) {
      d.D(0) = 1.0 / params.mass;
    } else {
      d.D(0) = params.stiffness / params.mass;
      d.D(1) = params.damping / params.mass;
    }
  }
  if (!(obs.noise_variance >= 0.0) || !std::isfinite(obs.noise_variance))
    throw std::invalid_argument("discretize: observation noise variance must be non-negative");
  d.R = obs.noise_variance;
}

}  // namespace

std::pair<Mat, InputMat> discretize_transition(const ContinuousStateModel& model, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be positive");
  const int n = static_cast<int>(model.drift.rows());
  const int nu = static_cast<int>(model.input.cols());
  if (nu == 0) return {Mat(expm(Eigen::MatrixXd(model.drift) * dt)), InputMat::Zero(n, 0)};
  // Zero-order hold on the input: exp([[Ac, Bc], [0, 0]] dt) = [[A, B], [0, I]].
  // The block form also covers singular drift, where A_c^{-1} (A - I) B_c
  // would be unavailable.
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n + nu, n + nu);
  block.topLeftCorner(n, n) = model.drift;
  block.topRightCorner(n, nu) = model.input;
  Eigen::MatrixXd eblock = expm(block * dt);
  return {Mat(eblock.topLeftCorner(n, n)), InputMat(eblock.topRightCorner(n, nu))};
}

DiscreteLGSSM discretize(const ContinuousStateModel& model, double dt,
                         const ObservationKind& obs, const SystemParams& params,
                         ExcitationKind excitation) {
  const int n = static_cast<int>(model.drift.rows());

  DiscreteLGSSM d;
  d.dt = dt;
  std::tie(d.A, d.B) = discretize_transition(model, dt);

  const Mat pinf = stationary_covariance(model);
  d.Q = make_psd(Mat(pinf - d.A * pinf * d.A.transpose()));

  fill_observation(d, n, obs, params, excitation);
  return d;
}

DiscreteLGSSM build_resetting_model(const ContinuousStateModel& system, int force_dim,
                                    double dt, double reset_prior_var,
                                    const ObservationKind& obs, const SystemParams& params,
                                    ExcitationKind excitation) {
  if (!(reset_prior_var > 0.0))
    throw std::invalid_argument("build_resetting_model: reset prior variance must be positive");
  const int ns = static_cast<int>(system.drift.rows());
  const int n = ns + force_dim;
  const int nu = static_cast<int>(system.input.cols());

  DiscreteLGSSM d;
  d.dt = dt;
  d.A = Mat::Zero(n, n);
  d.B = InputMat::Zero(n, nu);
  auto [a_sys, b_sys] = discretize_transition(system, dt);
  d.A.topLeftCorner(ns, ns) = a_sys;
  d.B.topRows(ns) = b_sys;

  // Force block of A stays zero: the reset forgets the previous force and
  // redraws it from N(0, reset_prior_var). System states evolve force-free
  // and carry no process noise of their own, so their stationary-difference
  // noise block is identically zero.
  d.Q = Mat::Zero(n, n);
  d.Q.bottomRightCorner(force_dim, force_dim) =
      Mat::Identity(force_dim, force_dim) * reset_prior_var;

  fill_observation(d, n, obs, params, excitation);
  return d;
}

const DiscreteLGSSM& RegimeModelSet::observation_model(int s) const {
  // The observation physics is regime independent; the sticking regime reuses
  // the sliding model's C, D, R.
  if (regimes[s].kind == RegimeKind::Sticking) return regimes[0].model;
  return regimes[s].model;
}

RegimeModelSet assemble_regimes(const SystemParams& params, ExcitationKind excitation,
                                const KernelSpec& kernel, double dt,
                                const ObservationKind& obs,
                                std::optional<double> reset_prior_var, bool stick_slip) {
  if (stick_slip && !reset_prior_var)
    throw std::invalid_argument("assemble_regimes: stick-slip layout needs a reset prior variance");
  if (!(obs.noise_variance > 0.0))
    throw std::invalid_argument("assemble_regimes: observation noise variance must be positive");

  const ContinuousStateModel system = build_system_model(params, excitation);
  const LatentForceSSM force = matern_half_to_ssm(kernel);
  const ContinuousStateModel joint = augment(system, force);

  RegimeModelSet set;
  set.params = params;
  set.excitation = excitation;
  set.state_dim = static_cast<int>(joint.drift.rows());
  set.n_inputs = input_dim(excitation);
  set.dt = dt;
  set.initial_covariance = stationary_covariance(joint);

  DiscreteLGSSM sliding = discretize(joint, dt, obs, params, excitation);
  set.regimes.push_back({RegimeKind::Sliding, sliding});

  if (stick_slip) {
    DiscreteLGSSM stick_obs;  // carries only the shared observation model
    stick_obs.dt = dt;
    stick_obs.C = sliding.C;
    stick_obs.D = sliding.D;
    stick_obs.R = sliding.R;
    set.sticking_index = set.count();
    set.regimes.push_back({RegimeKind::Sticking, stick_obs});
  }
  if (reset_prior_var) {
    set.resetting_index = set.count();
    set.regimes.push_back({RegimeKind::Resetting,
                           build_resetting_model(system, force.state_dim, dt, *reset_prior_var,
                                                 obs, params, excitation)});
  }
  return set;
}

}  // namespace gplfm
