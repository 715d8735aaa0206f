#include <doctest.h>

#include <cmath>
#include <random>

#include "gplfm/linalg.hpp"
#include "gplfm/ssm_builder.hpp"
#include "support/oracles.hpp"

using namespace gplfm;

namespace {
const SystemParams kOscillator{1.0, 5.0, 500.0};
}

TEST_CASE("direct-force system matrices") {
  ContinuousStateModel m = build_system_model(kOscillator, ExcitationKind::DirectForce);
  CHECK(m.drift(0, 0) == 0.0);
  CHECK(m.drift(0, 1) == 1.0);
  CHECK(m.drift(1, 0) == doctest::Approx(-500.0));
  CHECK(m.drift(1, 1) == doctest::Approx(-5.0));
  CHECK(m.input.rows() == 2);
  CHECK(m.input.cols() == 1);
  CHECK(m.input(0, 0) == 0.0);
  CHECK(m.input(1, 0) == doctest::Approx(1.0));
  CHECK(m.force_loading(1) == doctest::Approx(1.0));
}

TEST_CASE("base-motion system matrices use positive input gains") {
  SystemParams rig{3.0799, 0.6691, 1191.0};
  ContinuousStateModel m = build_system_model(rig, ExcitationKind::BaseMotion);
  CHECK(m.input.cols() == 2);
  CHECK(m.input(0, 0) == 0.0);
  CHECK(m.input(0, 1) == 0.0);
  CHECK(m.input(1, 0) == doctest::Approx(1191.0 / 3.0799).epsilon(1e-12));
  CHECK(m.input(1, 1) == doctest::Approx(0.6691 / 3.0799).epsilon(1e-12));
  CHECK(m.force_loading(1) == doctest::Approx(1.0 / 3.0799).epsilon(1e-12));
}

TEST_CASE("augmented model wires the force against the load") {
  KernelSpec kernel(2.0, 0.5);
  ContinuousStateModel sys = build_system_model(kOscillator, ExcitationKind::DirectForce);
  ContinuousStateModel joint = augment(sys, matern_half_to_ssm(kernel));
  REQUIRE(joint.drift.rows() == 3);
  // Top-left block is the system, top-right column couples the force in
  // negatively, bottom row is the force SDE.
  CHECK(joint.drift(0, 2) == 0.0);
  CHECK(joint.drift(1, 2) == doctest::Approx(-1.0));
  CHECK(joint.drift(2, 0) == 0.0);
  CHECK(joint.drift(2, 1) == 0.0);
  CHECK(joint.drift(2, 2) == doctest::Approx(-2.0));
  CHECK(joint.input(1, 0) == doctest::Approx(1.0));
  CHECK(joint.input(2, 0) == 0.0);
  CHECK(joint.noise_loading(2) == doctest::Approx(1.0));
  CHECK(joint.spectral_density == doctest::Approx(8.0));
  CHECK(joint.force_loading.size() == 0);
}

TEST_CASE("stationary covariance solves the Lyapunov equation") {
  KernelSpec kernel(4.0, 0.3);
  ContinuousStateModel joint =
      augment(build_system_model(kOscillator, ExcitationKind::DirectForce),
              matern_half_to_ssm(kernel));
  Mat p = stationary_covariance(joint);
  // Force marginal equals the kernel variance.
  CHECK(p(2, 2) == doctest::Approx(4.0).epsilon(1e-9));
  Eigen::MatrixXd w = joint.spectral_density * Eigen::VectorXd(joint.noise_loading) *
                      Eigen::VectorXd(joint.noise_loading).transpose();
  Eigen::MatrixXd residual = joint.drift * p + p * joint.drift.transpose() + w;
  CHECK(residual.norm() <= 1e-10 * w.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(p)};
  CHECK(es.eigenvalues().minCoeff() >= 0.0);
}

TEST_CASE("marginally stable models are rejected") {
  SystemParams undamped{1.0, 0.0, 500.0};
  ContinuousStateModel sys = build_system_model(undamped, ExcitationKind::DirectForce);
  CHECK_THROWS_AS(stationary_covariance(sys), UnstableModelError);
}

TEST_CASE("transition matrix approaches identity plus drift for small steps") {
  KernelSpec kernel(1.0, 0.2);
  ContinuousStateModel joint =
      augment(build_system_model(kOscillator, ExcitationKind::DirectForce),
              matern_half_to_ssm(kernel));
  const double dt = 1e-6;
  auto [a, b] = discretize_transition(joint, dt);
  Eigen::MatrixXd first_order =
      Eigen::MatrixXd::Identity(3, 3) + Eigen::MatrixXd(joint.drift) * dt;
  const double drift_norm = joint.drift.norm();
  CHECK((Eigen::MatrixXd(a) - first_order).norm() <= drift_norm * drift_norm * dt * dt);
  CHECK(b.rows() == 3);
}

TEST_CASE("held-input matrix matches the inverse-drift formula when available") {
  KernelSpec kernel(2.0, 0.5);
  ContinuousStateModel joint =
      augment(build_system_model(kOscillator, ExcitationKind::DirectForce),
              matern_half_to_ssm(kernel));
  const double dt = 0.002;
  auto [a, b] = discretize_transition(joint, dt);
  Eigen::MatrixXd ainv_form = Eigen::MatrixXd(joint.drift).colPivHouseholderQr().solve(
      (Eigen::MatrixXd(a) - Eigen::MatrixXd::Identity(3, 3)) * Eigen::MatrixXd(joint.input));
  CHECK((Eigen::MatrixXd(b) - ainv_form).norm() <= 1e-12 * ainv_form.norm());
}

TEST_CASE("held-input matrix is exact for singular drift") {
  // Kinematic integrator: drift has a zero eigenvalue, so the inverse-drift
  // shortcut does not exist; the block exponential must still match direct
  // quadrature of the input response.
  ContinuousStateModel m;
  m.drift = Mat::Zero(2, 2);
  m.drift(0, 1) = 1.0;
  m.input = InputMat::Zero(2, 1);
  m.input(1, 0) = 1.0;
  m.noise_loading = Vec::Zero(2);
  m.spectral_density = 0.0;
  const double dt = 0.1;
  auto [a, b] = discretize_transition(m, dt);
  CHECK(a(0, 1) == doctest::Approx(dt).epsilon(1e-14));
  // int_0^dt exp(Ac s) Bc ds = [dt^2/2; dt] for this model.
  CHECK(b(0, 0) == doctest::Approx(dt * dt / 2.0).epsilon(1e-12));
  CHECK(b(1, 0) == doctest::Approx(dt).epsilon(1e-12));
}

TEST_CASE("process noise matches its defining integral on random stable models") {
  std::mt19937_64 rng(7151);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(unif(rng) * 3.0);  // 2..4 states
    ContinuousStateModel m;
    m.drift = Mat(oracle::random_hurwitz(n, rng));
    m.input = InputMat::Zero(n, 0);
    Eigen::VectorXd loading = Eigen::VectorXd::Zero(n);
    loading(n - 1) = 1.0;
    if (unif(rng) < 0.3) loading(0) = 0.5;  // occasionally drive two states
    m.noise_loading = Vec(loading);
    m.spectral_density = 0.1 + 3.0 * unif(rng);
    const double dt = 0.01 + 0.3 * unif(rng);

    DiscreteLGSSM d = discretize(m, dt, ObservationKind{ObservedQuantity::Displacement, 1e-4},
                                 kOscillator, ExcitationKind::DirectForce);
    Eigen::MatrixXd q_ref = oracle::process_noise_quadrature(
        Eigen::MatrixXd(m.drift), loading, m.spectral_density, dt);
    INFO("trial ", trial, " n ", n, " dt ", dt);
    CHECK((Eigen::MatrixXd(d.Q) - q_ref).norm() <= 1e-8 * q_ref.norm());
  }
}

TEST_CASE("process noise agrees with fine Euler-Maruyama simulation") {
  KernelSpec kernel(2.0, 0.4);
  ContinuousStateModel joint =
      augment(build_system_model(SystemParams{1.0, 5.0, 100.0}, ExcitationKind::DirectForce),
              matern_half_to_ssm(kernel));
  const double dt = 0.05;
  DiscreteLGSSM d = discretize(joint, dt, ObservationKind{ObservedQuantity::Displacement, 1e-4},
                               kOscillator, ExcitationKind::DirectForce);

  const int paths = 100000;
  const int substeps = 1000;
  const double h = dt / substeps;
  const double noise_sd = std::sqrt(joint.spectral_density * h);
  std::mt19937_64 rng(991);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Matrix3d sum_outer = Eigen::Matrix3d::Zero();
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d drift = Eigen::MatrixXd(joint.drift);
  for (int p = 0; p < paths; ++p) {
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    for (int s = 0; s < substeps; ++s) {
      Eigen::Vector3d dx = drift * x * h;
      dx(2) += noise_sd * gauss(rng);
      x += dx;
    }
    sum += x;
    sum_outer += x * x.transpose();
  }
  Eigen::Vector3d mean = sum / paths;
  Eigen::Matrix3d cov = sum_outer / paths - mean * mean.transpose();
  CHECK((cov - Eigen::Matrix3d(Eigen::MatrixXd(d.Q))).norm() <= 0.02 * d.Q.norm());
}

TEST_CASE("observation rows for both measured quantities") {
  KernelSpec kernel(1.0, 1.0);
  ContinuousStateModel joint =
      augment(build_system_model(kOscillator, ExcitationKind::DirectForce),
              matern_half_to_ssm(kernel));
  DiscreteLGSSM disp = discretize(joint, 0.002, ObservationKind{ObservedQuantity::Displacement, 1e-10},
                                  kOscillator, ExcitationKind::DirectForce);
  CHECK(disp.C(0) == 1.0);
  CHECK(disp.C(1) == 0.0);
  CHECK(disp.C(2) == 0.0);
  CHECK(disp.D(0) == 0.0);
  CHECK(disp.R == doctest::Approx(1e-10));

  DiscreteLGSSM acc = discretize(joint, 0.002, ObservationKind{ObservedQuantity::Acceleration, 1e-4},
                                 kOscillator, ExcitationKind::DirectForce);
  CHECK(acc.C(0) == doctest::Approx(-500.0));
  CHECK(acc.C(1) == doctest::Approx(-5.0));
  CHECK(acc.C(2) == doctest::Approx(-1.0));
  CHECK(acc.D(0) == doctest::Approx(1.0));

  SystemParams rig{3.0799, 0.6691, 1191.0};
  ContinuousStateModel base_joint =
      augment(build_system_model(rig, ExcitationKind::BaseMotion), matern_half_to_ssm(kernel));
  DiscreteLGSSM acc_base = discretize(base_joint, 0.002,
                                      ObservationKind{ObservedQuantity::Acceleration, 1e-4},
                                      rig, ExcitationKind::BaseMotion);
  CHECK(acc_base.D(0) == doctest::Approx(1191.0 / 3.0799));
  CHECK(acc_base.D(1) == doctest::Approx(0.6691 / 3.0799));
}

TEST_CASE("resetting model structure") {
  ContinuousStateModel sys = build_system_model(kOscillator, ExcitationKind::DirectForce);
  const double dt = 0.002;
  const double p0 = 0.05;
  DiscreteLGSSM reset = build_resetting_model(sys, 1, dt, p0,
                                              ObservationKind{ObservedQuantity::Displacement, 1e-10},
                                              kOscillator, ExcitationKind::DirectForce);
  auto [a_sys, b_sys] = discretize_transition(sys, dt);
  CHECK((reset.A.topLeftCorner(2, 2) - a_sys).norm() == doctest::Approx(0.0));
  // Coupling rows/columns between system and force states are exactly zero.
  CHECK(reset.A(0, 2) == 0.0);
  CHECK(reset.A(1, 2) == 0.0);
  CHECK(reset.A(2, 0) == 0.0);
  CHECK(reset.A(2, 1) == 0.0);
  CHECK(reset.A(2, 2) == 0.0);
  CHECK(reset.Q.topLeftCorner(2, 2).norm() == 0.0);
  CHECK(reset.Q(2, 2) == doctest::Approx(p0));
  CHECK(reset.Q(0, 2) == 0.0);
  CHECK((reset.B.topRows(2) - b_sys).norm() == doctest::Approx(0.0));
  CHECK(reset.B(2, 0) == 0.0);
}

TEST_CASE("reset leaves a resting state in place when the system has no restoring terms") {
  SystemParams free_mass{2.0, 0.0, 0.0};
  ContinuousStateModel sys = build_system_model(free_mass, ExcitationKind::DirectForce);
  DiscreteLGSSM reset = build_resetting_model(sys, 1, 0.01, 0.05,
                                              ObservationKind{ObservedQuantity::Displacement, 1e-10},
                                              free_mass, ExcitationKind::DirectForce);
  Eigen::Vector3d mean(0.7, 0.0, 3.0);  // at rest, nonzero force
  Eigen::Vector3d next = Eigen::MatrixXd(reset.A) * mean;  // zero input
  CHECK(next(0) == doctest::Approx(0.7));
  CHECK(next(1) == doctest::Approx(0.0));
  CHECK(next(2) == 0.0);  // force mean resets to zero
}

TEST_CASE("regime assembly layouts") {
  KernelSpec kernel(1.0, 0.5);
  ObservationKind obs{ObservedQuantity::Displacement, 1e-10};

  RegimeModelSet full = assemble_regimes(kOscillator, ExcitationKind::DirectForce, kernel,
                                         0.002, obs, 0.05, true);
  REQUIRE(full.count() == 3);
  CHECK(full.regimes[0].kind == RegimeKind::Sliding);
  CHECK(full.regimes[1].kind == RegimeKind::Sticking);
  CHECK(full.regimes[2].kind == RegimeKind::Resetting);
  CHECK(full.sticking_index == 1);
  CHECK(full.resetting_index == 2);
  CHECK(full.state_dim == 3);
  // Shared observation model across regimes.
  for (int s = 0; s < 3; ++s) {
    CHECK((full.observation_model(s).C - full.regimes[0].model.C).norm() == 0.0);
    CHECK(full.observation_model(s).R == full.regimes[0].model.R);
  }
  // Initial covariance is the sliding model's stationary covariance.
  CHECK(full.initial_covariance(2, 2) == doctest::Approx(1.0).epsilon(1e-9));

  RegimeModelSet plain = assemble_regimes(kOscillator, ExcitationKind::DirectForce, kernel,
                                          0.002, obs, std::nullopt, false);
  CHECK(plain.count() == 1);
  CHECK(plain.resetting_index == -1);

  RegimeModelSet with_reset = assemble_regimes(kOscillator, ExcitationKind::DirectForce, kernel,
                                               0.002, obs, 0.05, false);
  CHECK(with_reset.count() == 2);
  CHECK(with_reset.regimes[1].kind == RegimeKind::Resetting);

  CHECK_THROWS_AS(assemble_regimes(kOscillator, ExcitationKind::DirectForce, kernel, 0.002,
                                   obs, std::nullopt, true),
                  std::invalid_argument);
}
