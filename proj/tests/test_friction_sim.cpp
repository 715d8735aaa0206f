// Tests for the rate-and-state friction law, the event-driven stick-slip
// simulator, and the sampling utilities (uniform resampling, measurement
// noise).  Oracles: closed-form law evaluations, an analytic linear
// oscillator (friction disabled), and trapezoidal energy audits.
#include <doctest.h>

#include "gplfm/friction_sim.hpp"
#include "gplfm/ode45.hpp"
#include "gplfm/signals.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

using namespace gplfm;

namespace {

// Independent transcription of the friction law for oracle checks.
double law_reference(double v, const FrictionParams& p) {
  if (v == 0.0) return 0.0;
  const double speed = std::abs(v);
  const double mag = p.f_star + p.a * std::log((speed + p.epsilon) / p.v_star) +
                     p.b * std::log(p.c + p.v_star / (speed + p.epsilon));
  return (v > 0.0 ? mag : -mag);
}

SignalFunction zero_signal() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

// Analytic response of m z'' + c z' + k z = A sin(w t), z(0) = z'(0) = 0,
// for the underdamped case.  Particular solution plus homogeneous terms
// fitted to the initial conditions.
struct ForcedOscillator {
  double m, c, k, amp, w;

  void particular(double& zp0, double& vp0, double& cs, double& sn) const {
    const double kr = k - m * w * w;
    const double den = kr * kr + (c * w) * (c * w);
    // z_p = (A / den) * (kr * sin(wt) - c w * cos(wt))
    sn = amp * kr / den;
    cs = -amp * c * w / den;
    zp0 = cs;
    vp0 = sn * w;
  }

  double eval(double t, double* vel = nullptr) const {
    double zp0, vp0, cs, sn;
    particular(zp0, vp0, cs, sn);
    const double zeta = c / (2.0 * std::sqrt(k * m));
    REQUIRE(zeta < 1.0);
    const double wn = std::sqrt(k / m);
    const double wd = wn * std::sqrt(1.0 - zeta * zeta);
    // Homogeneous: e^{-zeta wn t} (B cos(wd t) + D sin(wd t)) with
    // B = -zp0, D = (-vp0 + zeta wn B) / wd so that z(0) = z'(0) = 0.
    const double B = -zp0;
    const double D = (-vp0 + zeta * wn * B) / wd;
    const double e = std::exp(-zeta * wn * t);
    const double zh = e * (B * std::cos(wd * t) + D * std::sin(wd * t));
    const double z = cs * std::cos(w * t) + sn * std::sin(w * t) + zh;
    if (vel != nullptr) {
      const double vh =
          e * (-zeta * wn * (B * std::cos(wd * t) + D * std::sin(wd * t)) +
               wd * (-B * std::sin(wd * t) + D * std::cos(wd * t)));
      *vel = -cs * w * std::sin(w * t) + sn * w * std::cos(w * t) + vh;
    }
    return z;
  }
};

int count_stick_phases(const Trajectory& traj) {
  int phases = 0;
  bool in_stick = false;
  for (MotionPhase ph : traj.labels) {
    const bool stick = (ph == MotionPhase::Stick);
    if (stick && !in_stick) ++phases;
    in_stick = stick;
  }
  return phases;
}

// Trapezoidal energy audit over the sample range [i0, i1]: input work minus
// (kinetic + spring + viscous + friction) terms, all relative to the largest
// term magnitude.
double energy_residual(const Trajectory& traj, const SystemParams& sys,
                       std::size_t i0, std::size_t i1) {
  auto load = [&](std::size_t i) {
    if (traj.excitation == ExcitationKind::BaseMotion) {
      return sys.stiffness * traj.input(i) + sys.damping * traj.input_velocity(i);
    }
    return traj.input(i);
  };
  double work = 0.0, viscous = 0.0, friction = 0.0;
  for (std::size_t i = i0; i < i1; ++i) {
    const double dt = traj.time(i + 1) - traj.time(i);
    work += 0.5 * dt * (load(i) * traj.velocity(i) + load(i + 1) * traj.velocity(i + 1));
    viscous += 0.5 * dt * sys.damping *
               (traj.velocity(i) * traj.velocity(i) +
                traj.velocity(i + 1) * traj.velocity(i + 1));
    friction += 0.5 * dt *
                (traj.friction(i) * traj.velocity(i) +
                 traj.friction(i + 1) * traj.velocity(i + 1));
  }
  auto kinetic = [&](std::size_t i) {
    return 0.5 * sys.mass * traj.velocity(i) * traj.velocity(i);
  };
  auto spring = [&](std::size_t i) {
    return 0.5 * sys.stiffness * traj.position(i) * traj.position(i);
  };
  const double budget = work - (kinetic(i1) - kinetic(i0)) -
                        (spring(i1) - spring(i0)) - viscous - friction;
  double scale = std::abs(work);
  scale = std::max(scale, std::abs(viscous));
  scale = std::max(scale, std::abs(friction));
  scale = std::max(scale, std::abs(kinetic(i1) - kinetic(i0)));
  scale = std::max(scale, std::abs(spring(i1) - spring(i0)));
  return std::abs(budget) / std::max(scale, 1e-300);
}

FrictionParams table_friction() { return FrictionParams{}; }

SystemParams unit_system() {
  SystemParams sys;
  sys.mass = 1.0;
  sys.damping = 5.0;
  sys.stiffness = 500.0;
  return sys;
}

}  // namespace

TEST_CASE("friction law matches an independent evaluation") {
  const FrictionParams p = table_friction();

  SUBCASE("default parameters are the reference set") {
    CHECK(p.f_star == doctest::Approx(1.0));
    CHECK(p.a == doctest::Approx(0.07));
    CHECK(p.b == doctest::Approx(0.09));
    CHECK(p.c == doctest::Approx(0.022));
    CHECK(p.v_star == doctest::Approx(0.003));
    CHECK(p.epsilon == doctest::Approx(1e-6));
  }

  SUBCASE("pointwise values") {
    for (double v : {1e-5, 1e-3, 0.003, 0.01, 0.3, 2.0}) {
      CHECK(dieterich_ruina(v, p) == doctest::Approx(law_reference(v, p)).epsilon(1e-14));
    }
    CHECK(dieterich_ruina(0.0, p) == 0.0);
  }

  SUBCASE("odd symmetry") {
    for (double v : {1e-6, 4e-3, 0.05, 1.0, 7.5}) {
      CHECK(dieterich_ruina(-v, p) == doctest::Approx(-dieterich_ruina(v, p)).epsilon(1e-15));
    }
  }

  SUBCASE("static limit is the zero-velocity-side value") {
    const double expected = p.f_star + p.a * std::log(p.epsilon / p.v_star) +
                            p.b * std::log(p.c + p.v_star / p.epsilon);
    const double fs = static_friction_limit(p);
    CHECK(fs == doctest::Approx(expected).epsilon(1e-14));
    // Known numeric value for the reference parameter set.
    CHECK(fs == doctest::Approx(1.1603).epsilon(5e-4));
    // Continuity toward v = 0+: at v = 1e-12 the regularized speed shifts
    // both logarithms by ~1e-6 relative, so match to 1e-6.
    CHECK(dieterich_ruina(1e-12, p) == doctest::Approx(fs).epsilon(1e-6));
  }

  SUBCASE("validation rejects bad parameters") {
    FrictionParams bad = p;
    bad.v_star = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.epsilon = -1e-9;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.c = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("zero input stays at rest in a single stick phase") {
  const Trajectory traj = simulate_stick_slip(unit_system(), table_friction(),
                                              zero_signal(), 1.0,
                                              ExcitationKind::DirectForce);
  REQUIRE(traj.size() > 2);
  CHECK(traj.time(0) == 0.0);
  CHECK(traj.time(traj.time.size() - 1) >= 1.0 - 1e-12);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj.labels[i] == MotionPhase::Stick);
    CHECK(traj.position(i) == 0.0);
    CHECK(traj.velocity(i) == 0.0);
    CHECK(traj.friction(i) == 0.0);
    if (i > 0) CHECK(traj.time(i) > traj.time(i - 1));
  }
  CHECK(count_stick_phases(traj) == 1);
}

TEST_CASE("with friction disabled the simulator reproduces the analytic linear oscillator") {
  // F* = a = b = 0 makes the law identically zero, so the motion is the
  // classical forced linear oscillator with a closed-form solution.
  FrictionParams none = table_friction();
  none.f_star = 0.0;
  none.a = 0.0;
  none.b = 0.0;

  const SystemParams sys = unit_system();
  const ForcedOscillator exact{sys.mass, sys.damping, sys.stiffness, 2.0,
                               2.0 * M_PI * 3.0};
  const SignalFunction input{
      [&](double t) { return exact.amp * std::sin(exact.w * t); },
      [&](double t) { return exact.amp * exact.w * std::cos(exact.w * t); }};

  const double t_f = 2.0;
  const Trajectory traj = simulate_stick_slip(sys, none, input, t_f,
                                              ExcitationKind::DirectForce);
  REQUIRE(traj.size() > 100);

  double max_z = 0.0;
  max_z = traj.position.cwiseAbs().maxCoeff();
  REQUIRE(max_z > 1e-4);

  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    worst = std::max(worst,
                     std::abs(traj.position(i) - exact.eval(traj.time(i))));
  }
  CHECK(worst / max_z < 1e-7);

  double v_exact = 0.0;
  const double z_exact = exact.eval(traj.time(traj.time.size() - 1), &v_exact);
  CHECK(traj.position(traj.size() - 1) == doctest::Approx(z_exact).epsilon(1e-6));
  CHECK(traj.velocity(traj.size() - 1) == doctest::Approx(v_exact).epsilon(1e-5));
}

TEST_CASE("harmonic forcing produces stick-slip cycles that honor the phase contracts") {
  const SystemParams sys = unit_system();
  const FrictionParams fric = table_friction();
  const double f_static = static_friction_limit(fric);
  // Slow forcing slightly above the breakaway level gives repeated stops.
  const SignalFunction input = as_signal(harmonic_signal(2.0, 1.0));

  const Trajectory traj = simulate_stick_slip(sys, fric, input, 3.0,
                                              ExcitationKind::DirectForce);
  REQUIRE(traj.size() > 100);

  int slip_samples = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double load = traj.input(i);
    if (traj.labels[i] == MotionPhase::Stick) {
      // Stick: no motion, friction balances the load, and the balance is
      // feasible (|F_f| within the static limit).
      CHECK(std::abs(traj.velocity(i)) <= 1e-10);
      CHECK(std::abs(traj.friction(i)) <= f_static + 1e-9);
      CHECK(traj.friction(i) ==
            doctest::Approx(load - sys.stiffness * traj.position(i)).epsilon(1e-9));
      CHECK(std::abs(traj.acceleration(i)) <= 1e-12);
    } else {
      ++slip_samples;
      // Slip: friction opposes the motion and Newton's law holds at samples.
      CHECK(traj.friction(i) * traj.velocity(i) >= -1e-18);
      const double accel = (load - sys.damping * traj.velocity(i) -
                            sys.stiffness * traj.position(i) - traj.friction(i)) /
                           sys.mass;
      CHECK(traj.acceleration(i) == doctest::Approx(accel).epsilon(1e-9));
    }
  }
  CHECK(slip_samples > 100);
  CHECK(count_stick_phases(traj) >= 3);

  // Energy audit across the longest slip run.
  std::size_t best_lo = 0, best_hi = 0;
  std::size_t run_lo = 0;
  bool in_slip = false;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.labels[i] == MotionPhase::Slip) {
      if (!in_slip) run_lo = i;
      in_slip = true;
      if (i + 1 == traj.size() || traj.labels[i + 1] != MotionPhase::Slip) {
        if (i - run_lo > best_hi - best_lo) {
          best_lo = run_lo;
          best_hi = i;
        }
      }
    } else {
      in_slip = false;
    }
  }
  REQUIRE(best_hi - best_lo > 50);
  CHECK(energy_residual(traj, sys, best_lo, best_hi) < 1e-3);
}

TEST_CASE("halving solver tolerances leaves the final displacement unchanged to 1e-6 relative") {
  const SystemParams sys = unit_system();
  const FrictionParams fric = table_friction();
  const SignalFunction input = as_signal(harmonic_signal(2.0, 1.0));

  OdeOptions loose;
  OdeOptions tight;
  tight.abs_tol = 0.5 * loose.abs_tol;
  tight.rel_tol = 0.5 * loose.rel_tol;

  const Trajectory a = simulate_stick_slip(sys, fric, input, 2.0,
                                           ExcitationKind::DirectForce, loose);
  const Trajectory b = simulate_stick_slip(sys, fric, input, 2.0,
                                           ExcitationKind::DirectForce, tight);
  double max_z = 0.0;
  max_z = a.position.cwiseAbs().maxCoeff();
  REQUIRE(max_z > 1e-5);
  CHECK(std::abs(a.position(a.size() - 1) - b.position(b.size() - 1)) / max_z < 1e-6);
}

TEST_CASE("base excitation drives the mass through the suspension") {
  const SystemParams sys = unit_system();
  const FrictionParams fric = table_friction();
  // Base displacement of 6 mm at 1 Hz: loading k u + c u' peaks near 3 N.
  const SignalFunction base = as_signal(harmonic_signal(6e-3, 1.0));

  const Trajectory traj = simulate_stick_slip(sys, fric, base, 3.0,
                                              ExcitationKind::BaseMotion);
  REQUIRE(traj.size() > 100);
  REQUIRE(traj.input_velocity.size() == traj.size());
  CHECK(traj.excitation == ExcitationKind::BaseMotion);

  int slips = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double load =
        sys.stiffness * traj.input(i) + sys.damping * traj.input_velocity(i);
    if (traj.labels[i] == MotionPhase::Stick) {
      CHECK(std::abs(traj.velocity(i)) <= 1e-10);
      CHECK(traj.friction(i) ==
            doctest::Approx(load - sys.stiffness * traj.position(i)).epsilon(1e-9));
    } else {
      ++slips;
      CHECK(traj.friction(i) * traj.velocity(i) >= -1e-18);
    }
    CHECK(traj.input(i) == doctest::Approx(base.value(traj.time(i))).epsilon(1e-12));
    CHECK(traj.input_velocity(i) ==
          doctest::Approx(base.velocity(traj.time(i))).epsilon(1e-12));
  }
  CHECK(slips > 50);
  CHECK(count_stick_phases(traj) >= 2);
}

TEST_CASE("irregular broadband forcing yields repeated stops") {
  const SystemParams sys = unit_system();
  const FrictionParams fric = table_friction();
  const double f_static = static_friction_limit(fric);

  // Coarse irregular-sea multisine (few harmonics keeps the test fast); the
  // amplitude is scaled so the load repeatedly crosses the breakaway level.
  JonswapParams wave;
  wave.grid_start = 0.5;
  wave.grid_step = 0.5;
  wave.grid_stop = 40.0;
  wave.amplitude_scale = 0.5;
  wave.seed = 11;
  const MultisineSignal sea = jonswap_multisine(wave);
  const SignalFunction input = as_signal(sea);

  const Trajectory traj = simulate_stick_slip(sys, fric, input, 5.0,
                                              ExcitationKind::DirectForce);
  REQUIRE(traj.size() > 500);
  CHECK(count_stick_phases(traj) >= 3);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.labels[i] == MotionPhase::Stick) {
      CHECK(std::abs(traj.friction(i)) <= f_static + 1e-9);
      CHECK(std::abs(traj.velocity(i)) <= 1e-10);
    } else {
      CHECK(traj.friction(i) * traj.velocity(i) >= -1e-18);
    }
  }
}

TEST_CASE("solver guards reject impossible configurations") {
  const SystemParams sys = unit_system();
  const FrictionParams fric = table_friction();
  const SignalFunction input = as_signal(harmonic_signal(2.0, 1.0));

  OdeOptions bad;
  bad.max_steps = 10;
  CHECK_THROWS_AS(simulate_stick_slip(sys, fric, input, 2.0,
                                      ExcitationKind::DirectForce, bad),
                  SolverError);

  OdeOptions negative;
  negative.abs_tol = -1.0;
  CHECK_THROWS(simulate_stick_slip(sys, fric, input, 1.0,
                                   ExcitationKind::DirectForce, negative));

  OdeOptions unbounded;
  unbounded.max_step = std::numeric_limits<double>::infinity();
  CHECK_THROWS(simulate_stick_slip(sys, fric, input, 1.0,
                                   ExcitationKind::DirectForce, unbounded));
}

TEST_CASE("uniform resampling interpolates and preserves uniform grids") {
  SUBCASE("sample count and stamps") {
    const Trajectory traj = simulate_stick_slip(
        unit_system(), table_friction(), as_signal(harmonic_signal(2.0, 1.0)),
        5.0, ExcitationKind::DirectForce);
    const Trajectory uni = resample_uniform(traj, 500.0);
    CHECK(uni.size() == 2501);
    CHECK(uni.time(0) == 0.0);
    CHECK(uni.time(uni.size() - 1) == doctest::Approx(5.0).epsilon(1e-12));
    for (std::size_t i = 0; i + 1 < uni.size(); ++i) {
      CHECK(uni.time(i + 1) - uni.time(i) == doctest::Approx(1.0 / 500.0).epsilon(1e-9));
    }
    // Resampling an already-uniform trajectory at the same rate is identity.
    const Trajectory again = resample_uniform(uni, 500.0);
    REQUIRE(again.size() == uni.size());
    for (std::size_t i = 0; i < uni.size(); ++i) {
      CHECK(again.position(i) == uni.position(i));
      CHECK(again.velocity(i) == uni.velocity(i));
      CHECK(again.friction(i) == uni.friction(i));
      CHECK(again.labels[i] == uni.labels[i]);
    }
  }

  SUBCASE("linear signals are reproduced exactly") {
    Trajectory traj;
    traj.excitation = ExcitationKind::DirectForce;
    traj.time.resize(5);
    traj.time << 0.0, 0.3, 0.45, 1.1, 2.0;
    traj.position = 2.0 * traj.time.array() - 1.0;
    traj.velocity = Eigen::VectorXd::Constant(5, 2.0);
    traj.acceleration = Eigen::VectorXd::Zero(5);
    traj.friction = 0.5 * traj.time;
    traj.input = -traj.time;
    traj.labels.assign(5, MotionPhase::Slip);
    const Trajectory uni = resample_uniform(traj, 10.0);
    REQUIRE(uni.size() == 21);
    for (std::size_t i = 0; i < uni.size(); ++i) {
      const double t = uni.time(i);
      CHECK(uni.position(i) == doctest::Approx(2.0 * t - 1.0).epsilon(1e-13));
      CHECK(uni.friction(i) == doctest::Approx(0.5 * t).epsilon(1e-13));
      CHECK(uni.input(i) == doctest::Approx(-t).epsilon(1e-13));
    }
  }
}

TEST_CASE("measurement noise hits the requested signal-to-noise ratio") {
  Eigen::VectorXd clean(4000);
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (Eigen::Index i = 0; i < clean.size(); ++i) {
    clean(i) = std::sin(0.37 * static_cast<double>(i)) + 0.2 * unif(gen);
  }
  const double ms = clean.squaredNorm() / static_cast<double>(clean.size());

  SUBCASE("realized ratio within 0.2 dB and exact noise scale") {
    const NoisySignal noisy = add_noise_snr(clean, 80.0, 1234);
    REQUIRE(noisy.values.size() == clean.size());
    const double noise_ms = (noisy.values - clean).squaredNorm() /
                            static_cast<double>(clean.size());
    const double realized = 10.0 * std::log10(ms / noise_ms);
    CHECK(realized == doctest::Approx(80.0).epsilon(0.2 / 80.0));
    // Requested standard deviation: rms(signal) * 10^(-snr/20).
    const double sd = std::sqrt(ms) * std::pow(10.0, -80.0 / 20.0);
    CHECK(noisy.noise_sd == doctest::Approx(sd).epsilon(1e-12));
    CHECK(std::sqrt(noise_ms) == doctest::Approx(sd).epsilon(0.05));
  }

  SUBCASE("determinism and distinct seeds") {
    const NoisySignal n1 = add_noise_snr(clean, 60.0, 7);
    const NoisySignal n2 = add_noise_snr(clean, 60.0, 7);
    const NoisySignal n3 = add_noise_snr(clean, 60.0, 8);
    CHECK(n1.values == n2.values);
    CHECK(n1.values != n3.values);
  }

  SUBCASE("infinite ratio is the identity") {
    const NoisySignal same =
        add_noise_snr(clean, std::numeric_limits<double>::infinity(), 3);
    CHECK(same.values == clean);
    CHECK(same.noise_sd == 0.0);
  }

  SUBCASE("invalid input rejected") {
    Eigen::VectorXd with_nan = clean;
    with_nan(5) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(add_noise_snr(with_nan, 80.0, 1));
  }

  SUBCASE("reported noise levels at the reference response amplitude") {
    // A displacement record with rms 0.078623 m: the 80 dB noise level is
    // 7.8623e-3 mm and the 60 dB level is 0.0786 mm (each 20 dB drop in SNR
    // scales the noise sd by 10).
    Eigen::VectorXd signal(100);
    for (Eigen::Index i = 0; i < signal.size(); ++i) {
      signal(i) = (i % 2 == 0 ? 0.078623 : -0.078623);
    }
    const double sd80_mm = add_noise_snr(signal, 80.0, 1).noise_sd * 1e3;
    const double sd60_mm = add_noise_snr(signal, 60.0, 1).noise_sd * 1e3;
    CHECK(sd80_mm == doctest::Approx(7.8623e-3).epsilon(1e-10));
    CHECK(sd60_mm == doctest::Approx(0.078623).epsilon(1e-10));
    CHECK(sd60_mm / sd80_mm == doctest::Approx(10.0).epsilon(1e-12));
  }
}
