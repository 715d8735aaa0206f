#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gplfm/gp_ssm.hpp"
#include "gplfm/types.hpp"

namespace gplfm {

// Single degree of freedom oscillator m*z'' + c*z' + k*z = load.
struct SystemParams {
  double mass;
  double damping;
  double stiffness;

  void validate() const;
};

// How the measured input drives the oscillator:
//   DirectForce: load = u - f           (u external force, f friction)
//   BaseMotion:  load = k*u + c*u' - f  (u base displacement)
enum class ExcitationKind { DirectForce, BaseMotion };

inline int input_dim(ExcitationKind kind) {
  return kind == ExcitationKind::DirectForce ? 1 : 2;
}

enum class ObservedQuantity { Displacement, Acceleration };

struct ObservationKind {
  ObservedQuantity quantity = ObservedQuantity::Displacement;
  double noise_variance = 0.0;  // must be positive for inference
};

// Continuous-time linear model dx = drift*x dt + input*u dt + noise_loading dw.
// force_loading is the column through which the (negated) latent force enters;
// it is consumed by augment() and left empty on augmented models.
struct ContinuousStateModel {
  Mat drift;               // n x n, 1/s
  InputMat input;          // n x n_u
  Vec noise_loading;       // n x 1
  double spectral_density = 0.0;
  Vec force_loading;       // n x 1, empty once the force state is absorbed
};

// Oscillator as a two-state model over [z, z'].
ContinuousStateModel build_system_model(const SystemParams& params, ExcitationKind excitation);

// Joint model over [system states; latent force states]. The force enters the
// system through -force_loading, so a positive latent force opposes the input.
ContinuousStateModel augment(const ContinuousStateModel& system, const LatentForceSSM& force);

// Stationary covariance of the model's state (Lyapunov solution). Requires a
// Hurwitz drift; a marginally stable model (for example an undamped
// oscillator) raises UnstableModelError.
Mat stationary_covariance(const ContinuousStateModel& model);

// Discrete-time model x[t] = A x[t-1] + B u[t-1] + w, w ~ N(0, Q),
// y[t] = C x[t] + D u[t] + v, v ~ N(0, R).
struct DiscreteLGSSM {
  Mat A;
  InputMat B;
  Mat Q;
  RowVec C;
  InputRow D;
  double R = 0.0;
  double dt = 0.0;
};

// Transition part of the zero-order-hold discretization: A = exp(drift * dt)
// and the held-input matrix B, computed together from one block matrix
// exponential (valid for singular drift too).
std::pair<Mat, InputMat> discretize_transition(const ContinuousStateModel& model, double dt);

// Exact zero-order-hold discretization. Q is the stationary-covariance
// difference form Pinf - A Pinf A', equivalent to the process-noise integral.
DiscreteLGSSM discretize(const ContinuousStateModel& model, double dt,
                         const ObservationKind& obs, const SystemParams& params,
                         ExcitationKind excitation);

// Transition model for the one-step force reset: system states evolve with the
// force-free dynamics, force states are drawn fresh from N(0, reset_prior_var).
DiscreteLGSSM build_resetting_model(const ContinuousStateModel& system, int force_dim,
                                    double dt, double reset_prior_var,
                                    const ObservationKind& obs, const SystemParams& params,
                                    ExcitationKind excitation);

enum class RegimeKind { Sliding, Sticking, Resetting };

// One motion regime. The sticking regime has no transition matrices (its
// prediction is analytic); its model field only carries the shared C, D, R, dt.
struct Regime {
  RegimeKind kind;
  DiscreteLGSSM model;
};

// Everything the switching filter needs: regime models plus the system context
// used by the sticking predictor. Regime order is [Sliding, (Sticking), (Resetting)];
// the resetting regime, when present, is last, matching the switch prior.
struct RegimeModelSet {
  std::vector<Regime> regimes;
  SystemParams params{};
  ExcitationKind excitation = ExcitationKind::DirectForce;
  int state_dim = 0;
  int n_inputs = 0;
  double dt = 0.0;
  Mat initial_covariance;  // stationary covariance of the sliding model
  int sticking_index = -1;
  int resetting_index = -1;

  int count() const { return static_cast<int>(regimes.size()); }
  const DiscreteLGSSM& observation_model(int s) const;
};

// Builds the regime set for one sampling rate and kernel.
//   stick_slip = true:  [Sliding, Sticking, Resetting]  (reset_prior_var required)
//   stick_slip = false: [Sliding] or [Sliding, Resetting] when reset_prior_var given
RegimeModelSet assemble_regimes(const SystemParams& params, ExcitationKind excitation,
                                const KernelSpec& kernel, double dt,
                                const ObservationKind& obs,
                                std::optional<double> reset_prior_var, bool stick_slip);

}  // namespace gplfm
