#ifndef SPECFUSE_MPC_HPP
#define SPECFUSE_MPC_HPP

#include <vector>

#include "specfuse/planner.hpp"
#include "specfuse/types.hpp"

namespace specfuse::controller {

enum class Phase { Approach, Terminal };

/// Receding-horizon tracking problem on the point-mass model. State is
/// (position, velocity); input is the net control force.
struct MpcProblem {
  int horizon = 20;        // N_p steps
  double ts = 0.05;        // s
  double mass = 1.5;       // kg
  Vec6 q_diag = (Vec6() << 10.0, 10.0, 20.0, 1.0, 1.0, 1.0).finished();
  Vec3 r_diag = Vec3(0.1, 0.1, 0.1);      // on input increments
  Vec6 p_diag = (Vec6() << 50.0, 50.0, 100.0, 5.0, 5.0, 5.0).finished();
  Vec3 u_min = Vec3(-15.0, -15.0, -14.715);
  Vec3 u_max = Vec3(15.0, 15.0, 15.0);
  Vec3 du_min = Vec3(-6.0, -6.0, -6.0);   // per step
  Vec3 du_max = Vec3(6.0, 6.0, 6.0);

  void validate() const;
};

/// Reference sampled every ts: horizon + 1 states (position, velocity).
struct MpcReference {
  std::vector<Vec6> states;
};

struct MpcSolution {
  Vec3 u_cmd = Vec3::Zero();
  double cost = 0.0;        // tracking cost of the optimal sequence
  int qp_iterations = 0;
  bool converged = false;
  std::vector<Vec3> sequence;  // full optimal input sequence
};

/// Solves the finite-horizon tracking problem (condensed convex QP with box
/// input and input-rate constraints) and returns the first input. d_hat is a
/// known constant disturbance force compensated over the horizon.
MpcSolution mpc_step(const UavState& current, const MpcReference& reference,
                     const MpcProblem& problem, const Vec3& u_prev = Vec3::Zero(),
                     const Vec3& d_hat = Vec3::Zero(),
                     const MpcSolution* warm = nullptr);

/// Convenience overload sampling the reference from a planned trajectory.
/// Throws when the trajectory does not span horizon * ts ahead of t.
MpcSolution mpc_step(const UavState& current, const planner::Trajectory& reference,
                     double t, const MpcProblem& problem,
                     const Vec3& u_prev = Vec3::Zero(), const Vec3& d_hat = Vec3::Zero());

/// Builds the reference window from a trajectory; beyond its end the deck
/// tracking state from the forecast is held.
MpcReference sample_reference(const planner::Trajectory& traj, double t,
                              const MpcProblem& problem,
                              const PlatformForecast* forecast = nullptr);

/// Velocity-matching hook: in the terminal phase the horizontal velocity
/// reference is overridden with the predicted deck tangential velocity before
/// tracking; in approach it passes through untouched.
MpcReference blend_velocity_matching(const MpcReference& reference,
                                     const Vec3& deck_velocity, Phase phase);

/// Hard cap on the emitted control: scales the vector onto the thrust ball.
Vec3 clamp_control_norm(const Vec3& u, double u_max);

}  // namespace specfuse::controller

#endif  // SPECFUSE_MPC_HPP
