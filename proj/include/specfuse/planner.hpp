#ifndef SPECFUSE_PLANNER_HPP
#define SPECFUSE_PLANNER_HPP

#include <optional>
#include <vector>

#include "specfuse/rng.hpp"
#include "specfuse/types.hpp"

namespace specfuse::planner {

/// Node of the time-based tree search.
struct PlanNode {
  UavState state;
  double time = 0.0;   // absolute simulation time
  int parent = -1;
  double cost = 0.0;         // alpha*t + beta*d + gamma*m accumulated from root
  double path_length = 0.0;  // d term
  double margin_penalty = 0.0;  // m term
};

/// Weights of the tree cost (alpha, beta, gamma) and of the refinement
/// objective (diagonal Q on control, R on velocity).
struct PlanWeights {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 2.0;
  Vec3 q_traj = Vec3(1.0, 1.0, 1.0);
  Vec3 r_traj = Vec3(0.2, 0.2, 0.2);
};

struct TrajectoryKnot {
  double time = 0.0;
  UavState state;
  Vec3 control = Vec3::Zero();  // net control force [N], gravity compensated
  double clearance = 0.0;       // distance to the deck point [m]
  double tilt = 0.0;            // rad
  double thrust_norm = 0.0;     // |control| [N]
};

struct Trajectory {
  std::vector<TrajectoryKnot> knots;
  double total_cost = 0.0;  // J per the refinement objective
  double touchdown_time = 0.0;

  bool empty() const { return knots.empty(); }
  double start_time() const { return knots.empty() ? 0.0 : knots.front().time; }
  double end_time() const { return knots.empty() ? 0.0 : knots.back().time; }
  UavState state_at(double t) const;
  Vec3 control_at(double t) const;
};

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  bool contains(const Vec3& p, double margin = 0.0) const {
    return (p.array() >= min.array() - margin).all() &&
           (p.array() <= max.array() + margin).all();
  }
};

struct PlannerConfig {
  double mass = 1.5;      // kg
  double gravity = 9.81;  // m/s^2
  double u_max = 15.0;    // N, bound on the control force norm
  double tilt_max_deg = 45.0;
  double min_clearance = 0.5;        // m, outside the terminal window
  double terminal_window = 1.5;      // s before touchdown
  double terminal_lateral_gate = 0.10;  // m, lateral error enabling the window
  double goal_height = 0.5;          // m above the deck point
  double goal_pos_tol = 0.25;        // m
  double goal_vel_tol = 0.9;         // m/s relative to deck
  double sample_vel_max = 2.0;       // m/s
  double steer_dt_min = 0.4;         // s
  double steer_dt_max = 1.8;         // s
  double goal_bias = 0.20;
  double corridor_margin = 2.5;      // m box inflation around start-goal
  double plan_u_fraction = 0.85;     // control headroom left for tracking
  double refine_dt = 0.1;            // s knot spacing for refinement
  int sqp_max_iter = 50;
  double sqp_tol = 1e-4;             // relative cost decrease
  double touchdown_speed = 0.25;     // m/s descent at contact, relative to deck
  int budget_hint = 1200;            // default node budget for full plans
  std::vector<Box> obstacles;
};

struct ConstraintViolation {
  enum class Kind { Clearance, Roll, Pitch, Thrust, Obstacle };
  Kind kind;
  int knot_index;
  double value;   // measured quantity
  double bound;   // violated bound
};

struct PlannerDiagnostics {
  int nodes_expanded = 0;
  int rewires = 0;
  int sqp_iterations = 0;
  double tree_cost = 0.0;
  double refined_cost = 0.0;
  bool fallback_full_replan = false;
};

/// Roll/pitch implied by pointing the total thrust (control + weight) along
/// the body vertical, with yaw held at zero.
Vec3 attitude_from_control(const Vec3& control, const PlannerConfig& cfg);

/// Time-based tree search toward the moving goal region 0.5 m above the
/// forecast deck point. Throws a planning error when no path reaches the goal
/// within the node budget.
std::vector<PlanNode> plan_rrt(const UavState& start, const PlatformForecast& forecast,
                               const PlanWeights& weights, int budget, uint64_t seed,
                               const PlannerConfig& cfg = {},
                               PlannerDiagnostics* diag = nullptr);

/// Local refinement of a tree path (linearize, solve the constrained quadratic
/// subproblem, line-search) plus the terminal descent leg onto the deck.
/// The output always satisfies check_constraints.
Trajectory refine_trajectory(const std::vector<PlanNode>& path,
                             const PlatformForecast& forecast, const PlanWeights& weights,
                             const PlannerConfig& cfg = {},
                             PlannerDiagnostics* diag = nullptr);

/// Warm-started replan from the remaining tail of the current trajectory;
/// falls back to a full plan_rrt + refine when the warm start is not viable.
Trajectory replan(const Trajectory& current, const PlatformForecast& updated_forecast,
                  double elapsed, const PlanWeights& weights, uint64_t seed,
                  const PlannerConfig& cfg = {}, PlannerDiagnostics* diag = nullptr);

/// Per-knot evaluation of the clearance / roll / pitch / thrust constraints.
/// Empty result iff the trajectory is valid.
std::vector<ConstraintViolation> check_constraints(const Trajectory& traj,
                                                   const PlatformForecast& forecast,
                                                   const PlannerConfig& cfg = {});

/// Deck point at absolute time t per the forecast.
Vec3 deck_position(const PlatformForecast& forecast, double t);
Vec3 deck_velocity(const PlatformForecast& forecast, double t);

/// Refinement objective of a trajectory under the given weights.
double trajectory_cost(const Trajectory& traj, const PlanWeights& weights);

}  // namespace specfuse::planner

#endif  // SPECFUSE_PLANNER_HPP
