#include "specfuse/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "specfuse/qp.hpp"

namespace specfuse::planner {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Hermite cubic arc between two (position, velocity) states over duration T.
/// Acceleration is affine in time, so the control-norm maximum sits at an
/// endpoint.
struct CubicArc {
  Vec3 p0 = Vec3::Zero(), v0 = Vec3::Zero(), c2 = Vec3::Zero(), c3 = Vec3::Zero();
  double duration = 0.0;

  static CubicArc connect(const UavState& a, const UavState& b, double duration) {
    CubicArc arc;
    arc.duration = duration;
    arc.p0 = a.position;
    arc.v0 = a.velocity;
    const Vec3 dp = b.position - a.position;
    const double t = duration;
    arc.c2 = (3.0 * dp / (t * t)) - (2.0 * a.velocity + b.velocity) / t;
    arc.c3 = (-2.0 * dp / (t * t * t)) + (a.velocity + b.velocity) / (t * t);
    return arc;
  }

  Vec3 position(double s) const { return p0 + v0 * s + c2 * s * s + c3 * s * s * s; }
  Vec3 velocity(double s) const { return v0 + 2.0 * c2 * s + 3.0 * c3 * s * s; }
  Vec3 accel(double s) const { return 2.0 * c2 + 6.0 * c3 * s; }
};

double tilt_of_control(const Vec3& u, const PlannerConfig& cfg) {
  const Vec3 thrust = u + Vec3(0.0, 0.0, cfg.mass * cfg.gravity);
  const double norm = thrust.norm();
  if (norm < 1e-9) return 0.0;
  const double cz = std::clamp(thrust.z() / norm, -1.0, 1.0);
  return std::acos(cz);
}

struct EdgeEval {
  bool feasible = false;
  double length = 0.0;
  double margin = 0.0;  // integral of max(0, 1 - clearance)^2
};

EdgeEval evaluate_edge(const CubicArc& arc, double start_time,
                       const PlatformForecast& forecast, const PlannerConfig& cfg,
                       const Box& world, bool goal_edge) {
  EdgeEval ev;
  const double u_limit = cfg.plan_u_fraction * cfg.u_max;
  const double tilt_limit = cfg.tilt_max_deg * M_PI / 180.0;
  const double m = cfg.mass;

  // Control norm is maximal at an endpoint of the arc.
  for (double s : {0.0, arc.duration}) {
    const Vec3 u = m * arc.accel(s);
    if (u.norm() > u_limit) return ev;
    if (tilt_of_control(u, cfg) > tilt_limit) return ev;
    if (u.z() + m * cfg.gravity < 0.0) return ev;
  }

  const int steps = std::max(6, static_cast<int>(std::ceil(arc.duration / 0.08)));
  const double ds = arc.duration / steps;
  Vec3 prev = arc.position(0.0);
  for (int i = 0; i <= steps; ++i) {
    const double s = i * ds;
    const Vec3 p = arc.position(s);
    const double t_abs = start_time + s;
    const Vec3 deck = deck_position(forecast, t_abs);
    const double clearance = (p - deck).norm();
    // The goal edge may touch the 0.5 m shell exactly at its endpoint.
    const double floor = goal_edge && i == steps ? cfg.goal_height - 1e-6 : cfg.min_clearance;
    if (clearance < floor) return ev;
    if (!world.contains(p, 1e-6)) return ev;
    for (const auto& box : cfg.obstacles) {
      if (box.contains(p)) return ev;
    }
    const double gap = std::max(0.0, 1.0 - clearance);
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    ev.margin += w * gap * gap * ds;
    if (i > 0) ev.length += (p - prev).norm();
    prev = p;
  }
  ev.feasible = true;
  return ev;
}

struct TreeNode {
  PlanNode node;
  CubicArc arc_from_parent;  // undefined for the root
  std::vector<int> children;
};

double state_distance(const UavState& a, const UavState& b) {
  return (a.position - b.position).norm() + 0.3 * (a.velocity - b.velocity).norm();
}

double edge_cost(const PlanWeights& w, double duration, const EdgeEval& ev) {
  return w.alpha * duration + w.beta * ev.length + w.gamma * ev.margin;
}

/// Goal state (position above the deck, deck-matched velocity) at time t.
UavState goal_state_at(const PlatformForecast& forecast, double t,
                       const PlannerConfig& cfg) {
  UavState g;
  g.position = deck_position(forecast, t) + Vec3(0.0, 0.0, cfg.goal_height);
  g.velocity = deck_velocity(forecast, t);
  return g;
}

double steer_duration(const UavState& from, const UavState& to, const PlannerConfig& cfg) {
  const double v_nom = 1.2;
  const double d = (to.position - from.position).norm();
  return std::clamp(d / v_nom, cfg.steer_dt_min, cfg.steer_dt_max);
}

}  // namespace

Vec3 attitude_from_control(const Vec3& control, const PlannerConfig& cfg) {
  Vec3 thrust = control + Vec3(0.0, 0.0, cfg.mass * cfg.gravity);
  const double norm = thrust.norm();
  if (norm < 1e-9) return Vec3::Zero();
  const Vec3 t = thrust / norm;
  // ZYX angles with yaw fixed at zero: body z maps to
  // (sin(pitch) cos(roll), -sin(roll), cos(pitch) cos(roll)).
  const double roll = std::asin(std::clamp(-t.y(), -1.0, 1.0));
  const double cr = std::cos(roll);
  double pitch = 0.0;
  if (std::abs(cr) > 1e-9) {
    pitch = std::atan2(t.x() / cr, t.z() / cr);
  }
  return Vec3(roll, pitch, 0.0);
}

Vec3 deck_position(const PlatformForecast& forecast, double t) {
  return forecast.position_at(t);
}

Vec3 deck_velocity(const PlatformForecast& forecast, double t) {
  return forecast.velocity_at(t);
}

UavState Trajectory::state_at(double t) const {
  UavState s;
  if (knots.empty()) return s;
  if (t <= knots.front().time) return knots.front().state;
  if (t >= knots.back().time) return knots.back().state;
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double v, const TrajectoryKnot& k) { return v < k.time; });
  const auto& k1 = *it;
  const auto& k0 = *(it - 1);
  const double a = (t - k0.time) / std::max(1e-12, k1.time - k0.time);
  s.position = (1.0 - a) * k0.state.position + a * k1.state.position;
  s.velocity = (1.0 - a) * k0.state.velocity + a * k1.state.velocity;
  s.attitude = (1.0 - a) * k0.state.attitude + a * k1.state.attitude;
  return s;
}

Vec3 Trajectory::control_at(double t) const {
  if (knots.empty()) return Vec3::Zero();
  if (t <= knots.front().time) return knots.front().control;
  if (t >= knots.back().time) return knots.back().control;
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double v, const TrajectoryKnot& k) { return v < k.time; });
  const auto& k1 = *it;
  const auto& k0 = *(it - 1);
  const double a = (t - k0.time) / std::max(1e-12, k1.time - k0.time);
  return (1.0 - a) * k0.control + a * k1.control;
}

double trajectory_cost(const Trajectory& traj, const PlanWeights& weights) {
  double j = 0.0;
  for (std::size_t i = 0; i + 1 < traj.knots.size(); ++i) {
    const double dt = traj.knots[i + 1].time - traj.knots[i].time;
    const Vec3& u = traj.knots[i].control;
    const Vec3& v = traj.knots[i].state.velocity;
    j += dt * (u.dot(weights.q_traj.asDiagonal() * u) +
               v.dot(weights.r_traj.asDiagonal() * v));
  }
  return j;
}

std::vector<PlanNode> plan_rrt(const UavState& start, const PlatformForecast& forecast,
                               const PlanWeights& weights, int budget, uint64_t seed,
                               const PlannerConfig& cfg, PlannerDiagnostics* diag) {
  if (budget < 100) {
    throw Error(Error::Kind::Parameter, "plan_rrt: node budget must be >= 100");
  }
  if (forecast.horizon <= cfg.terminal_window + 1.0) {
    throw Error(Error::Kind::Parameter, "plan_rrt: forecast horizon too short");
  }

  const double t0 = forecast.start_time;
  const double t_latest = forecast.end_time() - cfg.terminal_window - 0.2;

  // Corridor box around start and the goal region over the horizon.
  Box world;
  world.min = start.position;
  world.max = start.position;
  for (double t = t0; t <= t_latest; t += 0.25) {
    const Vec3 g = deck_position(forecast, t) + Vec3(0.0, 0.0, cfg.goal_height);
    world.min = world.min.cwiseMin(g);
    world.max = world.max.cwiseMax(g);
  }
  world.min.array() -= cfg.corridor_margin;
  world.max.array() += cfg.corridor_margin;

  std::vector<TreeNode> tree;
  tree.reserve(budget + 2);
  {
    TreeNode root;
    root.node.state = start;
    root.node.time = t0;
    root.node.parent = -1;
    root.node.cost = 0.0;
    tree.push_back(root);
  }

  Rng rng(seed);
  int best_goal = -1;
  double best_goal_cost = kInf;
  int rewires = 0;

  auto try_goal_connect = [&](int idx) {
    const TreeNode& nd = tree[idx];
    // Two fixed-point passes pin the arrival time against the moving deck.
    double t_arr = nd.node.time;
    UavState goal;
    for (int pass = 0; pass < 2; ++pass) {
      goal = goal_state_at(forecast, std::min(t_arr, t_latest), cfg);
      const double dur = steer_duration(nd.node.state, goal, cfg);
      t_arr = nd.node.time + dur;
    }
    if (t_arr > t_latest) return;
    goal = goal_state_at(forecast, t_arr, cfg);
    const double dur = t_arr - nd.node.time;
    CubicArc arc = CubicArc::connect(nd.node.state, goal, dur);
    EdgeEval ev = evaluate_edge(arc, nd.node.time, forecast, cfg, world, true);
    if (!ev.feasible) return;
    const double cost = nd.node.cost + edge_cost(weights, dur, ev);
    if (cost < best_goal_cost) {
      TreeNode gn;
      gn.node.state = goal;
      gn.node.time = t_arr;
      gn.node.parent = idx;
      gn.node.cost = cost;
      gn.node.path_length = nd.node.path_length + ev.length;
      gn.node.margin_penalty = nd.node.margin_penalty + ev.margin;
      gn.arc_from_parent = arc;
      if (best_goal < 0) {
        tree.push_back(gn);
        best_goal = static_cast<int>(tree.size()) - 1;
      } else {
        tree[best_goal] = gn;
      }
      best_goal_cost = cost;
    }
  };

  try_goal_connect(0);

  const double span = (world.max - world.min).norm();
  int expanded = 0;
  while (expanded < budget) {
    ++expanded;
    // Sample: goal-biased or uniform over the corridor.
    UavState sample;
    if (rng.uniform() < cfg.goal_bias) {
      const double t_s = rng.uniform(t0, t_latest);
      sample = goal_state_at(forecast, t_s, cfg);
      for (int i = 0; i < 3; ++i) sample.position[i] += rng.gaussian(0.0, 0.3);
    } else {
      for (int i = 0; i < 3; ++i) {
        sample.position[i] = rng.uniform(world.min[i], world.max[i]);
        sample.velocity[i] = rng.uniform(-cfg.sample_vel_max, cfg.sample_vel_max);
      }
    }

    // Nearest by the weighted state metric (goal node excluded).
    int nearest = -1;
    double nearest_d = kInf;
    for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
      if (i == best_goal) continue;
      const double d = state_distance(tree[i].node.state, sample);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = i;
      }
    }
    if (nearest < 0) continue;

    const double dur = steer_duration(tree[nearest].node.state, sample, cfg);
    const double t_new = tree[nearest].node.time + dur;
    if (t_new > t_latest) continue;

    // Shrinking neighbor radius, scaled to the corridor size.
    const double n = static_cast<double>(tree.size());
    const double radius =
        std::max(1.0, 0.8 * span * std::cbrt(std::log(n + 1.0) / (n + 1.0)));

    // Choose the cheapest feasible parent in the neighborhood.
    int parent = -1;
    double parent_cost = kInf;
    CubicArc parent_arc{};
    EdgeEval parent_ev;
    double parent_time = 0.0;
    for (int i = 0; i < static_cast<int>(tree.size()); ++i) {
      if (i == best_goal) continue;
      if ((tree[i].node.state.position - sample.position).norm() > radius &&
          i != nearest) {
        continue;
      }
      const double d = steer_duration(tree[i].node.state, sample, cfg);
      const double t_cand = tree[i].node.time + d;
      if (t_cand > t_latest) continue;
      CubicArc arc = CubicArc::connect(tree[i].node.state, sample, d);
      EdgeEval ev = evaluate_edge(arc, tree[i].node.time, forecast, cfg, world, false);
      if (!ev.feasible) continue;
      const double c = tree[i].node.cost + edge_cost(weights, d, ev);
      if (c < parent_cost) {
        parent_cost = c;
        parent = i;
        parent_arc = arc;
        parent_ev = ev;
        parent_time = t_cand;
      }
    }
    if (parent < 0) continue;

    TreeNode child;
    child.node.state = sample;
    child.node.time = parent_time;
    child.node.parent = parent;
    child.node.cost = parent_cost;
    child.node.path_length = tree[parent].node.path_length + parent_ev.length;
    child.node.margin_penalty = tree[parent].node.margin_penalty + parent_ev.margin;
    child.arc_from_parent = parent_arc;
    tree.push_back(child);
    const int new_idx = static_cast<int>(tree.size()) - 1;
    tree[parent].children.push_back(new_idx);

    // Rewire neighbors through the new node when that lowers their cost and
    // the shifted subtree stays feasible against the moving deck.
    for (int i = 1; i < static_cast<int>(tree.size()) - 1; ++i) {
      if (i == best_goal || i == new_idx) continue;
      if ((tree[i].node.state.position - sample.position).norm() > radius) continue;
      const double d = steer_duration(sample, tree[i].node.state, cfg);
      const double t_cand = tree[new_idx].node.time + d;
      if (t_cand > t_latest) continue;
      CubicArc arc = CubicArc::connect(sample, tree[i].node.state, d);
      EdgeEval ev = evaluate_edge(arc, tree[new_idx].node.time, forecast, cfg, world, false);
      if (!ev.feasible) continue;
      const double c = tree[new_idx].node.cost + edge_cost(weights, d, ev);
      if (c + 1e-9 >= tree[i].node.cost) continue;

      // Re-check the whole shifted subtree before committing.
      const double dt_shift = t_cand - tree[i].node.time;
      std::vector<int> stack{i};
      std::vector<int> order;
      bool ok = true;
      while (!stack.empty() && ok) {
        int u = stack.back();
        stack.pop_back();
        order.push_back(u);
        for (int ch : tree[u].children) {
          const double t_ch = tree[ch].node.time + dt_shift;
          if (t_ch > t_latest) {
            ok = false;
            break;
          }
          EdgeEval e2 = evaluate_edge(tree[ch].arc_from_parent,
                                      tree[u].node.time + dt_shift, forecast, cfg,
                                      world, false);
          if (!e2.feasible) {
            ok = false;
            break;
          }
          stack.push_back(ch);
        }
      }
      if (!ok) continue;

      auto& old_parent_children = tree[tree[i].node.parent].children;
      old_parent_children.erase(
          std::find(old_parent_children.begin(), old_parent_children.end(), i));
      tree[new_idx].children.push_back(i);
      tree[i].node.parent = new_idx;
      tree[i].arc_from_parent = arc;
      const double delta_cost = c - tree[i].node.cost;
      for (int u : order) {
        tree[u].node.time += dt_shift;
        tree[u].node.cost += delta_cost;
      }
      // Margin terms shift with the deck; recompute them lazily via costs of
      // re-evaluated edges would drift, so fold the change into the rewired
      // edge only (children keep identical arc shapes).
      ++rewires;
    }

    try_goal_connect(new_idx);
  }

  if (diag) {
    diag->nodes_expanded = expanded;
    diag->rewires = rewires;
    diag->tree_cost = best_goal_cost;
  }
  if (best_goal < 0) {
    throw Error(Error::Kind::Planning, "plan_rrt: no path to the goal region within budget");
  }

  std::vector<PlanNode> path;
  for (int idx = best_goal; idx >= 0; idx = tree[idx].node.parent) {
    path.push_back(tree[idx].node);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

/// Resamples a node path into uniform knots by re-deriving the cubic arcs.
std::vector<TrajectoryKnot> resample_path(const std::vector<PlanNode>& path,
                                          const PlannerConfig& cfg) {
  std::vector<TrajectoryKnot> knots;
  if (path.size() < 2) {
    throw Error(Error::Kind::Parameter, "refine_trajectory: path needs >= 2 nodes");
  }
  const double t_start = path.front().time;
  const double t_end = path.back().time;
  const int n = std::max(2, static_cast<int>(std::llround((t_end - t_start) / cfg.refine_dt)));
  const double dt = (t_end - t_start) / n;

  std::size_t seg = 0;
  std::vector<CubicArc> arcs(path.size() - 1);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    arcs[i] = CubicArc::connect(path[i].state, path[i + 1].state,
                                std::max(1e-6, path[i + 1].time - path[i].time));
  }
  for (int k = 0; k <= n; ++k) {
    const double t = t_start + k * dt;
    while (seg + 2 < path.size() && t > path[seg + 1].time) ++seg;
    const double s = std::clamp(t - path[seg].time, 0.0, arcs[seg].duration);
    TrajectoryKnot knot;
    knot.time = t;
    knot.state.position = arcs[seg].position(s);
    knot.state.velocity = arcs[seg].velocity(s);
    knot.control = cfg.mass * arcs[seg].accel(s);
    knot.state.attitude = attitude_from_control(knot.control, cfg);
    knots.push_back(knot);
  }
  return knots;
}

void fill_knot_margins(std::vector<TrajectoryKnot>& knots,
                       const PlatformForecast& forecast, const PlannerConfig& cfg) {
  for (auto& k : knots) {
    k.clearance = (k.state.position - deck_position(forecast, k.time)).norm();
    k.thrust_norm = k.control.norm();
    k.tilt = tilt_of_control(k.control, cfg);
    k.state.attitude = attitude_from_control(k.control, cfg);
  }
}

/// Terminal descent leg: a relative-frame cubic from 0.5 m above the deck to
/// contact, tracking the forecast deck motion.
std::vector<TrajectoryKnot> terminal_leg(const TrajectoryKnot& approach_end,
                                         const PlatformForecast& forecast,
                                         const PlannerConfig& cfg) {
  const double t0 = approach_end.time;
  const double dur = cfg.terminal_window;
  const Vec3 deck0 = deck_position(forecast, t0);
  UavState rel0;
  rel0.position = approach_end.state.position - deck0;
  rel0.velocity = approach_end.state.velocity - deck_velocity(forecast, t0);
  UavState rel1;
  rel1.position = Vec3::Zero();
  rel1.velocity = Vec3(0.0, 0.0, -cfg.touchdown_speed);
  CubicArc arc = CubicArc::connect(rel0, rel1, dur);

  std::vector<TrajectoryKnot> knots;
  const int n = std::max(2, static_cast<int>(std::llround(dur / 0.05)));
  const double dt = dur / n;
  for (int k = 1; k <= n; ++k) {
    const double s = k * dt;
    const double t = t0 + s;
    TrajectoryKnot knot;
    knot.time = t;
    const Vec3 deck = deck_position(forecast, t);
    const Vec3 deck_v = deck_velocity(forecast, t);
    // Deck acceleration from a central difference on the forecast rates.
    const double h = 0.02;
    const Vec3 deck_a = (deck_velocity(forecast, t + h) - deck_velocity(forecast, t - h)) / (2.0 * h);
    knot.state.position = deck + arc.position(s);
    knot.state.velocity = deck_v + arc.velocity(s);
    knot.control = cfg.mass * (arc.accel(s) + deck_a);
    knot.state.attitude = attitude_from_control(knot.control, cfg);
    knots.push_back(knot);
  }
  return knots;
}

struct SqpResult {
  std::vector<TrajectoryKnot> knots;
  double cost = 0.0;
  int iterations = 0;
  bool valid = false;
};

double knots_cost(const std::vector<TrajectoryKnot>& knots, const PlanWeights& w) {
  double j = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double dt = knots[i + 1].time - knots[i].time;
    j += dt * (knots[i].control.dot(w.q_traj.asDiagonal() * knots[i].control) +
               knots[i].state.velocity.dot(w.r_traj.asDiagonal() * knots[i].state.velocity));
  }
  return j;
}

double knots_violation(const std::vector<TrajectoryKnot>& knots,
                       const PlatformForecast& forecast, const PlannerConfig& cfg) {
  double v = 0.0;
  const double tilt_limit = cfg.tilt_max_deg * M_PI / 180.0;
  for (const auto& k : knots) {
    const double clear = (k.state.position - deck_position(forecast, k.time)).norm();
    v += std::max(0.0, cfg.min_clearance - clear);
    v += std::max(0.0, k.control.norm() - cfg.u_max);
    v += std::max(0.0, tilt_of_control(k.control, cfg) - tilt_limit);
  }
  return v;
}

/// One SQP pass over the approach knots: states and controls are decision
/// variables, dynamics and the two endpoint states are equalities, the
/// nonconvex rows (clearance, thrust norm, tilt) are linearized about the
/// current iterate.
SqpResult sqp_refine(std::vector<TrajectoryKnot> knots, const PlatformForecast& forecast,
                     const PlanWeights& weights, const PlannerConfig& cfg) {
  SqpResult out;
  const int n_knots = static_cast<int>(knots.size());
  if (n_knots < 3) {
    out.knots = std::move(knots);
    out.cost = knots_cost(out.knots, weights);
    out.valid = true;
    return out;
  }
  const int n_steps = n_knots - 1;
  const double m = cfg.mass;
  const double tilt_limit = cfg.tilt_max_deg * M_PI / 180.0;
  const double tan_tilt = std::tan(tilt_limit);
  const double mg = m * cfg.gravity;

  // Variables: x_1..x_{n_steps} (6 each) then u_0..u_{n_steps-1} (3 each).
  const int nx = 6 * n_steps;
  const int nv = nx + 3 * n_steps;
  auto xi = [&](int k) { return 6 * (k - 1); };          // state knot k >= 1
  auto ui = [&](int k) { return nx + 3 * k; };           // control step k >= 0

  double prev_cost = knots_cost(knots, weights);
  const double initial_cost = prev_cost;
  double prox = 1e-3;

  for (int iter = 1; iter <= cfg.sqp_max_iter; ++iter) {
    out.iterations = iter;
    qp::Problem prob;
    prob.p = MatX::Zero(nv, nv);
    prob.q = VecX::Zero(nv);

    const int n_dyn = 6 * n_steps;
    const int n_goal = 6;
    int n_ineq = 0;
    for (int k = 1; k <= n_steps; ++k) n_ineq += 1;            // clearance
    n_ineq += n_steps * 6;                                     // control box
    n_ineq += n_steps * 2;                                     // norm + tilt cuts
    const int mrows = n_dyn + n_goal + n_ineq;
    prob.a = MatX::Zero(mrows, nv);
    prob.lower = VecX::Constant(mrows, -kInf);
    prob.upper = VecX::Constant(mrows, kInf);

    // Cost: dt (u'Qu + v'Rv) plus a proximal pull toward the iterate.
    for (int k = 0; k < n_steps; ++k) {
      const double dt = knots[k + 1].time - knots[k].time;
      for (int i = 0; i < 3; ++i) {
        prob.p(ui(k) + i, ui(k) + i) += 2.0 * dt * weights.q_traj[i];
      }
      if (k >= 1) {
        for (int i = 0; i < 3; ++i) {
          prob.p(xi(k) + 3 + i, xi(k) + 3 + i) += 2.0 * dt * weights.r_traj[i];
        }
      }
    }
    for (int i = 0; i < nv; ++i) prob.p(i, i) += prox;
    for (int k = 1; k <= n_steps; ++k) {
      for (int i = 0; i < 3; ++i) {
        prob.q[xi(k) + i] -= prox * knots[k].state.position[i];
        prob.q[xi(k) + 3 + i] -= prox * knots[k].state.velocity[i];
      }
    }
    for (int k = 0; k < n_steps; ++k) {
      for (int i = 0; i < 3; ++i) prob.q[ui(k) + i] -= prox * knots[k].control[i];
    }

    int row = 0;
    // Dynamics: x_{k+1} = A x_k + B u_k (+ x_0 terms on the rhs for k = 0).
    for (int k = 0; k < n_steps; ++k) {
      const double dt = knots[k + 1].time - knots[k].time;
      for (int i = 0; i < 3; ++i) {
        // position rows
        prob.a(row + i, xi(k + 1) + i) = 1.0;
        // velocity rows
        prob.a(row + 3 + i, xi(k + 1) + 3 + i) = 1.0;
        if (k >= 1) {
          prob.a(row + i, xi(k) + i) = -1.0;
          prob.a(row + i, xi(k) + 3 + i) = -dt;
          prob.a(row + 3 + i, xi(k) + 3 + i) = -1.0;
        }
        prob.a(row + i, ui(k) + i) = -dt * dt / (2.0 * m);
        prob.a(row + 3 + i, ui(k) + i) = -dt / m;
        double rhs_p = 0.0, rhs_v = 0.0;
        if (k == 0) {
          rhs_p = knots[0].state.position[i] + dt * knots[0].state.velocity[i];
          rhs_v = knots[0].state.velocity[i];
        }
        prob.lower[row + i] = rhs_p;
        prob.upper[row + i] = rhs_p;
        prob.lower[row + 3 + i] = rhs_v;
        prob.upper[row + 3 + i] = rhs_v;
      }
      row += 6;
    }
    // Terminal state pinned to the seed's endpoint.
    for (int i = 0; i < 6; ++i) {
      prob.a(row + i, xi(n_steps) + i) = 1.0;
      const double v = i < 3 ? knots[n_steps].state.position[i]
                             : knots[n_steps].state.velocity[i - 3];
      prob.lower[row + i] = v;
      prob.upper[row + i] = v;
    }
    row += 6;

    // Clearance half-space at each interior knot.
    for (int k = 1; k <= n_steps; ++k) {
      const Vec3 deck = deck_position(forecast, knots[k].time);
      Vec3 nrm = knots[k].state.position - deck;
      const double dist = nrm.norm();
      nrm = dist > 1e-9 ? Vec3(nrm / dist) : Vec3(0.0, 0.0, 1.0);
      for (int i = 0; i < 3; ++i) prob.a(row, xi(k) + i) = nrm[i];
      prob.lower[row] = nrm.dot(deck) + cfg.min_clearance;
      ++row;
    }
    // Control box, norm cut and tilt cut.
    for (int k = 0; k < n_steps; ++k) {
      for (int i = 0; i < 3; ++i) {
        prob.a(row, ui(k) + i) = 1.0;
        prob.lower[row] = -cfg.u_max;
        prob.upper[row] = cfg.u_max;
        ++row;
      }
      const Vec3 u0 = knots[k].control;
      Vec3 dir = u0.norm() > 1e-6 ? Vec3(u0.normalized()) : Vec3(0.0, 0.0, 1.0);
      for (int i = 0; i < 3; ++i) prob.a(row, ui(k) + i) = dir[i];
      prob.upper[row] = cfg.u_max;
      ++row;
      const Vec3 thrust = u0 + Vec3(0.0, 0.0, mg);
      Vec3 lat(thrust.x(), thrust.y(), 0.0);
      Vec3 lat_dir = lat.norm() > 1e-6 ? Vec3(lat.normalized()) : Vec3(1.0, 0.0, 0.0);
      // |T_xy| <= tan(tilt_max) T_z linearized about the iterate.
      prob.a(row, ui(k) + 0) = lat_dir.x();
      prob.a(row, ui(k) + 1) = lat_dir.y();
      prob.a(row, ui(k) + 2) = -tan_tilt;
      prob.upper[row] = tan_tilt * mg;
      ++row;
    }

    qp::Settings settings;
    settings.eps_abs = 1e-7;
    settings.eps_rel = 1e-7;
    settings.max_iter = 1500;
    qp::Result sol = qp::solve(prob, settings);

    // Candidate knots from the QP solution with a simple backtracking merit
    // line search on cost + violations.
    auto build = [&](double step) {
      std::vector<TrajectoryKnot> cand = knots;
      for (int k = 1; k <= n_steps; ++k) {
        for (int i = 0; i < 3; ++i) {
          cand[k].state.position[i] =
              (1.0 - step) * knots[k].state.position[i] + step * sol.z[xi(k) + i];
          cand[k].state.velocity[i] =
              (1.0 - step) * knots[k].state.velocity[i] + step * sol.z[xi(k) + 3 + i];
        }
      }
      for (int k = 0; k < n_steps; ++k) {
        for (int i = 0; i < 3; ++i) {
          cand[k].control[i] = (1.0 - step) * knots[k].control[i] + step * sol.z[ui(k) + i];
        }
      }
      return cand;
    };

    const double merit_w = 1e4;
    const double merit0 =
        knots_cost(knots, weights) + merit_w * knots_violation(knots, forecast, cfg);
    bool accepted = false;
    for (double step : {1.0, 0.5, 0.25}) {
      auto cand = build(step);
      const double merit =
          knots_cost(cand, weights) + merit_w * knots_violation(cand, forecast, cfg);
      if (merit < merit0 - 1e-12) {
        knots = std::move(cand);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      prox *= 10.0;
      if (prox > 1.0) break;
      continue;
    }
    const double cost = knots_cost(knots, weights);
    if (std::abs(prev_cost - cost) < cfg.sqp_tol * std::max(1.0, std::abs(initial_cost))) {
      prev_cost = cost;
      break;
    }
    prev_cost = cost;
  }

  out.knots = std::move(knots);
  out.cost = prev_cost;
  out.valid = true;
  return out;
}

Trajectory assemble(std::vector<TrajectoryKnot> approach,
                    const PlatformForecast& forecast, const PlanWeights& weights,
                    const PlannerConfig& cfg) {
  Trajectory traj;
  auto leg = terminal_leg(approach.back(), forecast, cfg);
  traj.knots = std::move(approach);
  traj.knots.insert(traj.knots.end(), leg.begin(), leg.end());
  fill_knot_margins(traj.knots, forecast, cfg);
  traj.touchdown_time = traj.knots.back().time;
  traj.total_cost = trajectory_cost(traj, weights);
  return traj;
}

}  // namespace

Trajectory refine_trajectory(const std::vector<PlanNode>& path,
                             const PlatformForecast& forecast, const PlanWeights& weights,
                             const PlannerConfig& cfg, PlannerDiagnostics* diag) {
  auto seed_knots = resample_path(path, cfg);
  Trajectory seed = assemble(seed_knots, forecast, weights, cfg);
  if (!check_constraints(seed, forecast, cfg).empty()) {
    throw Error(Error::Kind::Planning,
                "refine_trajectory: seed path violates constraints");
  }

  SqpResult sqp = sqp_refine(seed_knots, forecast, weights, cfg);
  if (diag) diag->sqp_iterations = sqp.iterations;
  if (!sqp.valid) return seed;

  Trajectory refined = assemble(sqp.knots, forecast, weights, cfg);
  if (!check_constraints(refined, forecast, cfg).empty()) return seed;
  if (refined.total_cost > seed.total_cost) return seed;
  if (diag) diag->refined_cost = refined.total_cost;
  return refined;
}

Trajectory replan(const Trajectory& current, const PlatformForecast& updated_forecast,
                  double elapsed, const PlanWeights& weights, uint64_t seed,
                  const PlannerConfig& cfg, PlannerDiagnostics* diag) {
  if (current.empty() || elapsed < current.start_time() - 1e-9 ||
      elapsed > current.end_time() + 1e-9) {
    throw Error(Error::Kind::Parameter, "replan: elapsed outside trajectory span");
  }

  // Remaining tail, re-anchored at the elapsed time.
  Trajectory tail;
  tail.touchdown_time = current.touchdown_time;
  for (const auto& k : current.knots) {
    if (k.time >= elapsed - 1e-9) tail.knots.push_back(k);
  }
  if (tail.knots.size() < 2) {
    throw Error(Error::Kind::Parameter, "replan: trajectory already consumed");
  }

  // No-op when the updated forecast still lands where the tail lands.
  const Vec3 new_touch = deck_position(updated_forecast, current.touchdown_time);
  const Vec3 old_touch = current.knots.back().state.position;
  const double touch_shift = (new_touch - old_touch).norm();
  if (touch_shift < 1e-7) {
    tail.total_cost = trajectory_cost(tail, weights);
    return tail;
  }

  const double t_goal = current.touchdown_time - cfg.terminal_window;
  if (elapsed >= t_goal - 1e-9) {
    // Already inside the terminal window; the controller owns the descent.
    tail.total_cost = trajectory_cost(tail, weights);
    return tail;
  }
  std::vector<TrajectoryKnot> approach;
  for (const auto& k : tail.knots) {
    if (k.time <= t_goal + 1e-9) approach.push_back(k);
  }

  // Small forecast drift: keep the approach, rebuild only the terminal leg so
  // the touchdown keeps tracking the deck.
  if (touch_shift < 0.15 && approach.size() >= 2) {
    Trajectory rebuilt = assemble(approach, updated_forecast, weights, cfg);
    if (check_constraints(rebuilt, updated_forecast, cfg).empty()) {
      return rebuilt;
    }
  }

  bool warm_ok = approach.size() >= 2;
  if (warm_ok) {
    // Retarget the approach endpoint onto the updated goal state.
    UavState goal;
    goal.position = deck_position(updated_forecast, t_goal) + Vec3(0.0, 0.0, cfg.goal_height);
    goal.velocity = deck_velocity(updated_forecast, t_goal);
    const double remaining = t_goal - approach.front().time;
    const Vec3 shift = goal.position - approach.back().state.position;
    // Reachability guard: the retarget must stay within the control budget.
    const double need_u =
        2.0 * cfg.mass * shift.norm() / std::max(0.25, remaining * remaining);
    if (need_u > cfg.plan_u_fraction * cfg.u_max) {
      warm_ok = false;
    } else {
      // Blend the shift in over the remaining approach (zero at the start).
      for (auto& k : approach) {
        const double a =
            remaining > 1e-6 ? std::clamp((k.time - approach.front().time) / remaining, 0.0, 1.0)
                             : 1.0;
        const double s = a * a * (3.0 - 2.0 * a);  // smoothstep
        k.state.position += s * shift;
        const double ds_dt =
            remaining > 1e-6 ? 6.0 * a * (1.0 - a) / remaining : 0.0;
        k.state.velocity += ds_dt * shift;
      }
      approach.back().state.velocity = goal.velocity;
      // Controls re-derived from the perturbed states.
      for (std::size_t i = 0; i + 1 < approach.size(); ++i) {
        const double dt = approach[i + 1].time - approach[i].time;
        approach[i].control = cfg.mass *
                              (approach[i + 1].state.velocity - approach[i].state.velocity) / dt;
      }
      SqpResult sqp = sqp_refine(approach, updated_forecast, weights, cfg);
      Trajectory refined = assemble(sqp.knots, updated_forecast, weights, cfg);
      if (diag) diag->sqp_iterations = sqp.iterations;
      if (check_constraints(refined, updated_forecast, cfg).empty()) {
        return refined;
      }
      warm_ok = false;
    }
  }

  // Fallback: full plan from the current state on the tail.
  if (diag) diag->fallback_full_replan = true;
  UavState start = current.state_at(elapsed);
  PlatformForecast fc = updated_forecast;
  auto path = plan_rrt(start, fc, weights, 1500, seed, cfg, diag);
  return refine_trajectory(path, fc, weights, cfg, diag);
}

std::vector<ConstraintViolation> check_constraints(const Trajectory& traj,
                                                   const PlatformForecast& forecast,
                                                   const PlannerConfig& cfg) {
  std::vector<ConstraintViolation> out;
  const double tilt_limit = cfg.tilt_max_deg * M_PI / 180.0;
  for (int i = 0; i < static_cast<int>(traj.knots.size()); ++i) {
    const auto& k = traj.knots[i];
    const Vec3 deck = deck_position(forecast, k.time);
    const double clearance = (k.state.position - deck).norm();
    const Vec3 lateral = k.state.position - deck;
    const double lateral_err = std::hypot(lateral.x(), lateral.y());
    const bool in_terminal_window =
        k.time > traj.touchdown_time - cfg.terminal_window - 1e-9 &&
        lateral_err < cfg.terminal_lateral_gate;
    if (!in_terminal_window && clearance < cfg.min_clearance - 1e-9) {
      out.push_back({ConstraintViolation::Kind::Clearance, i, clearance, cfg.min_clearance});
    }
    const Vec3 att = attitude_from_control(k.control, cfg);
    if (std::abs(att.x()) > tilt_limit + 1e-9) {
      out.push_back({ConstraintViolation::Kind::Roll, i, std::abs(att.x()), tilt_limit});
    }
    if (std::abs(att.y()) > tilt_limit + 1e-9) {
      out.push_back({ConstraintViolation::Kind::Pitch, i, std::abs(att.y()), tilt_limit});
    }
    if (k.control.norm() > cfg.u_max + 1e-9) {
      out.push_back({ConstraintViolation::Kind::Thrust, i, k.control.norm(), cfg.u_max});
    }
    for (const auto& box : cfg.obstacles) {
      if (box.contains(k.state.position)) {
        out.push_back({ConstraintViolation::Kind::Obstacle, i, 0.0, 0.0});
        break;
      }
    }
  }
  return out;
}

}  // namespace specfuse::planner
