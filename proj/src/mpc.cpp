#include "specfuse/mpc.hpp"

#include <cmath>

#include "specfuse/qp.hpp"

namespace specfuse::controller {

void MpcProblem::validate() const {
  if (horizon < 2) throw Error(Error::Kind::Parameter, "MpcProblem: horizon must be >= 2");
  if (!(ts > 0.0)) throw Error(Error::Kind::Parameter, "MpcProblem: ts must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (u_min[i] > u_max[i] || du_min[i] > du_max[i]) {
      throw Error(Error::Kind::Parameter, "MpcProblem: inconsistent input bounds");
    }
  }
  if ((q_diag.array() < 0.0).any() || (r_diag.array() < 0.0).any() ||
      (p_diag.array() < 0.0).any()) {
    throw Error(Error::Kind::Parameter, "MpcProblem: negative weights");
  }
}

MpcSolution mpc_step(const UavState& current, const MpcReference& reference,
                     const MpcProblem& prob, const Vec3& u_prev, const Vec3& d_hat,
                     const MpcSolution* warm) {
  prob.validate();
  const int np = prob.horizon;
  if (static_cast<int>(reference.states.size()) < np + 1) {
    throw Error(Error::Kind::Parameter, "mpc_step: reference shorter than the horizon");
  }

  // Discrete double integrator over ts.
  const double dt = prob.ts;
  const double m = prob.mass;
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Identity();
  a.topRightCorner(3, 3) = dt * Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 6, 3> b = Eigen::Matrix<double, 6, 3>::Zero();
  b.topRows(3) = (dt * dt / (2.0 * m)) * Eigen::Matrix3d::Identity();
  b.bottomRows(3) = (dt / m) * Eigen::Matrix3d::Identity();

  Vec6 x0;
  x0 << current.position, current.velocity;

  // Condensed prediction: X = phi x0 + gamma U + gamma_d d_hat.
  const int nx = 6 * np;
  const int nu = 3 * np;
  MatX phi(nx, 6);
  MatX gamma = MatX::Zero(nx, nu);
  {
    Eigen::Matrix<double, 6, 6> ak = a;
    for (int k = 0; k < np; ++k) {
      phi.middleRows(6 * k, 6) = ak;
      ak = a * ak;
    }
    for (int k = 0; k < np; ++k) {
      MatX blk = b;
      for (int r = k; r < np; ++r) {
        gamma.block(6 * r, 3 * k, 6, 3) = blk;
        blk = a * blk;
      }
    }
  }
  VecX d_vec = VecX::Zero(nx);
  {
    VecX du = VecX::Zero(nu);
    for (int k = 0; k < np; ++k) du.segment(3 * k, 3) = d_hat;
    d_vec = gamma * du;
  }

  VecX xref(nx);
  for (int k = 1; k <= np; ++k) {
    xref.segment(6 * (k - 1), 6) = reference.states[k];
  }

  // Stage weights Q for k = 1..Np-1, terminal P at k = Np.
  VecX qbar(nx);
  for (int k = 1; k <= np; ++k) {
    qbar.segment(6 * (k - 1), 6) = (k == np) ? prob.p_diag : prob.q_diag;
  }

  // Increment map: dU = D U - E u_prev.
  MatX dmat = MatX::Identity(nu, nu);
  for (int k = 1; k < np; ++k) {
    dmat.block(3 * k, 3 * (k - 1), 3, 3) = -Eigen::Matrix3d::Identity();
  }
  VecX e_uprev = VecX::Zero(nu);
  e_uprev.segment(0, 3) = u_prev;

  VecX rbar(nu);
  for (int k = 0; k < np; ++k) rbar.segment(3 * k, 3) = prob.r_diag;

  // 0.5 U' P U + q' U with P = 2(G'QG + D'RD).
  const MatX gq = gamma.transpose() * qbar.asDiagonal();
  qp::Problem qp_prob;
  qp_prob.p = 2.0 * (gq * gamma + dmat.transpose() * rbar.asDiagonal() * dmat);
  const VecX x_free = phi * x0 + d_vec - xref;
  qp_prob.q = 2.0 * (gq * x_free - dmat.transpose() * rbar.asDiagonal() * e_uprev);

  // Rows: box on U then box on dU.
  qp_prob.a = MatX::Zero(2 * nu, nu);
  qp_prob.a.topRows(nu) = MatX::Identity(nu, nu);
  qp_prob.a.bottomRows(nu) = dmat;
  qp_prob.lower = VecX(2 * nu);
  qp_prob.upper = VecX(2 * nu);
  for (int k = 0; k < np; ++k) {
    for (int i = 0; i < 3; ++i) {
      qp_prob.lower[3 * k + i] = prob.u_min[i];
      qp_prob.upper[3 * k + i] = prob.u_max[i];
      qp_prob.lower[nu + 3 * k + i] = prob.du_min[i] + (k == 0 ? u_prev[i] : 0.0);
      qp_prob.upper[nu + 3 * k + i] = prob.du_max[i] + (k == 0 ? u_prev[i] : 0.0);
    }
  }

  qp::Settings settings;
  settings.eps_abs = 1e-8;
  settings.eps_rel = 1e-8;
  settings.max_iter = 3000;

  VecX warm_z;
  if (warm && static_cast<int>(warm->sequence.size()) == np) {
    warm_z = VecX::Zero(nu);
    // Shift the previous sequence one step.
    for (int k = 0; k < np; ++k) {
      const int src = std::min(k + 1, np - 1);
      warm_z.segment(3 * k, 3) = warm->sequence[src];
    }
  }
  qp::Result sol = qp::solve(qp_prob, settings, warm_z.size() ? &warm_z : nullptr);
  if (!sol.converged && sol.primal_residual > 1e-4) {
    throw Error(Error::Kind::Numerical, "mpc_step: QP did not converge");
  }

  MpcSolution out;
  out.qp_iterations = sol.iterations;
  out.converged = sol.converged;
  out.sequence.resize(np);
  for (int k = 0; k < np; ++k) out.sequence[k] = sol.z.segment(3 * k, 3);
  out.u_cmd = out.sequence[0];

  // Tracking cost evaluated directly on the optimal sequence.
  const VecX x_pred = phi * x0 + gamma * sol.z + d_vec;
  double j = 0.0;
  for (int k = 1; k <= np; ++k) {
    const VecX err = x_pred.segment(6 * (k - 1), 6) - reference.states[k];
    const Vec6 w = (k == np) ? prob.p_diag : prob.q_diag;
    j += err.cwiseProduct(w.cwiseSqrt()).squaredNorm();
  }
  {
    Vec3 prev = u_prev;
    for (int k = 0; k < np; ++k) {
      const Vec3 du = out.sequence[k] - prev;
      j += du.cwiseProduct(prob.r_diag.cwiseSqrt()).squaredNorm();
      prev = out.sequence[k];
    }
  }
  out.cost = j;
  return out;
}

MpcReference sample_reference(const planner::Trajectory& traj, double t,
                              const MpcProblem& problem,
                              const PlatformForecast* forecast) {
  MpcReference ref;
  ref.states.resize(problem.horizon + 1);
  for (int k = 0; k <= problem.horizon; ++k) {
    const double tk = t + k * problem.ts;
    Vec6 s;
    if (tk <= traj.end_time() || forecast == nullptr) {
      const UavState st = traj.state_at(tk);
      s << st.position, st.velocity;
    } else {
      // Past touchdown: ride the deck point.
      s << planner::deck_position(*forecast, tk), planner::deck_velocity(*forecast, tk);
    }
    ref.states[k] = s;
  }
  return ref;
}

MpcSolution mpc_step(const UavState& current, const planner::Trajectory& reference,
                     double t, const MpcProblem& problem, const Vec3& u_prev,
                     const Vec3& d_hat) {
  if (reference.end_time() < t + problem.horizon * problem.ts - 1e-9) {
    throw Error(Error::Kind::Parameter,
                "mpc_step: trajectory does not span the prediction horizon");
  }
  return mpc_step(current, sample_reference(reference, t, problem, nullptr), problem,
                  u_prev, d_hat);
}

MpcReference blend_velocity_matching(const MpcReference& reference,
                                     const Vec3& deck_velocity, Phase phase) {
  if (phase == Phase::Approach) return reference;
  MpcReference out = reference;
  for (auto& s : out.states) {
    s[3] = deck_velocity.x();
    s[4] = deck_velocity.y();
  }
  return out;
}

Vec3 clamp_control_norm(const Vec3& u, double u_max) {
  const double n = u.norm();
  if (n <= u_max || n < 1e-12) return u;
  return u * (u_max / n);
}

}  // namespace specfuse::controller
