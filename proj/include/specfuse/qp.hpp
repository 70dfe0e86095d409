#ifndef SPECFUSE_QP_HPP
#define SPECFUSE_QP_HPP

#include "specfuse/types.hpp"

namespace specfuse::qp {

/// Dense convex QP:  min 0.5 z'Pz + q'z   s.t.  l <= Az <= u.
struct Problem {
  MatX p;  // n x n, symmetric PSD
  VecX q;  // n
  MatX a;  // m x n
  VecX lower;  // m, -inf allowed
  VecX upper;  // m, +inf allowed
};

struct Settings {
  double rho = 0.1;
  double sigma = 1e-6;
  double eps_abs = 1e-9;
  double eps_rel = 1e-9;
  int max_iter = 4000;
  bool polish = true;  // active-set refinement after convergence
};

struct Result {
  VecX z;             // primal solution
  VecX y;             // dual for the constraint rows
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Operator-splitting (ADMM) solver with an equality-KKT polish step on the
/// active set. Suited to the small dense problems the planner and controller
/// build. Optionally warm-started.
Result solve(const Problem& prob, const Settings& settings = {},
             const VecX* warm_z = nullptr, const VecX* warm_y = nullptr);

}  // namespace specfuse::qp

#endif  // SPECFUSE_QP_HPP
