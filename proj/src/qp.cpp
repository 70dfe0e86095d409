#include "specfuse/qp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace specfuse::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Equality-KKT solve on the detected active set; returns false when the
// refined point is worse than the ADMM iterate.
bool polish_solution(const Problem& prob, Result& res) {
  const int n = static_cast<int>(prob.q.size());
  const int m = static_cast<int>(prob.lower.size());

  std::vector<int> active;
  std::vector<double> bound;
  const VecX ax = prob.a * res.z;
  for (int i = 0; i < m; ++i) {
    const double tol = 1e-6 * std::max(1.0, std::abs(ax[i]));
    if (std::isfinite(prob.lower[i]) &&
        (ax[i] - prob.lower[i] < tol || res.y[i] < -1e-8)) {
      if (std::abs(ax[i] - prob.lower[i]) < std::abs(ax[i] - prob.upper[i]) ||
          !std::isfinite(prob.upper[i])) {
        active.push_back(i);
        bound.push_back(prob.lower[i]);
        continue;
      }
    }
    if (std::isfinite(prob.upper[i]) &&
        (prob.upper[i] - ax[i] < tol || res.y[i] > 1e-8)) {
      active.push_back(i);
      bound.push_back(prob.upper[i]);
    }
  }

  const int k = static_cast<int>(active.size());
  MatX kkt = MatX::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = prob.p;
  kkt.topLeftCorner(n, n).diagonal().array() += 1e-12;
  VecX rhs(n + k);
  rhs.head(n) = -prob.q;
  for (int j = 0; j < k; ++j) {
    kkt.block(n + j, 0, 1, n) = prob.a.row(active[j]);
    kkt.block(0, n + j, n, 1) = prob.a.row(active[j]).transpose();
    rhs[n + j] = bound[j];
  }
  Eigen::LDLT<MatX> ldlt(kkt);
  if (ldlt.info() != Eigen::Success) return false;
  VecX sol = ldlt.solve(rhs);
  if (!sol.allFinite()) return false;

  VecX z = sol.head(n);
  const VecX az = prob.a * z;
  for (int i = 0; i < m; ++i) {
    if (az[i] < prob.lower[i] - 1e-7 || az[i] > prob.upper[i] + 1e-7) return false;
  }
  res.z = z;
  for (int j = 0; j < k; ++j) res.y[active[j]] = sol[n + j];
  return true;
}

}  // namespace

Result solve(const Problem& prob, const Settings& st, const VecX* warm_z,
             const VecX* warm_y) {
  const int n = static_cast<int>(prob.q.size());
  const int m = static_cast<int>(prob.lower.size());
  for (int i = 0; i < m; ++i) {
    if (prob.lower[i] > prob.upper[i]) {
      throw Error(Error::Kind::Parameter, "qp::solve: lower bound exceeds upper bound");
    }
  }

  Result res;
  res.z = (warm_z && warm_z->size() == n) ? *warm_z : VecX::Zero(n);
  res.y = (warm_y && warm_y->size() == m) ? *warm_y : VecX::Zero(m);
  VecX slack = prob.a * res.z;

  double rho = st.rho;
  auto factorize = [&](double r) {
    MatX lhs = prob.p + st.sigma * MatX::Identity(n, n) +
               r * prob.a.transpose() * prob.a;
    return Eigen::LDLT<MatX>(lhs);
  };
  Eigen::LDLT<MatX> ldlt = factorize(rho);

  const int check_every = 10;
  for (int it = 1; it <= st.max_iter; ++it) {
    VecX rhs = st.sigma * res.z - prob.q + prob.a.transpose() * (rho * slack - res.y);
    VecX x = ldlt.solve(rhs);
    VecX ax = prob.a * x;
    slack = ax + res.y / rho;
    for (int i = 0; i < m; ++i) slack[i] = std::clamp(slack[i], prob.lower[i], prob.upper[i]);
    res.y += rho * (ax - slack);
    res.z = x;
    res.iterations = it;

    if (it % check_every == 0 || it == st.max_iter) {
      const VecX prim = ax - slack;
      const VecX dual = prob.p * res.z + prob.q + prob.a.transpose() * res.y;
      res.primal_residual = m > 0 ? prim.lpNorm<Eigen::Infinity>() : 0.0;
      res.dual_residual = dual.lpNorm<Eigen::Infinity>();
      const double prim_scale =
          std::max({m > 0 ? ax.lpNorm<Eigen::Infinity>() : 0.0,
                    m > 0 ? slack.lpNorm<Eigen::Infinity>() : 0.0, 1.0});
      const double dual_scale =
          std::max({(prob.p * res.z).lpNorm<Eigen::Infinity>(),
                    prob.q.lpNorm<Eigen::Infinity>(),
                    m > 0 ? (prob.a.transpose() * res.y).lpNorm<Eigen::Infinity>() : 0.0, 1.0});
      if (res.primal_residual <= st.eps_abs + st.eps_rel * prim_scale &&
          res.dual_residual <= st.eps_abs + st.eps_rel * dual_scale) {
        res.converged = true;
        break;
      }
      // Residual-balancing rho adaptation (refactorizes; cheap at this size).
      if (it % 100 == 0 && m > 0) {
        double ratio = (res.primal_residual + 1e-16) / (res.dual_residual + 1e-16);
        if (ratio > 10.0 || ratio < 0.1) {
          rho = std::clamp(rho * std::sqrt(ratio), 1e-6, 1e6);
          ldlt = factorize(rho);
        }
      }
    }
  }

  if (st.polish && m > 0) polish_solution(prob, res);
  return res;
}

}  // namespace specfuse::qp
