#include "specfuse/svr.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace specfuse::controller {

double mixed_kernel(const VecX& x, const VecX& y, const KernelParams& params) {
  const double a = params.alpha_mix;
  double rbf = 0.0;
  if (a > 0.0) {
    rbf = std::exp(-params.rbf_gamma * (x - y).squaredNorm());
  }
  double poly = 0.0;
  if (a < 1.0) {
    poly = std::pow(x.dot(y) + params.poly_offset, params.poly_degree);
  }
  return a * rbf + (1.0 - a) * poly;
}

double SvrModel::predict(const VecX& x) const {
  if (x.size() != feature_dim) {
    throw Error(Error::Kind::Parameter, "SvrModel::predict: feature dimension mismatch");
  }
  double v = bias;
  for (int i = 0; i < static_cast<int>(support_vectors.size()); ++i) {
    v += coefficients[i] * mixed_kernel(support_vectors[i], x, kernel);
  }
  return v;
}

SvrModel train_velocity_svr(const std::vector<VecX>& features,
                            const std::vector<double>& targets,
                            const SvrTrainParams& params) {
  const int n = static_cast<int>(features.size());
  if (n < 10 || targets.size() != features.size()) {
    throw Error(Error::Kind::Parameter, "train_velocity_svr: need >= 10 samples");
  }
  if (!(params.c > 0.0) || params.epsilon < 0.0) {
    throw Error(Error::Kind::Parameter, "train_velocity_svr: C > 0 and epsilon >= 0 required");
  }
  const int d = static_cast<int>(features[0].size());
  for (const auto& f : features) {
    if (f.size() != d) {
      throw Error(Error::Kind::Parameter, "train_velocity_svr: inconsistent feature dims");
    }
  }
  // Degenerate dataset: all features identical leaves the kernel constant.
  double spread = 0.0;
  for (int i = 1; i < n; ++i) spread = std::max(spread, (features[i] - features[0]).norm());
  if (spread < 1e-12) {
    throw Error(Error::Kind::Parameter, "train_velocity_svr: all features identical");
  }

  KernelParams kernel = params.kernel;
  if (kernel.rbf_gamma <= 0.0) kernel.rbf_gamma = 1.0 / d;

  MatX k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      k(i, j) = k(j, i) = mixed_kernel(features[i], features[j], kernel);
    }
  }

  // Pairwise optimization on the net dual coefficients beta = alpha - alpha*:
  //   min 0.5 b'Kb + eps |b|_1 - y'b   s.t.  sum(b) = 0,  |b_i| <= C.
  // Stationarity gives a per-sample interval [lo_i, hi_i] for the equality
  // multiplier (the bias); the maximal violating pair is the largest lo
  // against the smallest hi.
  const double c = params.c;
  const double eps = params.epsilon;
  VecX beta = VecX::Zero(n);
  VecX kbeta = VecX::Zero(n);  // K * beta

  auto mu_bounds = [&](int i, double& lo, double& hi) {
    const double f = kbeta[i] - targets[i];  // F_i
    const bool at_hi = std::abs(beta[i] - c) < 1e-12;
    const bool at_lo = std::abs(beta[i] + c) < 1e-12;
    if (beta[i] > 1e-12) {
      lo = at_hi ? -std::numeric_limits<double>::infinity() : -f - eps;
      hi = -f - eps;
    } else if (beta[i] < -1e-12) {
      lo = -f + eps;
      hi = at_lo ? std::numeric_limits<double>::infinity() : -f + eps;
    } else {
      lo = -f - eps;
      hi = -f + eps;
    }
  };

  double residual = std::numeric_limits<double>::infinity();
  for (long pass = 0; pass < params.max_passes; ++pass) {
    int u = -1, l = -1;
    double lo_max = -std::numeric_limits<double>::infinity();
    double hi_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double lo, hi;
      mu_bounds(i, lo, hi);
      if (lo > lo_max) {
        lo_max = lo;
        u = i;
      }
      if (hi < hi_min) {
        hi_min = hi;
        l = i;
      }
    }
    residual = lo_max - hi_min;
    if (u < 0 || l < 0 || u == l || residual < params.kkt_tol) break;

    // Exact minimization of the convex piecewise quadratic along
    // beta_u += d, beta_l -= d within the box.
    const double eta = std::max(k(u, u) + k(l, l) - 2.0 * k(u, l), 1e-12);
    const double fu = kbeta[u] - targets[u];
    const double fl = kbeta[l] - targets[l];
    const double d_min = std::max(-c - beta[u], beta[l] - c);
    const double d_max = std::min(c - beta[u], beta[l] + c);
    auto gval = [&](double d) {
      return 0.5 * eta * d * d + (fu - fl) * d +
             eps * (std::abs(beta[u] + d) + std::abs(beta[l] - d));
    };
    double best_d = 0.0;
    double best_g = gval(0.0);
    auto consider = [&](double d) {
      if (d < d_min || d > d_max) return;
      const double g = gval(d);
      if (g < best_g - 1e-15) {
        best_g = g;
        best_d = d;
      }
    };
    for (double s1 : {-1.0, 1.0}) {
      for (double s2 : {-1.0, 1.0}) {
        const double d = -(fu - fl + eps * (s1 - s2)) / eta;
        // Root valid only inside its sign regime.
        if (s1 * (beta[u] + d) >= -1e-15 && s2 * (beta[l] - d) >= -1e-15) consider(d);
      }
    }
    consider(-beta[u]);
    consider(beta[l]);
    consider(d_min);
    consider(d_max);
    if (std::abs(best_d) < 1e-15) break;

    beta[u] += best_d;
    beta[l] -= best_d;
    for (int t = 0; t < n; ++t) kbeta[t] += (k(t, u) - k(t, l)) * best_d;
  }

  // Bias b = multiplier mu: average over free support vectors, otherwise the
  // midpoint of the residual interval.
  double b = 0.0;
  int free_count = 0;
  for (int i = 0; i < n; ++i) {
    if (beta[i] > 1e-9 && beta[i] < c - 1e-9) {
      b += targets[i] - kbeta[i] - eps;
      ++free_count;
    } else if (beta[i] < -1e-9 && beta[i] > -c + 1e-9) {
      b += targets[i] - kbeta[i] + eps;
      ++free_count;
    }
  }
  if (free_count > 0) {
    b /= free_count;
  } else {
    double lo_max = -std::numeric_limits<double>::infinity();
    double hi_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double lo, hi;
      mu_bounds(i, lo, hi);
      lo_max = std::max(lo_max, lo);
      hi_min = std::min(hi_min, hi);
    }
    if (std::isfinite(lo_max) && std::isfinite(hi_min)) b = 0.5 * (lo_max + hi_min);
  }

  SvrModel model;
  model.kernel = kernel;
  model.c = c;
  model.epsilon = params.epsilon;
  model.feature_dim = d;
  model.bias = b;
  model.kkt_residual = residual;
  for (int i = 0; i < n; ++i) {
    if (std::abs(beta[i]) > 1e-10) {
      model.support_vectors.push_back(features[i]);
    }
  }
  model.coefficients = VecX::Zero(static_cast<int>(model.support_vectors.size()));
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(beta[i]) > 1e-10) model.coefficients[idx++] = beta[i];
  }
  return model;
}

std::string SvrModel::to_json() const {
  nlohmann::json j;
  j["format"] = "specfuse-svr";
  j["version"] = 1;
  j["kernel"] = {{"alpha_mix", kernel.alpha_mix},
                 {"rbf_gamma", kernel.rbf_gamma},
                 {"poly_degree", kernel.poly_degree},
                 {"poly_offset", kernel.poly_offset}};
  j["c"] = c;
  j["epsilon"] = epsilon;
  j["bias"] = bias;
  j["feature_dim"] = feature_dim;
  j["kkt_residual"] = kkt_residual;
  auto& sv = j["support_vectors"] = nlohmann::json::array();
  for (const auto& v : support_vectors) {
    sv.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  j["coefficients"] = std::vector<double>(coefficients.data(),
                                          coefficients.data() + coefficients.size());
  return j.dump(2);
}

SvrModel SvrModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "specfuse-svr") {
    throw Error(Error::Kind::Format, "SvrModel::from_json: not an SVR model file");
  }
  SvrModel m;
  m.kernel.alpha_mix = j["kernel"]["alpha_mix"];
  m.kernel.rbf_gamma = j["kernel"]["rbf_gamma"];
  m.kernel.poly_degree = j["kernel"]["poly_degree"];
  m.kernel.poly_offset = j["kernel"]["poly_offset"];
  m.c = j["c"];
  m.epsilon = j["epsilon"];
  m.bias = j["bias"];
  m.feature_dim = j["feature_dim"];
  m.kkt_residual = j.value("kkt_residual", 0.0);
  for (const auto& v : j["support_vectors"]) {
    VecX x(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<int>(i)] = v[i];
    m.support_vectors.push_back(std::move(x));
  }
  const auto& cj = j["coefficients"];
  m.coefficients = VecX::Zero(static_cast<int>(cj.size()));
  for (std::size_t i = 0; i < cj.size(); ++i) m.coefficients[static_cast<int>(i)] = cj[i];
  return m;
}

}  // namespace specfuse::controller
