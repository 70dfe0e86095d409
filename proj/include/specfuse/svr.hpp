#ifndef SPECFUSE_SVR_HPP
#define SPECFUSE_SVR_HPP

#include <string>
#include <vector>

#include "specfuse/types.hpp"

namespace specfuse::controller {

struct KernelParams {
  double alpha_mix = 0.5;  // RBF weight; 1 - alpha_mix goes to the polynomial
  double rbf_gamma = 0.0;  // 0 -> 1/d at training time
  int poly_degree = 2;
  double poly_offset = 1.0;
};

/// alpha * exp(-gamma |x-x'|^2) + (1-alpha) * (x.x' + offset)^degree.
double mixed_kernel(const VecX& x, const VecX& y, const KernelParams& params);

struct SvrTrainParams {
  double c = 10.0;
  double epsilon = 0.01;
  KernelParams kernel;
  double kkt_tol = 1e-3;
  long max_passes = 200000;
};

/// Trained epsilon-SVR: prediction is sum coef_i K(x_i, x) + bias.
struct SvrModel {
  std::vector<VecX> support_vectors;
  VecX coefficients;  // beta_i = alpha_i - alpha_i^*, |beta_i| <= C
  double bias = 0.0;
  KernelParams kernel;
  double c = 0.0;
  double epsilon = 0.0;
  int feature_dim = 0;
  double kkt_residual = 0.0;

  double predict(const VecX& x) const;

  /// Versioned JSON round trip for persistence.
  std::string to_json() const;
  static SvrModel from_json(const std::string& text);
};

/// Solves the epsilon-SVR dual (box [0, C], sum(alpha - alpha*) = 0) with a
/// maximal-violating-pair SMO loop until the KKT residual drops under tol.
SvrModel train_velocity_svr(const std::vector<VecX>& features,
                            const std::vector<double>& targets,
                            const SvrTrainParams& params = {});

}  // namespace specfuse::controller

#endif  // SPECFUSE_SVR_HPP
