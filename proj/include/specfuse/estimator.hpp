#ifndef SPECFUSE_ESTIMATOR_HPP
#define SPECFUSE_ESTIMATOR_HPP

#include <deque>
#include <vector>

#include "specfuse/types.hpp"

namespace specfuse::estimator {

struct FilterConfig {
  double q_scale = 1e-5;      // process noise: q_scale * omega_i^2 per block
  double r_attitude = 1e-4;   // measurement variance on the value channel
  double r_rate = 0.0;        // variance on the rate channel; 0 -> derived
  double nis_window = 1.0;    // s of innovation history behind the confidence
};

/// Stacked two-state harmonic oscillator filter for one DoF channel.
/// State per harmonic: [displacement component, velocity component].
class FilterState {
 public:
  /// Components must carry distinct positive frequencies; phases are taken as
  /// the instantaneous phase at init_time.
  FilterState(const std::vector<HarmonicComponent>& components, double init_time,
              const FilterConfig& cfg = {});

  int harmonic_count() const { return static_cast<int>(freqs_.size()); }
  int dim() const { return 2 * harmonic_count(); }
  double last_update_time() const { return t_obs_; }
  const VecX& state() const { return x_; }
  const MatX& covariance() const { return p_; }
  const std::vector<double>& frequencies() const { return freqs_; }

  /// Advances the state by dt with the exact oscillator rotation per block
  /// and inflates the covariance by the process noise.
  void predict(double dt);

  /// Incorporates one (value, rate) measurement pair. The observation model
  /// sums displacement components on row one and velocity components on row
  /// two. Throws on a singular innovation covariance.
  void update(double value, double rate, double time);

  /// Current amplitude and instantaneous phase per harmonic (quadrant-correct).
  struct Params {
    double amplitude = 0.0;
    double phase = 0.0;  // rad in [0, 2*pi)
  };
  std::vector<Params> recover_params() const;

  /// Sum of displacement components = current reconstructed signal value.
  double reconstructed_value() const;
  double reconstructed_rate() const;

  /// Conditioned forecast from the recovered parameters, sampled every
  /// sample_period over [t_obs, t_obs + horizon].
  void forecast(double horizon, double sample_period, std::vector<double>& values,
                std::vector<double>& rates) const;

  /// exp(-mean NIS / (2 N)) over the trailing window; 1 when no innovations
  /// have been recorded yet.
  double confidence() const;
  double mean_nis() const;
  bool has_update() const { return update_count_ > 0; }

  /// Smallest eigenvalue of the (symmetrized) covariance, for the PSD checks.
  double min_covariance_eigenvalue() const;

 private:
  std::vector<double> freqs_;
  VecX x_;
  MatX p_;
  MatX q_;
  Eigen::Matrix2d r_;
  double t_obs_ = 0.0;
  long update_count_ = 0;
  double nis_window_s_ = 1.0;
  std::deque<std::pair<double, double>> nis_history_;  // (time, nis)
};

/// Per-DoF pipeline outputs assembled into a 6-DoF forecast at 50 Hz.
/// Channels must all be present; missing ones raise a partial-forecast error
/// naming the DoFs.
PlatformForecast predict_6dof(const std::array<const FilterState*, kNumDof>& channels,
                              double horizon, double sample_period = 0.02);

}  // namespace specfuse::estimator

#endif  // SPECFUSE_ESTIMATOR_HPP
