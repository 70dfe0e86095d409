#ifndef SPECFUSE_WAVE_ENV_HPP
#define SPECFUSE_WAVE_ENV_HPP

#include <array>
#include <vector>

#include "specfuse/rng.hpp"
#include "specfuse/types.hpp"

namespace specfuse::wave_env {

/// Per-DoF linear gains mapping wave-elevation amplitude to DoF amplitude.
/// Translations are m per m of elevation, attitudes rad per m.
struct PoseResponseGains {
  std::array<double, kNumDof> gain{0.2, 0.2, 1.0, 0.0776, 0.0776, 0.0155};
};

/// Sum-of-sinusoids sea: per-DoF harmonic sets sampled from a JONSWAP spectrum.
struct SeaState {
  double hs = 0.0;  // significant wave height [m]
  double tp = 0.0;  // peak period [s]
  std::array<std::vector<HarmonicComponent>, kNumDof> harmonics{};
  uint64_t rng_seed = 0;
};

struct WindParams {
  double mean_velocity = 0.0;          // m/s, blows along +x
  double turbulence_sigma = 0.0;       // m/s, per-axis gust std
  Vec3 length_scales{50.0, 50.0, 20.0};  // Dryden scales at deck height [m]
  uint64_t rng_seed = 0;
};

/// JONSWAP spectral density S(f) [m^2 s] with peak enhancement gamma.
double jonswap_density(double f, double hs, double tp, double gamma = 3.3);

/// Discretizes the JONSWAP spectrum over [0.5/Tp, 3/Tp] into n equal-energy
/// bins and builds per-DoF harmonic sets with uniformly random phases.
/// Heave amplitudes carry the spectral energy exactly: sum A_i^2 / 2 = (Hs/4)^2.
SeaState synthesize_sea(double hs, double tp, int n_components, uint64_t seed,
                        const PoseResponseGains& gains = {});

/// Analytic evaluation of the sea at time t (pose and exact derivative rates).
PlatformState platform_truth(const SeaState& sea, double t);

/// Amplitude-weighted energy centroid of the heave harmonic set [Hz].
double dominant_frequency(const SeaState& sea);

/// Dryden gust generator: first-order shaping filter per axis driven by
/// seeded white noise. Output is mean wind plus the colored gust.
class WindSim {
 public:
  explicit WindSim(const WindParams& params);

  /// Advances the filters by dt and returns the wind vector [m/s].
  Vec3 step(double dt);

  Vec3 current() const { return mean_ + gust_; }
  const WindParams& params() const { return params_; }

 private:
  WindParams params_;
  Rng rng_;
  Vec3 mean_ = Vec3::Zero();
  Vec3 gust_ = Vec3::Zero();
  Vec3 tau_ = Vec3::Ones();
};

/// Truth plus independent zero-mean Gaussian noise per channel. The stream
/// argument supplies the seeded noise source.
ImuSample imu_measure(const PlatformState& state, const Vec3& noise_std_att,
                      const Vec3& noise_std_rate, Rng& stream);

}  // namespace specfuse::wave_env

#endif  // SPECFUSE_WAVE_ENV_HPP
