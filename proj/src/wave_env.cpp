#include "specfuse/wave_env.hpp"

#include <algorithm>
#include <cmath>

namespace specfuse::wave_env {

double jonswap_density(double f, double hs, double tp, double gamma) {
  if (f <= 0.0) return 0.0;
  const double fp = 1.0 / tp;
  const double sigma = f <= fp ? 0.07 : 0.09;
  const double r = std::exp(-(f - fp) * (f - fp) / (2.0 * sigma * sigma * fp * fp));
  // Pierson-Moskowitz base shape scaled by Hs^2; the absolute level is fixed
  // afterwards by renormalizing bin energies to m0 = (Hs/4)^2.
  const double base = hs * hs * std::pow(fp, 4) * std::pow(f, -5.0) *
                      std::exp(-1.25 * std::pow(fp / f, 4));
  return base * std::pow(gamma, r);
}

namespace {

// Cumulative spectral energy on a fine grid over [f_lo, f_hi].
struct EnergyCdf {
  std::vector<double> freq;
  std::vector<double> cum;  // cum[i] = integral of S up to freq[i]
  double total = 0.0;

  // Frequency at which the cumulative energy reaches fraction q of total.
  double quantile(double q) const {
    double target = q * total;
    auto it = std::lower_bound(cum.begin(), cum.end(), target);
    if (it == cum.begin()) return freq.front();
    if (it == cum.end()) return freq.back();
    std::size_t i = static_cast<std::size_t>(it - cum.begin());
    double c0 = cum[i - 1], c1 = cum[i];
    double a = c1 > c0 ? (target - c0) / (c1 - c0) : 0.0;
    return freq[i - 1] + a * (freq[i] - freq[i - 1]);
  }
};

EnergyCdf build_cdf(double hs, double tp) {
  const double f_lo = 0.5 / tp, f_hi = 3.0 / tp;
  const int grid = 4096;
  EnergyCdf cdf;
  cdf.freq.resize(grid + 1);
  cdf.cum.resize(grid + 1);
  const double df = (f_hi - f_lo) / grid;
  double acc = 0.0;
  double prev_s = jonswap_density(f_lo, hs, tp);
  cdf.freq[0] = f_lo;
  cdf.cum[0] = 0.0;
  for (int i = 1; i <= grid; ++i) {
    double f = f_lo + i * df;
    double s = jonswap_density(f, hs, tp);
    acc += 0.5 * (prev_s + s) * df;
    cdf.freq[i] = f;
    cdf.cum[i] = acc;
    prev_s = s;
  }
  cdf.total = acc;
  return cdf;
}

}  // namespace

SeaState synthesize_sea(double hs, double tp, int n_components, uint64_t seed,
                        const PoseResponseGains& gains) {
  if (!(hs > 0.0) || !(tp > 0.0)) {
    throw Error(Error::Kind::Parameter, "synthesize_sea: Hs and Tp must be positive");
  }
  if (n_components < 1) {
    throw Error(Error::Kind::Parameter, "synthesize_sea: need at least one component");
  }

  SeaState sea;
  sea.hs = hs;
  sea.tp = tp;
  sea.rng_seed = seed;

  // Equal-energy binning: each component carries m0/n of the elevation
  // energy, with its frequency at the bin's energy median. The degenerate
  // one-bin spectrum collapses to a pure sinusoid at the peak frequency.
  const double m0 = (hs / 4.0) * (hs / 4.0);
  std::vector<double> freqs(n_components);
  if (n_components == 1) {
    freqs[0] = 1.0 / tp;
  } else {
    EnergyCdf cdf = build_cdf(hs, tp);
    for (int i = 0; i < n_components; ++i) {
      freqs[i] = cdf.quantile((i + 0.5) / n_components);
    }
  }
  const double elevation_amp = std::sqrt(2.0 * m0 / n_components);

  Rng rng(seed);
  for (int d = 0; d < kNumDof; ++d) {
    Rng stream = rng.fork(static_cast<uint64_t>(d));
    auto& set = sea.harmonics[d];
    set.reserve(freqs.size());
    for (double f : freqs) {
      double phase = stream.uniform(0.0, kTwoPi);
      set.emplace_back(elevation_amp * gains.gain[d], f, phase);
    }
  }
  return sea;
}

PlatformState platform_truth(const SeaState& sea, double t) {
  PlatformState st;
  st.time = t;
  for (int d = 0; d < kNumDof; ++d) {
    double v = 0.0, r = 0.0;
    for (const auto& h : sea.harmonics[d]) {
      v += h.eval(t);
      r += h.eval_rate(t);
    }
    if (d < 3) {
      st.position[d] = v;
      st.lin_vel[d] = r;
    } else {
      st.attitude[d - 3] = v;
      st.ang_vel[d - 3] = r;
    }
  }
  return st;
}

double dominant_frequency(const SeaState& sea) {
  const auto& heave = sea.harmonics[static_cast<int>(Dof::Heave)];
  double e = 0.0, fe = 0.0;
  for (const auto& h : heave) {
    double w = h.amplitude * h.amplitude;
    e += w;
    fe += w * h.frequency;
  }
  return e > 0.0 ? fe / e : 0.0;
}

WindSim::WindSim(const WindParams& params) : params_(params), rng_(params.rng_seed) {
  if (params_.mean_velocity < 0.0 || params_.turbulence_sigma < 0.0) {
    throw Error(Error::Kind::Parameter, "WindSim: negative mean velocity or sigma");
  }
  mean_ = Vec3(params_.mean_velocity, 0.0, 0.0);
  const double v_ref = std::max(params_.mean_velocity, 1.0);
  for (int i = 0; i < 3; ++i) {
    tau_[i] = std::max(params_.length_scales[i] / v_ref, 1e-3);
  }
}

Vec3 WindSim::step(double dt) {
  if (!(dt > 0.0)) throw Error(Error::Kind::Parameter, "WindSim::step: dt must be > 0");
  const double sigma = params_.turbulence_sigma;
  for (int i = 0; i < 3; ++i) {
    // Exact AR(1) discretization of the first-order shaping filter; the
    // injection gain keeps the stationary std equal to sigma for any dt.
    double a = std::exp(-dt / tau_[i]);
    double b = sigma * std::sqrt(std::max(0.0, 1.0 - a * a));
    gust_[i] = a * gust_[i] + b * rng_.gaussian();
  }
  if (sigma == 0.0) gust_.setZero();
  return mean_ + gust_;
}

ImuSample imu_measure(const PlatformState& state, const Vec3& noise_std_att,
                      const Vec3& noise_std_rate, Rng& stream) {
  for (int i = 0; i < 3; ++i) {
    if (noise_std_att[i] < 0.0 || noise_std_rate[i] < 0.0) {
      throw Error(Error::Kind::Parameter, "imu_measure: negative noise std");
    }
  }
  ImuSample s;
  s.time = state.time;
  s.noise_std_att = noise_std_att;
  s.noise_std_rate = noise_std_rate;
  for (int i = 0; i < 3; ++i) {
    s.attitude[i] = state.attitude[i] +
                    (noise_std_att[i] > 0.0 ? stream.gaussian(0.0, noise_std_att[i]) : 0.0);
    s.ang_vel[i] = state.ang_vel[i] +
                   (noise_std_rate[i] > 0.0 ? stream.gaussian(0.0, noise_std_rate[i]) : 0.0);
  }
  return s;
}

}  // namespace specfuse::wave_env
