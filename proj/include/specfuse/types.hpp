#ifndef SPECFUSE_TYPES_HPP
#define SPECFUSE_TYPES_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace specfuse {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Degrees of freedom of the floating platform, in storage order.
enum class Dof : int { Surge = 0, Sway = 1, Heave = 2, Roll = 3, Pitch = 4, Yaw = 5 };

inline constexpr int kNumDof = 6;

inline const char* dof_name(Dof d) {
  static const char* names[] = {"surge", "sway", "heave", "roll", "pitch", "yaw"};
  return names[static_cast<int>(d)];
}

inline bool is_attitude_dof(Dof d) { return static_cast<int>(d) >= 3; }

/// Wraps an angle into [0, 2*pi).
inline double wrap_phase(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  return p;
}

/// One sinusoid of a platform DoF signal: A * sin(2*pi*f*t + phase).
struct HarmonicComponent {
  double amplitude = 0.0;  // signal units (m or rad), >= 0
  double frequency = 0.0;  // Hz, > 0
  double phase = 0.0;      // rad, kept in [0, 2*pi)

  HarmonicComponent() = default;
  HarmonicComponent(double a, double f, double p)
      : amplitude(a), frequency(f), phase(wrap_phase(p)) {}

  double eval(double t) const { return amplitude * std::sin(kTwoPi * frequency * t + phase); }
  double eval_rate(double t) const {
    return amplitude * kTwoPi * frequency * std::cos(kTwoPi * frequency * t + phase);
  }
  /// Same sinusoid with the phase re-referenced to a time origin shifted by dt.
  HarmonicComponent shifted(double dt) const {
    return {amplitude, frequency, wrap_phase(phase + kTwoPi * frequency * dt)};
  }
};

/// 6-DoF pose and rates of the platform at one instant.
struct PlatformState {
  double time = 0.0;
  Vec3 position = Vec3::Zero();   // x, y, z [m]
  Vec3 attitude = Vec3::Zero();   // roll, pitch, yaw [rad]
  Vec3 lin_vel = Vec3::Zero();    // m/s
  Vec3 ang_vel = Vec3::Zero();    // rad/s

  double dof_value(Dof d) const {
    int i = static_cast<int>(d);
    return i < 3 ? position[i] : attitude[i - 3];
  }
  double dof_rate(Dof d) const {
    int i = static_cast<int>(d);
    return i < 3 ? lin_vel[i] : ang_vel[i - 3];
  }
};

/// Noisy attitude observation of the platform (value + rate per rotational channel).
struct ImuSample {
  double time = 0.0;
  Vec3 attitude = Vec3::Zero();       // measured roll, pitch, yaw [rad]
  Vec3 ang_vel = Vec3::Zero();        // measured rates [rad/s]
  Vec3 noise_std_att = Vec3::Zero();  // per-channel std used when sampling
  Vec3 noise_std_rate = Vec3::Zero();
};

/// UAV point-mass state used by planner, controller and simulation.
struct UavState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 attitude = Vec3::Zero();  // roll, pitch, yaw [rad]
};

/// Per-DoF forecast of the platform motion on a uniform time grid.
struct PlatformForecast {
  double start_time = 0.0;      // t_obs: forecast anchored at the last observation
  double horizon = 0.0;         // s
  double sample_period = 0.02;  // s (50 Hz)
  // series[d][k] is the DoF d value at start_time + k * sample_period.
  std::array<std::vector<double>, kNumDof> series{};
  std::array<std::vector<double>, kNumDof> rate_series{};
  std::array<double, kNumDof> confidence{1, 1, 1, 1, 1, 1};

  int sample_count() const {
    return static_cast<int>(std::floor(horizon / sample_period)) + 1;
  }
  double end_time() const { return start_time + horizon; }

  /// Linear interpolation of a DoF value at absolute time t (clamped to the grid).
  double value_at(Dof d, double t) const {
    return interp(series[static_cast<int>(d)], t);
  }
  double rate_at(Dof d, double t) const {
    return interp(rate_series[static_cast<int>(d)], t);
  }
  Vec3 position_at(double t) const {
    return {value_at(Dof::Surge, t), value_at(Dof::Sway, t), value_at(Dof::Heave, t)};
  }
  Vec3 attitude_at(double t) const {
    return {value_at(Dof::Roll, t), value_at(Dof::Pitch, t), value_at(Dof::Yaw, t)};
  }
  Vec3 velocity_at(double t) const {
    return {rate_at(Dof::Surge, t), rate_at(Dof::Sway, t), rate_at(Dof::Heave, t)};
  }

 private:
  double interp(const std::vector<double>& s, double t) const {
    if (s.empty()) return 0.0;
    double u = (t - start_time) / sample_period;
    if (u <= 0.0) return s.front();
    if (u >= static_cast<double>(s.size() - 1)) return s.back();
    int k = static_cast<int>(u);
    double a = u - k;
    return s[k] * (1.0 - a) + s[k + 1] * a;
  }
};

/// Error type used across modules: parameter/format misuse and numerical failures.
class Error : public std::exception {
 public:
  enum class Kind { Parameter, Format, InsufficientData, Numerical, Planning, Io };
  Error(Kind kind, std::string msg) : kind_(kind), msg_(std::move(msg)) {}
  Kind kind() const { return kind_; }
  const char* what() const noexcept override { return msg_.c_str(); }

 private:
  Kind kind_;
  std::string msg_;
};

}  // namespace specfuse

#endif  // SPECFUSE_TYPES_HPP
