#ifndef SPECFUSE_SCENARIO_HPP
#define SPECFUSE_SCENARIO_HPP

#include <filesystem>
#include <string>

#include "specfuse/estimator.hpp"
#include "specfuse/mpc.hpp"
#include "specfuse/planner.hpp"
#include "specfuse/spectral.hpp"
#include "specfuse/svr.hpp"
#include "specfuse/wave_env.hpp"

namespace specfuse::mission {

/// Full configuration of one simulated landing episode.
struct Scenario {
  std::string name = "unnamed";
  int schema_version = 1;

  // Sea
  double hs = 1.8;
  double tp = 6.5;
  int n_components = 32;
  wave_env::PoseResponseGains gains;

  // Wind
  wave_env::WindParams wind;

  // Platform / UAV
  Vec3 platform_nominal = Vec3::Zero();
  UavState uav_start;

  // Observation noise
  Vec3 imu_attitude_std = Vec3::Constant(0.01);   // rad
  Vec3 imu_rate_std = Vec3::Constant(0.02);       // rad/s
  Vec3 position_std = Vec3::Constant(0.02);       // m
  Vec3 velocity_std = Vec3::Constant(0.05);       // m/s

  // Module configs
  spectral::SpectralConfig spectral_cfg;
  estimator::FilterConfig filter_cfg;
  planner::PlanWeights plan_weights;
  planner::PlannerConfig planner_cfg;
  controller::MpcProblem mpc;
  controller::SvrTrainParams svr;

  // Mission loop
  double tick_rate = 50.0;          // Hz
  double warmup = 25.0;             // s of observation before takeoff
  double replan_period = 0.5;       // s
  double forecast_horizon = 25.0;   // s on replan ticks
  double ep_lookahead = 1.0;        // s, prediction-error horizon
  double timeout = 60.0;            // s after warmup
  double battery_start = 25.2;      // V
  double battery_decay = 0.01;      // V/s
  double svr_target_lead = 0.2;     // s ahead for the velocity regression
  bool svr_enabled = true;

  uint64_t seed = 1;

  static Scenario from_json_text(const std::string& text);
  static Scenario load(const std::filesystem::path& path);
  std::string to_json() const;

  /// FNV-1a hash of the serialized config, reported in benchmark output.
  uint64_t fingerprint() const;

  void validate() const;
};

}  // namespace specfuse::mission

#endif  // SPECFUSE_SCENARIO_HPP
