#ifndef SPECFUSE_MISSION_HPP
#define SPECFUSE_MISSION_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "specfuse/scenario.hpp"

namespace specfuse::mission {

enum class Method { SpecFuse, FftKf };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

enum class FailsafeMode { Normal, Hover };

struct FailsafeInputs {
  double p_conf = 1.0;          // [0, 1]
  double v_batt = 25.2;         // V
  double deck_inclination = 0;  // deg
};

/// Hover iff confidence, battery or deck inclination crosses its threshold.
FailsafeMode failsafe_check(const FailsafeInputs& inputs);

struct TouchdownResult {
  bool landed = false;
  double delta_p_cm = 0.0;
  double attitude_err_deg = 0.0;
};

/// Landed when the vertical gap to the deck is <= 2 cm with a relative
/// descent rate <= 0.3 m/s. Deviation and attitude error are always reported.
TouchdownResult touchdown_check(const UavState& uav, const PlatformState& deck);

enum class FailureMode {
  None,
  WindShear,
  Resonance,
  PlanningFailure,
  FailsafeHover,
  Timeout,
};

const char* failure_mode_name(FailureMode m);

struct LatencyStats {
  double predict_mean_ms = 0.0, predict_max_ms = 0.0;
  double plan_mean_ms = 0.0, plan_max_ms = 0.0;
  double control_mean_ms = 0.0, control_max_ms = 0.0;
  double tick_mean_ms = 0.0;
  long ticks = 0;
};

struct EpisodeResult {
  bool success = false;
  double prediction_rms_cm = 0.0;    // e_p at the configured lookahead
  double attitude_rms_rad = 0.0;     // attitude-channel forecast RMS
  double landing_deviation_cm = 0.0;  // delta_p
  double landing_attitude_err_deg = 0.0;
  double landing_time = 0.0;  // s from takeoff, 0 when never landed
  FailureMode failure = FailureMode::None;
  LatencyStats latency;
  int constraint_violations = 0;  // emitted-command bound violations (must be 0)
  int clearance_violations = 0;   // trajectory clearance outside terminal window
  double max_gust = 0.0;          // m/s, episode maximum
  double min_p_conf = 1.0;
  bool failsafe_triggered = false;
};

/// Per-tick trace callback: simulation time, truth, UAV state, command.
struct TraceSample {
  double t = 0.0;
  PlatformState deck;
  UavState uav;
  Vec3 u_cmd = Vec3::Zero();
  double p_conf = 1.0;
  double cost = 0.0;
  int phase = 0;  // 0 warmup, 1 approach, 2 terminal, 3 hover
};
using TraceSink = std::function<void(const TraceSample&)>;

/// Optional forced-failure hooks used by the fail-safe tests.
struct EpisodeOverrides {
  std::optional<double> p_conf_drop_at = std::nullopt;     // force P_conf 0 after t
  std::optional<double> battery_drop_at = std::nullopt;    // force V_batt 20 V after t
  std::optional<double> deck_ramp_at = std::nullopt;       // ramp deck tilt past 35 deg
  bool disable_failsafe_recovery = false;
};

EpisodeResult run_episode(const Scenario& scenario, Method method = Method::SpecFuse,
                          const TraceSink& trace = nullptr,
                          const EpisodeOverrides& overrides = {});

/// Spectral extraction identical to the full pipeline but phases extrapolate
/// from the last epoch with no recursive refinement.
class BaselinePredictor {
 public:
  explicit BaselinePredictor(const spectral::SpectralConfig& cfg) : cfg_(cfg) {}

  /// Re-runs extraction on the channel history; keeps the previous epoch when
  /// the history is still too short.
  void epoch(const std::array<spectral::SignalWindow, kNumDof>& histories, double t);

  bool ready() const { return ready_; }
  PlatformForecast forecast(double t_now, double horizon, double sample_period) const;

 private:
  spectral::SpectralConfig cfg_;
  std::array<std::vector<HarmonicComponent>, kNumDof> components_{};
  double epoch_time_ = 0.0;
  bool ready_ = false;
};

struct MetricsReport {
  std::string method;
  std::string scenario_name;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  double ep_mean_cm = 0.0, ep_std_cm = 0.0;
  double dp_mean_cm = 0.0, dp_std_cm = 0.0;
  double landing_time_mean_s = 0.0;
  std::map<std::string, int> failure_histogram;
  uint64_t config_fingerprint = 0;
  // Wall-clock stats; kept out of the deterministic artifacts.
  double latency_predict_mean_ms = 0.0;
  double latency_plan_mean_ms = 0.0;
  double latency_control_mean_ms = 0.0;
  double latency_tick_mean_ms = 0.0, latency_tick_std_ms = 0.0;
  int total_constraint_violations = 0;

  std::string to_json(bool include_latency) const;
  std::string to_table() const;
};

/// Independent seeded episodes (seed + trial index); aggregation is ordered
/// by trial so thread count never changes the report.
MetricsReport run_monte_carlo(const Scenario& scenario, int n_trials, Method method,
                              int threads = 0,
                              std::vector<EpisodeResult>* episodes_out = nullptr);

}  // namespace specfuse::mission

#endif  // SPECFUSE_MISSION_HPP
