#include "specfuse/mission.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <thread>

#include <nlohmann/json.hpp>

#include "specfuse/io.hpp"

namespace specfuse::mission {

namespace {

constexpr double kDragCoeff = 0.3;  // kg/s, linear aero drag on the point mass

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

/// Angle of the deck normal from vertical, in degrees.
double deck_inclination_deg(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y()), sp = std::sin(attitude.y());
  // Deck normal in world frame for ZYX angles.
  const Vec3 normal(sp * cr, -sr, cp * cr);
  return std::acos(std::clamp(normal.z() / normal.norm(), -1.0, 1.0)) * 180.0 / M_PI;
}

Vec3 body_z_axis(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y()), sp = std::sin(attitude.y());
  return Vec3(sp * cr, -sr, cp * cr);
}

struct ChannelHistories {
  std::array<spectral::SignalWindow, kNumDof> win;

  explicit ChannelHistories(double fs) {
    for (auto& w : win) {
      w.sample_rate = fs;
      w.start_time = 0.0;
    }
  }

  void push(double t, const std::array<double, kNumDof>& values, int cap) {
    for (int d = 0; d < kNumDof; ++d) {
      auto& w = win[d];
      if (w.values.empty()) w.start_time = t;
      w.values.push_back(values[d]);
      if (static_cast<int>(w.values.size()) > cap + 256) {
        const int drop = static_cast<int>(w.values.size()) - cap;
        w.values.erase(w.values.begin(), w.values.begin() + drop);
        w.start_time += drop / w.sample_rate;
      }
    }
  }
};

/// Running accumulator for one latency channel.
struct Meter {
  double sum = 0.0, peak = 0.0;
  long n = 0;
  void add(double ms) {
    sum += ms;
    peak = std::max(peak, ms);
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
};

struct SvrPair {
  controller::SvrModel x, y;
  bool ready = false;
};

/// Pre-flight velocity regression trained on seeded rollouts of the scenario
/// sea: feature = trailing window of one axis' deck velocity plus the relative
/// UAV-deck position, target = that axis' velocity svr_target_lead ahead.
SvrPair train_svr_models(const Scenario& sc, const wave_env::SeaState& sea, Rng& rng) {
  SvrPair out;
  if (!sc.svr_enabled) return out;
  const int window = 10;
  const int n_samples = 240;
  const double dt = 1.0 / sc.tick_rate;

  std::vector<VecX> feats_x, feats_y;
  std::vector<double> targ_x, targ_y;
  feats_x.reserve(n_samples);
  feats_y.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t0 = rng.uniform(5.0, 5.0 + 12.0 * sc.tp);
    VecX fx(window + 3), fy(window + 3);
    for (int k = 0; k < window; ++k) {
      const double tk = t0 - (window - 1 - k) * dt;
      const PlatformState st = wave_env::platform_truth(sea, tk);
      const double nx = rng.gaussian(0.0, 0.5 * sc.velocity_std.x());
      const double ny = rng.gaussian(0.0, 0.5 * sc.velocity_std.y());
      fx[k] = st.lin_vel.x() + nx;
      fy[k] = st.lin_vel.y() + ny;
    }
    // Relative position sampled over the descent corridor.
    const Vec3 rel(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.0, 3.0));
    for (int k = 0; k < 3; ++k) {
      fx[window + k] = rel[k];
      fy[window + k] = rel[k];
    }
    const PlatformState ahead = wave_env::platform_truth(sea, t0 + sc.svr_target_lead);
    feats_x.push_back(fx);
    targ_x.push_back(ahead.lin_vel.x());
    feats_y.push_back(fy);
    targ_y.push_back(ahead.lin_vel.y());
  }
  try {
    out.x = controller::train_velocity_svr(feats_x, targ_x, sc.svr);
    out.y = controller::train_velocity_svr(feats_y, targ_y, sc.svr);
    out.ready = true;
  } catch (const Error&) {
    out.ready = false;  // degenerate sea (e.g. flat); velocity matching disabled
  }
  return out;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "specfuse") return Method::SpecFuse;
  if (name == "fft_kf") return Method::FftKf;
  throw Error(Error::Kind::Parameter, "unknown method: " + name +
                                          " (expected specfuse or fft_kf)");
}

std::string method_name(Method m) {
  return m == Method::SpecFuse ? "specfuse" : "fft_kf";
}

FailsafeMode failsafe_check(const FailsafeInputs& in) {
  if (in.p_conf < 0.80 || in.v_batt < 21.0 || in.deck_inclination > 35.0) {
    return FailsafeMode::Hover;
  }
  return FailsafeMode::Normal;
}

TouchdownResult touchdown_check(const UavState& uav, const PlatformState& deck) {
  TouchdownResult res;
  const double gap = uav.position.z() - deck.position.z();
  const double rel_descent = -(uav.velocity.z() - deck.lin_vel.z());
  res.landed = gap <= 0.02 && rel_descent <= 0.3;
  const Vec3 planar = uav.position - deck.position;
  res.delta_p_cm = std::hypot(planar.x(), planar.y()) * 100.0;
  const Vec3 n_uav = body_z_axis(uav.attitude);
  const Vec3 n_deck = body_z_axis(deck.attitude);
  res.attitude_err_deg =
      std::acos(std::clamp(n_uav.dot(n_deck), -1.0, 1.0)) * 180.0 / M_PI;
  return res;
}

const char* failure_mode_name(FailureMode m) {
  switch (m) {
    case FailureMode::None: return "none";
    case FailureMode::WindShear: return "wind_shear";
    case FailureMode::Resonance: return "resonance";
    case FailureMode::PlanningFailure: return "planning_failure";
    case FailureMode::FailsafeHover: return "failsafe_hover";
    case FailureMode::Timeout: return "timeout";
  }
  return "unknown";
}

void BaselinePredictor::epoch(const std::array<spectral::SignalWindow, kNumDof>& histories,
                              double t) {
  std::array<std::vector<HarmonicComponent>, kNumDof> next;
  for (int d = 0; d < kNumDof; ++d) {
    auto comps = spectral::analyze_channel(histories[d], cfg_);
    if (!comps) return;  // keep previous epoch
    next[d] = std::move(*comps);
  }
  components_ = std::move(next);
  epoch_time_ = t;
  ready_ = true;
}

PlatformForecast BaselinePredictor::forecast(double t_now, double horizon,
                                             double sample_period) const {
  if (!ready_) {
    throw Error(Error::Kind::InsufficientData, "baseline: no spectral epoch yet");
  }
  PlatformForecast fc;
  fc.start_time = t_now;
  fc.horizon = horizon;
  fc.sample_period = sample_period;
  const int count = fc.sample_count();
  for (int d = 0; d < kNumDof; ++d) {
    fc.series[d].resize(count);
    fc.rate_series[d].resize(count);
    for (int k = 0; k < count; ++k) {
      // Raw extrapolation of the epoch phases, no refinement.
      const double dt = (t_now - epoch_time_) + k * sample_period;
      double v = 0.0, r = 0.0;
      for (const auto& h : components_[d]) {
        v += h.eval(dt);
        r += h.eval_rate(dt);
      }
      fc.series[d][k] = v;
      fc.rate_series[d][k] = r;
    }
    fc.confidence[d] = 1.0;
  }
  return fc;
}

EpisodeResult run_episode(const Scenario& sc, Method method, const TraceSink& trace,
                          const EpisodeOverrides& overrides) {
  sc.validate();
  EpisodeResult result;

  const double dt = 1.0 / sc.tick_rate;
  const int replan_ticks = std::max(1, static_cast<int>(std::llround(sc.replan_period / dt)));

  // Seed tree: sea, wind, sensors, planner, svr each get their own stream.
  Rng root(sc.seed);
  const uint64_t sea_seed = root.next_u64();
  Rng wind_stream = root.fork(1);
  Rng sensor_stream = root.fork(2);
  Rng planner_stream = root.fork(3);
  Rng svr_stream = root.fork(4);

  const wave_env::SeaState sea = wave_env::synthesize_sea(
      sc.hs, sc.tp, sc.n_components, sea_seed, sc.gains);
  wave_env::WindParams wp = sc.wind;
  wp.rng_seed = wind_stream.next_u64();
  wave_env::WindSim wind(wp);

  SvrPair svr = train_svr_models(sc, sea, svr_stream);

  ChannelHistories histories(sc.tick_rate);
  const int history_cap =
      static_cast<int>(sc.spectral_cfg.search_span * sc.tick_rate) +
      2 * sc.spectral_cfg.k_samples;

  std::array<std::optional<estimator::FilterState>, kNumDof> filters;
  BaselinePredictor baseline(sc.spectral_cfg);

  planner::PlannerConfig pcfg = sc.planner_cfg;
  pcfg.mass = sc.mpc.mass;
  std::optional<planner::Trajectory> traj;
  controller::MpcSolution last_mpc;
  bool have_last_mpc = false;

  UavState uav = sc.uav_start;
  Vec3 u_prev = Vec3::Zero();
  Vec3 d_hat = Vec3::Zero();
  std::deque<Vec3> rate_window;  // reconstructed deck velocity history

  Meter predict_meter, plan_meter, control_meter, tick_meter;

  // Pending forecast-vs-truth comparisons for e_p.
  struct Pending {
    double t_target;
    Vec3 pos;
    Vec3 att;
  };
  std::deque<Pending> pending;
  double ep_sum = 0.0;
  long ep_count = 0;
  double att_sq_sum = 0.0;

  const double t_takeoff = sc.warmup;
  const double t_end = sc.warmup + sc.timeout;
  bool in_hover = false;
  double normal_since = 0.0;
  int goarounds = 0;

  auto min_confidence = [&]() {
    double c = 1.0;
    for (const auto& f : filters) {
      if (f) c = std::min(c, f->confidence());
    }
    return c;
  };

  double t = 0.0;
  long tick = 0;
  FailureMode failure = FailureMode::None;
  bool landed = false;

  const double short_horizon =
      sc.mpc.horizon * sc.mpc.ts + std::max(sc.ep_lookahead, 0.5) + 0.1;

  try {
    for (; t < t_end + 0.5 * dt; t += dt, ++tick) {
      const double tick_t0 = now_ms();

      // --- environment truth -------------------------------------------
      PlatformState truth = wave_env::platform_truth(sea, t);
      if (overrides.deck_ramp_at && t > *overrides.deck_ramp_at) {
        truth.attitude.x() += 0.25 * (t - *overrides.deck_ramp_at);  // rad ramp
        truth.ang_vel.x() += 0.25;
      }
      truth.position += sc.platform_nominal;
      const Vec3 wind_now = wind.step(dt);
      result.max_gust = std::max(result.max_gust, wind_now.norm());

      // --- observations -------------------------------------------------
      PlatformState centered = truth;
      centered.position -= sc.platform_nominal;
      const ImuSample imu = wave_env::imu_measure(centered, sc.imu_attitude_std,
                                                  sc.imu_rate_std, sensor_stream);
      std::array<double, kNumDof> obs_value{};
      std::array<double, kNumDof> obs_rate{};
      for (int i = 0; i < 3; ++i) {
        obs_value[i] = centered.position[i] +
                       (sc.position_std[i] > 0 ? sensor_stream.gaussian(0.0, sc.position_std[i]) : 0.0);
        obs_rate[i] = centered.lin_vel[i] +
                      (sc.velocity_std[i] > 0 ? sensor_stream.gaussian(0.0, sc.velocity_std[i]) : 0.0);
        obs_value[3 + i] = imu.attitude[i];
        obs_rate[3 + i] = imu.ang_vel[i];
      }
      histories.push(t, obs_value, history_cap);

      // --- prediction stage ---------------------------------------------
      const double pred_t0 = now_ms();
      for (int d = 0; d < kNumDof; ++d) {
        if (filters[d]) {
          filters[d]->predict(dt);
          filters[d]->update(obs_value[d], obs_rate[d], t);
        }
      }

      if (tick % replan_ticks == 0) {
        for (int d = 0; d < kNumDof; ++d) {
          auto comps = spectral::analyze_channel(histories.win[d], sc.spectral_cfg);
          if (!comps) continue;
          if (comps->empty()) {
            // Flat channel: track a zero-amplitude component at the sea peak.
            comps->push_back(HarmonicComponent(0.0, 1.0 / sc.tp, 0.0));
          }
          // Keep the refined filter when the frequency set is unchanged;
          // otherwise warm-start matching blocks from the old state.
          bool same = filters[d] &&
                      filters[d]->harmonic_count() == static_cast<int>(comps->size());
          if (same) {
            for (std::size_t i = 0; i < comps->size(); ++i) {
              if (std::abs(filters[d]->frequencies()[i] - (*comps)[i].frequency) > 1e-9) {
                same = false;
                break;
              }
            }
          }
          if (same) continue;
          estimator::FilterState fresh(*comps, t, sc.filter_cfg);
          filters[d] = std::move(fresh);
        }
        if (method == Method::FftKf) baseline.epoch(histories.win, t);
      }

      bool predictor_ready = method == Method::FftKf
                                 ? baseline.ready()
                                 : std::all_of(filters.begin(), filters.end(),
                                               [](const auto& f) { return bool(f); });

      PlatformForecast fc_short;
      if (predictor_ready) {
        if (method == Method::SpecFuse) {
          std::array<const estimator::FilterState*, kNumDof> ch{};
          for (int d = 0; d < kNumDof; ++d) ch[d] = &*filters[d];
          fc_short = estimator::predict_6dof(ch, short_horizon, dt);
        } else {
          fc_short = baseline.forecast(t, short_horizon, dt);
        }
        for (int i = 0; i < 3; ++i) {
          for (auto& v : fc_short.series[i]) v += sc.platform_nominal[i];
        }
        // Queue the lookahead sample for the prediction-error metric.
        const int k_look =
            static_cast<int>(std::llround(sc.ep_lookahead / fc_short.sample_period));
        if (k_look < fc_short.sample_count()) {
          Pending p;
          p.t_target = t + sc.ep_lookahead;
          p.pos = Vec3(fc_short.series[0][k_look], fc_short.series[1][k_look],
                       fc_short.series[2][k_look]);
          p.att = Vec3(fc_short.series[3][k_look], fc_short.series[4][k_look],
                       fc_short.series[5][k_look]);
          pending.push_back(p);
        }
        // Deck velocity window for the terminal regression features.
        rate_window.push_back(Vec3(fc_short.rate_series[0][0], fc_short.rate_series[1][0],
                                   fc_short.rate_series[2][0]));
        if (rate_window.size() > 10) rate_window.pop_front();
      }
      while (!pending.empty() && pending.front().t_target <= t + 0.5 * dt) {
        const auto& p = pending.front();
        ep_sum += (p.pos - truth.position).norm();
        att_sq_sum += (p.att - truth.attitude).squaredNorm();
        ++ep_count;
        pending.pop_front();
      }
      predict_meter.add(now_ms() - pred_t0);

      // --- pre-takeoff: observe only ------------------------------------
      if (t < t_takeoff) {
        if (trace) {
          TraceSample s;
          s.t = t;
          s.deck = truth;
          s.uav = uav;
          s.p_conf = min_confidence();
          s.phase = 0;
          trace(s);
        }
        tick_meter.add(now_ms() - tick_t0);
        continue;
      }

      // --- planning ------------------------------------------------------
      const bool replan_tick = tick % replan_ticks == 0;
      if (predictor_ready && (!traj || replan_tick) && !in_hover) {
        const double plan_t0 = now_ms();
        PlatformForecast fc_full;
        if (method == Method::SpecFuse) {
          std::array<const estimator::FilterState*, kNumDof> ch{};
          for (int d = 0; d < kNumDof; ++d) ch[d] = &*filters[d];
          fc_full = estimator::predict_6dof(ch, sc.forecast_horizon, 0.02);
        } else {
          fc_full = baseline.forecast(t, sc.forecast_horizon, 0.02);
        }
        for (int i = 0; i < 3; ++i) {
          for (auto& v : fc_full.series[i]) v += sc.platform_nominal[i];
        }
        planner::PlannerDiagnostics diag;
        if (!traj) {
          auto path = planner::plan_rrt(uav, fc_full, sc.plan_weights, pcfg.budget_hint,
                                        planner_stream.next_u64(), pcfg, &diag);
          traj = planner::refine_trajectory(path, fc_full, sc.plan_weights, pcfg, &diag);
        } else if (t < traj->touchdown_time - pcfg.terminal_window) {
          traj = planner::replan(*traj, fc_full, t, sc.plan_weights,
                                 planner_stream.next_u64(), pcfg, &diag);
        }
        plan_meter.add(now_ms() - plan_t0);
      }

      // --- fail-safe ------------------------------------------------------
      FailsafeInputs fin;
      fin.p_conf = min_confidence();
      if (overrides.p_conf_drop_at && t > *overrides.p_conf_drop_at) fin.p_conf = 0.0;
      fin.v_batt = sc.battery_start - sc.battery_decay * t;
      if (overrides.battery_drop_at && t > *overrides.battery_drop_at) fin.v_batt = 20.0;
      fin.deck_inclination = deck_inclination_deg(truth.attitude);
      result.min_p_conf = std::min(result.min_p_conf, fin.p_conf);
      const FailsafeMode mode = failsafe_check(fin);

      // --- control ---------------------------------------------------------
      const double ctrl_t0 = now_ms();
      Vec3 u_cmd = Vec3::Zero();
      double mpc_cost = 0.0;
      int phase_tag = 1;

      if (mode == FailsafeMode::Hover) {
        if (!in_hover) {
          in_hover = true;
          result.failsafe_triggered = true;
        }
        normal_since = t;
        // Zero velocity reference at the current position.
        controller::MpcReference ref;
        ref.states.assign(sc.mpc.horizon + 1, (Vec6() << uav.position, Vec3::Zero()).finished());
        auto sol = controller::mpc_step(uav, ref, sc.mpc, u_prev, d_hat,
                                        have_last_mpc ? &last_mpc : nullptr);
        last_mpc = sol;
        have_last_mpc = true;
        u_cmd = controller::clamp_control_norm(sol.u_cmd, pcfg.u_max);
        mpc_cost = sol.cost;
        phase_tag = 3;
      } else if (in_hover) {
        // Recovered confidence: resume after one steady second.
        if (t - normal_since > 1.0 && !overrides.disable_failsafe_recovery) {
          in_hover = false;
          traj.reset();  // force a fresh plan next tick
        } else {
          controller::MpcReference ref;
          ref.states.assign(sc.mpc.horizon + 1,
                            (Vec6() << uav.position, Vec3::Zero()).finished());
          auto sol = controller::mpc_step(uav, ref, sc.mpc, u_prev, d_hat,
                                          have_last_mpc ? &last_mpc : nullptr);
          last_mpc = sol;
          have_last_mpc = true;
          u_cmd = controller::clamp_control_norm(sol.u_cmd, pcfg.u_max);
          mpc_cost = sol.cost;
          phase_tag = 3;
        }
      }

      if (!in_hover && traj && predictor_ready) {
        const bool terminal = t >= traj->touchdown_time - pcfg.terminal_window;
        phase_tag = terminal ? 2 : 1;

        // Go-around: lateral error too large to finish the descent safely.
        if (terminal) {
          const Vec3 deck_now = planner::deck_position(fc_short, t);
          const double lat =
              std::hypot(uav.position.x() - deck_now.x(), uav.position.y() - deck_now.y());
          const double height = uav.position.z() - deck_now.z();
          if (lat > 0.8 * pcfg.terminal_lateral_gate && height > 0.15) {
            traj.reset();
            ++goarounds;
          }
        }

        if (traj) {
          controller::MpcReference ref =
              controller::sample_reference(*traj, t, sc.mpc, &fc_short);
          if (terminal) {
            Vec3 deck_vel = planner::deck_velocity(fc_short, t + sc.svr_target_lead);
            if (svr.ready && rate_window.size() == 10) {
              VecX fx(13), fy(13);
              const Vec3 rel = uav.position - planner::deck_position(fc_short, t);
              for (int k = 0; k < 10; ++k) {
                fx[k] = rate_window[k].x();
                fy[k] = rate_window[k].y();
              }
              for (int k = 0; k < 3; ++k) {
                fx[10 + k] = rel[k];
                fy[10 + k] = rel[k];
              }
              deck_vel.x() = svr.x.predict(fx);
              deck_vel.y() = svr.y.predict(fy);
            }
            ref = controller::blend_velocity_matching(ref, deck_vel, controller::Phase::Terminal);
          }
          auto sol = controller::mpc_step(uav, ref, sc.mpc, u_prev, d_hat,
                                          have_last_mpc ? &last_mpc : nullptr);
          last_mpc = sol;
          have_last_mpc = true;
          u_cmd = controller::clamp_control_norm(sol.u_cmd, pcfg.u_max);
          mpc_cost = sol.cost;
        } else {
          // Went around this tick: hold current state until the next plan.
          controller::MpcReference ref;
          ref.states.assign(sc.mpc.horizon + 1,
                            (Vec6() << uav.position, Vec3::Zero()).finished());
          auto sol = controller::mpc_step(uav, ref, sc.mpc, u_prev, d_hat,
                                          have_last_mpc ? &last_mpc : nullptr);
          last_mpc = sol;
          have_last_mpc = true;
          u_cmd = controller::clamp_control_norm(sol.u_cmd, pcfg.u_max);
          mpc_cost = sol.cost;
        }
      }
      control_meter.add(now_ms() - ctrl_t0);

      if (u_cmd.norm() > pcfg.u_max + 1e-9) ++result.constraint_violations;

      // Executed-path clearance audit (outside the terminal window).
      if (!in_hover && traj) {
        const double clearance = (uav.position - truth.position).norm();
        const bool in_window = t >= traj->touchdown_time - pcfg.terminal_window;
        if (!in_window && clearance < pcfg.min_clearance - 1e-9) {
          ++result.clearance_violations;
        }
      }

      // --- plant integration ----------------------------------------------
      const Vec3 accel =
          u_cmd / sc.mpc.mass + (kDragCoeff / sc.mpc.mass) * (wind_now - uav.velocity);
      const Vec3 v_old = uav.velocity;
      uav.velocity += accel * dt;
      uav.position += uav.velocity * dt;
      uav.attitude = planner::attitude_from_control(u_cmd, pcfg);
      // Disturbance observer: residual force between the plant and the
      // nominal double integrator.
      const Vec3 d_obs = sc.mpc.mass * (uav.velocity - v_old) / dt - u_cmd;
      d_hat = 0.9 * d_hat + 0.1 * d_obs;

      // --- touchdown --------------------------------------------------------
      const PlatformState deck_truth = truth;
      if (!in_hover && traj &&
          uav.position.z() - deck_truth.position.z() < 0.6) {
        TouchdownResult td = touchdown_check(uav, deck_truth);
        if (td.landed) {
          landed = true;
          result.landing_deviation_cm = td.delta_p_cm;
          result.landing_attitude_err_deg = td.attitude_err_deg;
          result.landing_time = t - t_takeoff;
          result.success = td.delta_p_cm < 5.0 && td.attitude_err_deg < 10.0;
          break;
        }
        // Contact faster than the landing envelope: episode over, no success.
        if (uav.position.z() - deck_truth.position.z() <= 0.0) {
          landed = true;
          result.landing_deviation_cm = td.delta_p_cm;
          result.landing_attitude_err_deg = td.attitude_err_deg;
          result.landing_time = t - t_takeoff;
          result.success = false;
          break;
        }
      }

      if (trace) {
        TraceSample s;
        s.t = t;
        s.deck = truth;
        s.uav = uav;
        s.u_cmd = u_cmd;
        s.p_conf = fin.p_conf;
        s.cost = mpc_cost;
        s.phase = t < t_takeoff ? 0 : phase_tag;
        trace(s);
      }
      tick_meter.add(now_ms() - tick_t0);
    }
  } catch (const Error& e) {
    if (e.kind() == Error::Kind::Planning) {
      failure = FailureMode::PlanningFailure;
    } else {
      throw;
    }
  }

  // --- failure taxonomy ----------------------------------------------------
  if (!result.success && failure == FailureMode::None) {
    const double dominant = wave_env::dominant_frequency(sea);
    if (landed || t >= t_end) {
      if (result.max_gust > 15.0) {
        failure = FailureMode::WindShear;
      } else if (dominant > 3.0) {
        failure = FailureMode::Resonance;
      } else if (in_hover) {
        failure = FailureMode::FailsafeHover;
      } else if (!landed) {
        failure = FailureMode::Timeout;
      } else {
        // Missed tolerance under ordinary disturbance levels.
        failure = FailureMode::WindShear;
      }
    }
  }
  if (!result.success) result.failure = failure;

  result.prediction_rms_cm = ep_count ? (ep_sum / ep_count) * 100.0 : 0.0;
  result.attitude_rms_rad = ep_count ? std::sqrt(att_sq_sum / (3.0 * ep_count)) : 0.0;
  result.latency.predict_mean_ms = predict_meter.mean();
  result.latency.predict_max_ms = predict_meter.peak;
  result.latency.plan_mean_ms = plan_meter.mean();
  result.latency.plan_max_ms = plan_meter.peak;
  result.latency.control_mean_ms = control_meter.mean();
  result.latency.control_max_ms = control_meter.peak;
  result.latency.tick_mean_ms = tick_meter.mean();
  result.latency.ticks = tick_meter.n;
  (void)goarounds;
  return result;
}

std::string MetricsReport::to_json(bool include_latency) const {
  nlohmann::json j;
  j["method"] = method;
  j["scenario"] = scenario_name;
  j["trials"] = trials;
  j["successes"] = successes;
  j["success_rate"] = success_rate;
  j["ep_mean_cm"] = ep_mean_cm;
  j["ep_std_cm"] = ep_std_cm;
  j["dp_mean_cm"] = dp_mean_cm;
  j["dp_std_cm"] = dp_std_cm;
  j["landing_time_mean_s"] = landing_time_mean_s;
  j["failure_histogram"] = failure_histogram;
  j["config_fingerprint"] = config_fingerprint;
  j["constraint_violations"] = total_constraint_violations;
  if (include_latency) {
    j["latency_ms"] = {{"predict_mean", latency_predict_mean_ms},
                       {"plan_mean", latency_plan_mean_ms},
                       {"control_mean", latency_control_mean_ms},
                       {"tick_mean", latency_tick_mean_ms},
                       {"tick_std", latency_tick_std_ms}};
  }
  return j.dump(2);
}

std::string MetricsReport::to_table() const {
  char buf[256];
  std::string out;
  out += "Method     e_p (cm)        dp (cm)         SR       Latency (ms)\n";
  std::snprintf(buf, sizeof(buf), "%-10s %5.2f +/- %-5.2f %5.2f +/- %-5.2f %6.1f%%  %6.2f\n",
                method.c_str(), ep_mean_cm, ep_std_cm, dp_mean_cm, dp_std_cm,
                success_rate * 100.0, latency_tick_mean_ms);
  out += buf;
  return out;
}

MetricsReport run_monte_carlo(const Scenario& scenario, int n_trials, Method method,
                              int threads, std::vector<EpisodeResult>* episodes_out) {
  if (n_trials < 1) {
    throw Error(Error::Kind::Parameter, "run_monte_carlo: need at least one trial");
  }
  std::vector<EpisodeResult> results(n_trials);
  std::atomic<int> next{0};
  const int hw = threads > 0 ? threads
                             : std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::min(hw, n_trials);

  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_trials) return;
      Scenario sc = scenario;
      sc.seed = scenario.seed + static_cast<uint64_t>(i);
      results[i] = run_episode(sc, method);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  MetricsReport rep;
  rep.method = method_name(method);
  rep.scenario_name = scenario.name;
  rep.trials = n_trials;
  rep.config_fingerprint = scenario.fingerprint();

  double ep_sum = 0, ep_sq = 0, dp_sum = 0, dp_sq = 0, lt_sum = 0;
  double lat_p = 0, lat_pl = 0, lat_c = 0, lat_t = 0, lat_t_sq = 0;
  int landed_count = 0;
  for (const auto& r : results) {
    if (r.success) ++rep.successes;
    ep_sum += r.prediction_rms_cm;
    ep_sq += r.prediction_rms_cm * r.prediction_rms_cm;
    if (r.landing_time > 0.0) {
      dp_sum += r.landing_deviation_cm;
      dp_sq += r.landing_deviation_cm * r.landing_deviation_cm;
      lt_sum += r.landing_time;
      ++landed_count;
    }
    ++rep.failure_histogram[failure_mode_name(r.failure)];
    rep.total_constraint_violations += r.constraint_violations;
    lat_p += r.latency.predict_mean_ms;
    lat_pl += r.latency.plan_mean_ms;
    lat_c += r.latency.control_mean_ms;
    lat_t += r.latency.tick_mean_ms;
    lat_t_sq += r.latency.tick_mean_ms * r.latency.tick_mean_ms;
  }
  const double n = n_trials;
  rep.success_rate = rep.successes / n;
  rep.ep_mean_cm = ep_sum / n;
  rep.ep_std_cm = std::sqrt(std::max(0.0, ep_sq / n - rep.ep_mean_cm * rep.ep_mean_cm));
  if (landed_count > 0) {
    rep.dp_mean_cm = dp_sum / landed_count;
    rep.dp_std_cm = std::sqrt(
        std::max(0.0, dp_sq / landed_count - rep.dp_mean_cm * rep.dp_mean_cm));
    rep.landing_time_mean_s = lt_sum / landed_count;
  }
  rep.latency_predict_mean_ms = lat_p / n;
  rep.latency_plan_mean_ms = lat_pl / n;
  rep.latency_control_mean_ms = lat_c / n;
  rep.latency_tick_mean_ms = lat_t / n;
  rep.latency_tick_std_ms =
      std::sqrt(std::max(0.0, lat_t_sq / n - rep.latency_tick_mean_ms * rep.latency_tick_mean_ms));

  if (episodes_out) *episodes_out = std::move(results);
  return rep;
}

}  // namespace specfuse::mission
