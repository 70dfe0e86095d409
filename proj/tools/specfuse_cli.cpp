// Batch-simulation command line: scenario synthesis, forecasting, planning,
// closed-loop landings, Monte Carlo benchmarks and offline plots.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "specfuse/estimator.hpp"
#include "specfuse/io.hpp"
#include "specfuse/mission.hpp"
#include "specfuse/planner.hpp"
#include "specfuse/scenario.hpp"
#include "specfuse/spectral.hpp"
#include "specfuse/wave_env.hpp"

namespace fs = std::filesystem;
using namespace specfuse;
using nlohmann::json;

namespace {

int verbosity() {
  const char* env = std::getenv("SPECFUSE_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (verbosity() >= 1) std::cerr << "[specfuse] " << msg << "\n";
}

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<uint64_t> seed;
  std::string method = "specfuse";
  int trials = 50;
  double horizon = 1.0;
  double duration = 30.0;
  int threads = 0;
};

mission::Scenario load_scenario(const CommonOpts& opts) {
  mission::Scenario sc = mission::Scenario::load(opts.scenario_path);
  if (opts.seed) sc.seed = *opts.seed;
  return sc;
}

// ---------------------------------------------------------------------------
// synth: ground-truth platform motion traces
// ---------------------------------------------------------------------------
int cmd_synth(const CommonOpts& opts) {
  mission::Scenario sc = load_scenario(opts);
  const auto sea = wave_env::synthesize_sea(sc.hs, sc.tp, sc.n_components,
                                            Rng(sc.seed).next_u64(), sc.gains);
  io::CsvBuilder csv({"t", "x", "y", "z", "roll", "pitch", "yaw", "vx", "vy", "vz",
                      "wx", "wy", "wz"});
  const double dt = 1.0 / sc.tick_rate;
  const long rows = static_cast<long>(std::llround(opts.duration * sc.tick_rate));
  for (long k = 0; k <= rows; ++k) {
    const double t = k * dt;
    const PlatformState st = wave_env::platform_truth(sea, t);
    const Vec3 p = st.position + sc.platform_nominal;
    csv.row({t, p.x(), p.y(), p.z(), st.attitude.x(), st.attitude.y(), st.attitude.z(),
             st.lin_vel.x(), st.lin_vel.y(), st.lin_vel.z(), st.ang_vel.x(),
             st.ang_vel.y(), st.ang_vel.z()});
  }
  io::atomic_write(fs::path(opts.out_dir) / "truth.csv", csv.str());

  json j;
  j["hs"] = sea.hs;
  j["tp"] = sea.tp;
  j["seed"] = sc.seed;
  j["dominant_frequency_hz"] = wave_env::dominant_frequency(sea);
  for (int d = 0; d < kNumDof; ++d) {
    json comps = json::array();
    for (const auto& h : sea.harmonics[d]) {
      comps.push_back({{"amplitude", h.amplitude},
                       {"frequency", h.frequency},
                       {"phase", h.phase}});
    }
    j["harmonics"][dof_name(static_cast<Dof>(d))] = comps;
  }
  io::atomic_write(fs::path(opts.out_dir) / "sea_state.json", j.dump(2));
  log_info("wrote truth.csv and sea_state.json to " + opts.out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// predict: platform-only forecasting trace + error summary
// ---------------------------------------------------------------------------
int cmd_predict(const CommonOpts& opts) {
  mission::Scenario sc = load_scenario(opts);
  const mission::Method method = mission::method_from_string(opts.method);
  const double dt = 1.0 / sc.tick_rate;
  const double lookahead = opts.horizon;

  Rng root(sc.seed);
  const auto sea = wave_env::synthesize_sea(sc.hs, sc.tp, sc.n_components,
                                            root.next_u64(), sc.gains);
  Rng sensor = root.fork(2);

  std::array<spectral::SignalWindow, kNumDof> hist;
  for (auto& w : hist) w.sample_rate = sc.tick_rate;
  std::array<std::optional<estimator::FilterState>, kNumDof> filters;
  mission::BaselinePredictor baseline(sc.spectral_cfg);

  struct Row {
    double t;
    int dof;
    double predicted, truth;
  };
  std::vector<Row> rows;
  std::deque<std::pair<double, Vec6>> pendings;
  double err_sum = 0.0;
  long err_n = 0;

  const int replan_ticks = std::max(1, static_cast<int>(std::llround(sc.replan_period / dt)));
  const long total = static_cast<long>(std::llround(opts.duration * sc.tick_rate));
  for (long k = 0; k <= total; ++k) {
    const double t = k * dt;
    const PlatformState truth = wave_env::platform_truth(sea, t);
    const ImuSample imu =
        wave_env::imu_measure(truth, sc.imu_attitude_std, sc.imu_rate_std, sensor);
    std::array<double, kNumDof> value{}, rate{};
    for (int i = 0; i < 3; ++i) {
      value[i] = truth.position[i] + sensor.gaussian(0.0, sc.position_std[i]);
      rate[i] = truth.lin_vel[i] + sensor.gaussian(0.0, sc.velocity_std[i]);
      value[3 + i] = imu.attitude[i];
      rate[3 + i] = imu.ang_vel[i];
    }
    for (int d = 0; d < kNumDof; ++d) {
      if (hist[d].values.empty()) hist[d].start_time = t;
      hist[d].values.push_back(value[d]);
      if (filters[d]) {
        filters[d]->predict(dt);
        filters[d]->update(value[d], rate[d], t);
      }
    }
    if (k % replan_ticks == 0) {
      for (int d = 0; d < kNumDof; ++d) {
        auto comps = spectral::analyze_channel(hist[d], sc.spectral_cfg);
        if (!comps) continue;
        if (comps->empty()) comps->push_back(HarmonicComponent(0.0, 1.0 / sc.tp, 0.0));
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
        if (!same) filters[d] = estimator::FilterState(*comps, t, sc.filter_cfg);
      }
      if (method == mission::Method::FftKf) baseline.epoch(hist, t);
    }

    const bool ready = method == mission::Method::FftKf
                           ? baseline.ready()
                           : std::all_of(filters.begin(), filters.end(),
                                         [](const auto& f) { return bool(f); });
    if (ready) {
      PlatformForecast fc;
      const double horizon = std::max(lookahead, dt);
      if (method == mission::Method::SpecFuse) {
        std::array<const estimator::FilterState*, kNumDof> ch{};
        for (int d = 0; d < kNumDof; ++d) ch[d] = &*filters[d];
        fc = estimator::predict_6dof(ch, horizon, dt);
      } else {
        fc = baseline.forecast(t, horizon, dt);
      }
      const int k_look = static_cast<int>(std::llround(lookahead / dt));
      Vec6 pred;
      for (int d = 0; d < kNumDof; ++d) {
        const auto& s = fc.series[d];
        pred[d] = s[std::min<std::size_t>(k_look, s.size() - 1)];
      }
      pendings.emplace_back(t + lookahead, pred);
    }
    while (!pendings.empty() && pendings.front().first <= t + 0.5 * dt) {
      const auto& [tt, pred] = pendings.front();
      Vec6 actual;
      actual << truth.position, truth.attitude;
      for (int d = 0; d < kNumDof; ++d) {
        rows.push_back({t, d, pred[d], actual[d]});
      }
      err_sum += (pred.head<3>() - actual.head<3>()).norm();
      ++err_n;
      pendings.pop_front();
    }
  }

  io::CsvBuilder csv({"t", "dof", "predicted", "truth", "error"});
  for (const auto& r : rows) {
    csv.row({r.t, static_cast<double>(r.dof), r.predicted, r.truth,
             r.predicted - r.truth});
  }
  io::atomic_write(fs::path(opts.out_dir) / "forecast_trace.csv", csv.str());

  json j;
  j["method"] = opts.method;
  j["lookahead_s"] = lookahead;
  j["samples"] = err_n;
  j["e_p_cm"] = err_n ? (err_sum / err_n) * 100.0 : 0.0;
  j["seed"] = sc.seed;
  io::atomic_write(fs::path(opts.out_dir) / "predict_summary.json", j.dump(2));
  log_info("prediction error " + io::fmt_double(j["e_p_cm"].get<double>()) + " cm");
  return 0;
}

// ---------------------------------------------------------------------------
// plan: one-shot trajectory from the scenario's initial condition
// ---------------------------------------------------------------------------
int cmd_plan(const CommonOpts& opts) {
  mission::Scenario sc = load_scenario(opts);
  Rng root(sc.seed);
  const auto sea = wave_env::synthesize_sea(sc.hs, sc.tp, sc.n_components,
                                            root.next_u64(), sc.gains);
  // Ideal forecast (truth-fed) for the standalone planning command.
  PlatformForecast fc;
  fc.start_time = 0.0;
  fc.horizon = sc.forecast_horizon;
  fc.sample_period = 0.02;
  const int count = fc.sample_count();
  for (int d = 0; d < kNumDof; ++d) {
    fc.series[d].resize(count);
    fc.rate_series[d].resize(count);
  }
  for (int k = 0; k < count; ++k) {
    const PlatformState st = wave_env::platform_truth(sea, k * 0.02);
    for (int d = 0; d < kNumDof; ++d) {
      fc.series[d][k] = st.dof_value(static_cast<Dof>(d)) +
                        (d < 3 ? sc.platform_nominal[d] : 0.0);
      fc.rate_series[d][k] = st.dof_rate(static_cast<Dof>(d));
    }
  }

  planner::PlannerConfig pcfg = sc.planner_cfg;
  pcfg.mass = sc.mpc.mass;
  planner::PlannerDiagnostics diag;
  auto path = planner::plan_rrt(sc.uav_start, fc, sc.plan_weights, pcfg.budget_hint,
                                root.fork(3).next_u64(), pcfg, &diag);
  auto traj = planner::refine_trajectory(path, fc, sc.plan_weights, pcfg, &diag);

  io::CsvBuilder csv({"t", "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw",
                      "ux", "uy", "uz"});
  for (const auto& kn : traj.knots) {
    csv.row({kn.time, kn.state.position.x(), kn.state.position.y(), kn.state.position.z(),
             kn.state.velocity.x(), kn.state.velocity.y(), kn.state.velocity.z(),
             kn.state.attitude.x(), kn.state.attitude.y(), kn.state.attitude.z(),
             kn.control.x(), kn.control.y(), kn.control.z()});
  }
  io::atomic_write(fs::path(opts.out_dir) / "trajectory.csv", csv.str());

  json j;
  j["nodes_expanded"] = diag.nodes_expanded;
  j["rewires"] = diag.rewires;
  j["sqp_iterations"] = diag.sqp_iterations;
  j["tree_cost"] = diag.tree_cost;
  j["trajectory_cost"] = traj.total_cost;
  j["touchdown_time"] = traj.touchdown_time;
  j["knots"] = traj.knots.size();
  io::atomic_write(fs::path(opts.out_dir) / "plan_diagnostics.json", j.dump(2));
  log_info("planned trajectory with " + std::to_string(traj.knots.size()) + " knots");
  return 0;
}

// ---------------------------------------------------------------------------
// land / bench
// ---------------------------------------------------------------------------
json episode_json(const mission::EpisodeResult& r) {
  json j;
  j["success"] = r.success;
  j["e_p_cm"] = r.prediction_rms_cm;
  j["attitude_rms_rad"] = r.attitude_rms_rad;
  j["landing_deviation_cm"] = r.landing_deviation_cm;
  j["landing_attitude_err_deg"] = r.landing_attitude_err_deg;
  j["landing_time_s"] = r.landing_time;
  j["failure_mode"] = mission::failure_mode_name(r.failure);
  j["constraint_violations"] = r.constraint_violations;
  j["clearance_violations"] = r.clearance_violations;
  j["max_gust_ms"] = r.max_gust;
  j["min_p_conf"] = r.min_p_conf;
  j["failsafe_triggered"] = r.failsafe_triggered;
  return j;
}

json latency_json(const mission::LatencyStats& l) {
  json j;
  j["predict_mean_ms"] = l.predict_mean_ms;
  j["predict_max_ms"] = l.predict_max_ms;
  j["plan_mean_ms"] = l.plan_mean_ms;
  j["plan_max_ms"] = l.plan_max_ms;
  j["control_mean_ms"] = l.control_mean_ms;
  j["control_max_ms"] = l.control_max_ms;
  j["tick_mean_ms"] = l.tick_mean_ms;
  j["ticks"] = l.ticks;
  return j;
}

int cmd_land(const CommonOpts& opts) {
  mission::Scenario sc = load_scenario(opts);
  const mission::Method method = mission::method_from_string(opts.method);

  io::CsvBuilder csv({"t", "uav_x", "uav_y", "uav_z", "deck_x", "deck_y", "deck_z",
                      "uav_roll", "uav_pitch", "deck_roll", "deck_pitch", "ux", "uy",
                      "uz", "cost", "p_conf", "phase"});
  mission::TraceSink sink = [&](const mission::TraceSample& s) {
    csv.row({s.t, s.uav.position.x(), s.uav.position.y(), s.uav.position.z(),
             s.deck.position.x(), s.deck.position.y(), s.deck.position.z(),
             s.uav.attitude.x(), s.uav.attitude.y(), s.deck.attitude.x(),
             s.deck.attitude.y(), s.u_cmd.x(), s.u_cmd.y(), s.u_cmd.z(), s.cost,
             s.p_conf, static_cast<double>(s.phase)});
  };

  const mission::EpisodeResult r = mission::run_episode(sc, method, sink);
  io::atomic_write(fs::path(opts.out_dir) / "episode_trace.csv", csv.str());
  io::atomic_write(fs::path(opts.out_dir) / "episode.json", episode_json(r).dump(2));
  io::atomic_write(fs::path(opts.out_dir) / "episode_latency.json",
                   latency_json(r.latency).dump(2));
  log_info(std::string("landing ") + (r.success ? "succeeded" : "failed") +
           ", deviation " + io::fmt_double(r.landing_deviation_cm) + " cm");
  return r.success || r.failure != mission::FailureMode::PlanningFailure ? 0 : 2;
}

int cmd_bench(const CommonOpts& opts, const std::vector<std::string>& methods) {
  mission::Scenario sc = load_scenario(opts);
  std::string table;
  for (const auto& mname : methods) {
    const mission::Method method = mission::method_from_string(mname);
    log_info("benchmarking " + mname + " over " + std::to_string(opts.trials) + " trials");
    std::vector<mission::EpisodeResult> episodes;
    mission::MetricsReport rep =
        mission::run_monte_carlo(sc, opts.trials, method, opts.threads, &episodes);
    io::atomic_write(fs::path(opts.out_dir) / ("metrics_" + mname + ".json"),
                     rep.to_json(false));
    io::atomic_write(fs::path(opts.out_dir) / ("latency_" + mname + ".json"),
                     rep.to_json(true));
    json fh = rep.failure_histogram;
    io::atomic_write(fs::path(opts.out_dir) / ("failures_" + mname + ".json"), fh.dump(2));
    json per;
    for (const auto& e : episodes) per.push_back(episode_json(e));
    io::atomic_write(fs::path(opts.out_dir) / ("episodes_" + mname + ".json"), per.dump(2));
    table += rep.to_table();
  }
  io::atomic_write(fs::path(opts.out_dir) / "benchmark_table.txt", table);
  if (verbosity() >= 1) std::cerr << table;
  return 0;
}

// ---------------------------------------------------------------------------
// plot: static SVG renderings of trace files
// ---------------------------------------------------------------------------
struct Series {
  std::vector<double> x, y;
};

std::string svg_lines(const std::vector<Series>& series, const std::vector<std::string>& colors,
                      const std::string& title, int w = 860, int h = 360) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) {
    ymax = ymin + 1.0;
    ymin -= 1.0;
  }
  const double pad = 40.0;
  auto sx = [&](double v) { return pad + (v - xmin) / (xmax - xmin) * (w - 2 * pad); };
  auto sy = [&](double v) { return h - pad - (v - ymin) / (ymax - ymin) * (h - 2 * pad); };
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << pad << "' y='20' font-size='14'>" << title << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out << "<polyline fill='none' stroke='" << colors[i % colors.size()]
        << "' stroke-width='1' points='";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      out << io::fmt_double(sx(s.x[k])) << ',' << io::fmt_double(sy(s.y[k])) << ' ';
    }
    out << "'/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& path,
                                          std::vector<std::string>& header) {
  const std::string text = io::read_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    if (first) {
      while (std::getline(ls, cell, ',')) header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::atof(cell.c_str()));
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_plot(const std::string& input, const std::string& out_dir) {
  if (!fs::exists(input)) {
    throw Error(Error::Kind::Io, "trace file not found: " + input);
  }
  std::vector<std::string> header;
  auto rows = read_csv(input, header);
  if (rows.empty()) throw Error(Error::Kind::Format, "empty trace: " + input);

  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };

  if (col("dof") >= 0) {  // forecast trace
    const int c_t = col("t"), c_dof = col("dof"), c_pred = col("predicted"),
              c_truth = col("truth");
    for (int d = 0; d < kNumDof; ++d) {
      Series pred, truth;
      for (const auto& r : rows) {
        if (static_cast<int>(r[c_dof]) != d) continue;
        pred.x.push_back(r[c_t]);
        pred.y.push_back(r[c_pred]);
        truth.x.push_back(r[c_t]);
        truth.y.push_back(r[c_truth]);
      }
      const std::string name = dof_name(static_cast<Dof>(d));
      io::atomic_write(fs::path(out_dir) / ("forecast_" + name + ".svg"),
                       svg_lines({truth, pred}, {"black", "steelblue"},
                                 name + ": truth (black) vs forecast (blue)"));
    }
    // Error histogram over all DoFs.
    const int c_err = col("error");
    std::vector<double> errs;
    for (const auto& r : rows) errs.push_back(std::abs(r[c_err]));
    std::sort(errs.begin(), errs.end());
    const int bins = 40;
    const double emax = errs.empty() ? 1.0 : errs.back();
    std::vector<double> counts(bins, 0.0);
    for (double e : errs) {
      int b = std::min(bins - 1, static_cast<int>(e / std::max(1e-12, emax) * bins));
      counts[b] += 1.0;
    }
    Series hist;
    for (int b = 0; b < bins; ++b) {
      hist.x.push_back(b * emax / bins);
      hist.y.push_back(counts[b]);
    }
    io::atomic_write(fs::path(out_dir) / "error_histogram.svg",
                     svg_lines({hist}, {"firebrick"}, "absolute forecast error histogram"));
  } else if (col("uav_x") >= 0) {  // episode trace
    const int c_t = col("t");
    for (const char* axis : {"x", "y", "z"}) {
      Series uav, deck;
      const int cu = col(std::string("uav_") + axis);
      const int cd = col(std::string("deck_") + axis);
      for (const auto& r : rows) {
        uav.x.push_back(r[c_t]);
        uav.y.push_back(r[cu]);
        deck.x.push_back(r[c_t]);
        deck.y.push_back(r[cd]);
      }
      io::atomic_write(fs::path(out_dir) / (std::string("track_") + axis + ".svg"),
                       svg_lines({deck, uav}, {"black", "steelblue"},
                                 std::string(axis) + ": deck (black) vs UAV (blue)"));
    }
    Series path_xy, deck_xy;
    const int cux = col("uav_x"), cuy = col("uav_y");
    const int cdx = col("deck_x"), cdy = col("deck_y");
    for (const auto& r : rows) {
      path_xy.x.push_back(r[cux]);
      path_xy.y.push_back(r[cuy]);
      deck_xy.x.push_back(r[cdx]);
      deck_xy.y.push_back(r[cdy]);
    }
    io::atomic_write(fs::path(out_dir) / "trajectory_xy.svg",
                     svg_lines({deck_xy, path_xy}, {"black", "steelblue"},
                               "planar track: deck (black) vs UAV (blue)"));
  } else {
    throw Error(Error::Kind::Format, "unrecognized trace columns in " + input);
  }
  log_info("plots written to " + out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral-temporal platform motion forecasting and landing benchmark"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string plot_input;
  std::vector<std::string> bench_methods{"specfuse", "fft_kf"};

  auto add_common = [&](CLI::App* cmd, bool needs_scenario = true) {
    if (needs_scenario) {
      cmd->add_option("--scenario", opts.scenario_path, "scenario JSON file")->required();
    }
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the scenario seed");
  };

  auto* synth = app.add_subcommand("synth", "write ground-truth platform motion traces");
  add_common(synth);
  synth->add_option("--duration", opts.duration, "trace duration [s]");

  auto* predict = app.add_subcommand("predict", "forecast-vs-truth trace and error summary");
  add_common(predict);
  predict->add_option("--method", opts.method, "specfuse | fft_kf");
  predict->add_option("--horizon", opts.horizon, "lookahead horizon [s]");
  predict->add_option("--duration", opts.duration, "run duration [s]");

  auto* plan = app.add_subcommand("plan", "one-shot trajectory plan");
  add_common(plan);

  auto* land = app.add_subcommand("land", "run one closed-loop landing episode");
  add_common(land);
  land->add_option("--method", opts.method, "specfuse | fft_kf");

  auto* bench = app.add_subcommand("bench", "Monte Carlo benchmark");
  add_common(bench);
  bench->add_option("--trials", opts.trials, "episodes per method");
  bench->add_option("--method", bench_methods, "methods to benchmark");
  bench->add_option("--threads", opts.threads, "worker threads (0 = hardware)");

  auto* plot = app.add_subcommand("plot", "render SVG plots from a trace CSV");
  plot->add_option("--input", plot_input, "trace CSV file")->required();
  plot->add_option("--out", opts.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(opts);
    if (predict->parsed()) return cmd_predict(opts);
    if (plan->parsed()) return cmd_plan(opts);
    if (land->parsed()) return cmd_land(opts);
    if (bench->parsed()) return cmd_bench(opts, bench_methods);
    if (plot->parsed()) return cmd_plot(plot_input, opts.out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case Error::Kind::Parameter:
      case Error::Kind::Format:
      case Error::Kind::Io:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
