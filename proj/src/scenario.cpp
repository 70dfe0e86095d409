#include "specfuse/scenario.hpp"

#include <nlohmann/json.hpp>

#include "specfuse/io.hpp"

namespace specfuse::mission {

namespace {

using nlohmann::json;

Vec3 vec3_of(const json& j, const Vec3& fallback) {
  if (j.is_null()) return fallback;
  if (j.is_number()) return Vec3::Constant(j.get<double>());
  if (!j.is_array() || j.size() != 3) {
    throw Error(Error::Kind::Format, "scenario: expected a 3-element array");
  }
  return Vec3(j[0], j[1], j[2]);
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

Scenario Scenario::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Error::Kind::Format, std::string("scenario parse error: ") + e.what());
  }

  Scenario sc;
  sc.schema_version = get_or(j, "schema_version", 1);
  if (sc.schema_version != 1) {
    throw Error(Error::Kind::Format, "scenario: unsupported schema_version");
  }
  sc.name = get_or<std::string>(j, "name", "unnamed");
  sc.seed = get_or<uint64_t>(j, "seed", 1);

  if (j.contains("sea")) {
    const auto& s = j["sea"];
    sc.hs = get_or(s, "hs", sc.hs);
    sc.tp = get_or(s, "tp", sc.tp);
    sc.n_components = get_or(s, "n_components", sc.n_components);
    if (s.contains("gains")) {
      const auto& g = s["gains"];
      for (int d = 0; d < kNumDof; ++d) {
        sc.gains.gain[d] = get_or(g, dof_name(static_cast<Dof>(d)), sc.gains.gain[d]);
      }
    }
  }
  if (j.contains("wind")) {
    const auto& w = j["wind"];
    sc.wind.mean_velocity = get_or(w, "mean_velocity", sc.wind.mean_velocity);
    sc.wind.turbulence_sigma = get_or(w, "turbulence_sigma", sc.wind.turbulence_sigma);
    sc.wind.length_scales =
        vec3_of(w.contains("length_scales") ? w["length_scales"] : json(), sc.wind.length_scales);
  }
  if (j.contains("platform")) {
    sc.platform_nominal =
        vec3_of(j["platform"].contains("nominal_position") ? j["platform"]["nominal_position"]
                                                           : json(),
                sc.platform_nominal);
  }
  if (j.contains("uav")) {
    const auto& u = j["uav"];
    sc.uav_start.position =
        vec3_of(u.contains("start_position") ? u["start_position"] : json(),
                Vec3(4.0, 3.0, 7.0));
    sc.uav_start.velocity =
        vec3_of(u.contains("start_velocity") ? u["start_velocity"] : json(), Vec3::Zero());
  } else {
    sc.uav_start.position = Vec3(4.0, 3.0, 7.0);
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    sc.imu_attitude_std = vec3_of(n.contains("attitude_std") ? n["attitude_std"] : json(),
                                  sc.imu_attitude_std);
    sc.imu_rate_std = vec3_of(n.contains("rate_std") ? n["rate_std"] : json(), sc.imu_rate_std);
    sc.position_std =
        vec3_of(n.contains("position_std") ? n["position_std"] : json(), sc.position_std);
    sc.velocity_std =
        vec3_of(n.contains("velocity_std") ? n["velocity_std"] : json(), sc.velocity_std);
  }
  if (j.contains("spectral")) {
    const auto& s = j["spectral"];
    sc.spectral_cfg.k_samples = get_or(s, "k_samples", sc.spectral_cfg.k_samples);
    sc.spectral_cfg.search_span = get_or(s, "search_span", sc.spectral_cfg.search_span);
    sc.spectral_cfg.threshold_ratio =
        get_or(s, "threshold_ratio", sc.spectral_cfg.threshold_ratio);
    sc.spectral_cfg.n_max = get_or(s, "n_max", sc.spectral_cfg.n_max);
  }
  if (j.contains("estimator")) {
    const auto& e = j["estimator"];
    sc.filter_cfg.q_scale = get_or(e, "q_scale", sc.filter_cfg.q_scale);
    sc.filter_cfg.r_attitude = get_or(e, "r_attitude", sc.filter_cfg.r_attitude);
    sc.filter_cfg.r_rate = get_or(e, "r_rate", sc.filter_cfg.r_rate);
    sc.filter_cfg.nis_window = get_or(e, "nis_window", sc.filter_cfg.nis_window);
  }
  if (j.contains("planner")) {
    const auto& p = j["planner"];
    sc.plan_weights.alpha = get_or(p, "alpha", sc.plan_weights.alpha);
    sc.plan_weights.beta = get_or(p, "beta", sc.plan_weights.beta);
    sc.plan_weights.gamma = get_or(p, "gamma", sc.plan_weights.gamma);
    sc.plan_weights.q_traj = vec3_of(p.contains("q_traj") ? p["q_traj"] : json(),
                                     sc.plan_weights.q_traj);
    sc.plan_weights.r_traj = vec3_of(p.contains("r_traj") ? p["r_traj"] : json(),
                                     sc.plan_weights.r_traj);
    sc.planner_cfg.refine_dt = get_or(p, "refine_dt", sc.planner_cfg.refine_dt);
    sc.planner_cfg.goal_height = get_or(p, "goal_height", sc.planner_cfg.goal_height);
    sc.planner_cfg.terminal_window =
        get_or(p, "terminal_window", sc.planner_cfg.terminal_window);
    sc.planner_cfg.budget_hint = get_or(p, "budget", sc.planner_cfg.budget_hint);
    if (p.contains("obstacles")) {
      for (const auto& ob : p["obstacles"]) {
        planner::Box box;
        box.min = vec3_of(ob["min"], Vec3::Zero());
        box.max = vec3_of(ob["max"], Vec3::Zero());
        sc.planner_cfg.obstacles.push_back(box);
      }
    }
  }
  if (j.contains("controller")) {
    const auto& c = j["controller"];
    sc.mpc.horizon = get_or(c, "horizon", sc.mpc.horizon);
    sc.mpc.ts = get_or(c, "ts", sc.mpc.ts);
    sc.mpc.q_diag.head<3>() = vec3_of(c.contains("q_pos") ? c["q_pos"] : json(),
                                      sc.mpc.q_diag.head<3>());
    sc.mpc.q_diag.tail<3>() = vec3_of(c.contains("q_vel") ? c["q_vel"] : json(),
                                      sc.mpc.q_diag.tail<3>());
    sc.mpc.r_diag = vec3_of(c.contains("r_du") ? c["r_du"] : json(), sc.mpc.r_diag);
    sc.mpc.p_diag.head<3>() = vec3_of(c.contains("p_pos") ? c["p_pos"] : json(),
                                      sc.mpc.p_diag.head<3>());
    sc.mpc.p_diag.tail<3>() = vec3_of(c.contains("p_vel") ? c["p_vel"] : json(),
                                      sc.mpc.p_diag.tail<3>());
    if (c.contains("svr")) {
      const auto& s = c["svr"];
      sc.svr.c = get_or(s, "c", sc.svr.c);
      sc.svr.epsilon = get_or(s, "epsilon", sc.svr.epsilon);
      sc.svr.kernel.alpha_mix = get_or(s, "alpha_mix", sc.svr.kernel.alpha_mix);
      sc.svr.kernel.rbf_gamma = get_or(s, "rbf_gamma", sc.svr.kernel.rbf_gamma);
      sc.svr.kernel.poly_degree = get_or(s, "poly_degree", sc.svr.kernel.poly_degree);
      sc.svr.kernel.poly_offset = get_or(s, "poly_offset", sc.svr.kernel.poly_offset);
      sc.svr_enabled = get_or(s, "enabled", sc.svr_enabled);
    }
  }
  if (j.contains("mission")) {
    const auto& m = j["mission"];
    sc.warmup = get_or(m, "warmup", sc.warmup);
    sc.replan_period = get_or(m, "replan_period", sc.replan_period);
    sc.forecast_horizon = get_or(m, "forecast_horizon", sc.forecast_horizon);
    sc.ep_lookahead = get_or(m, "ep_lookahead", sc.ep_lookahead);
    sc.timeout = get_or(m, "timeout", sc.timeout);
    sc.battery_start = get_or(m, "battery_start", sc.battery_start);
    sc.battery_decay = get_or(m, "battery_decay", sc.battery_decay);
    sc.svr_target_lead = get_or(m, "svr_target_lead", sc.svr_target_lead);
  }
  sc.validate();
  return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(Error::Kind::Io, "scenario file not found: " + path.string());
  }
  try {
    return from_json_text(io::read_file(path));
  } catch (const Error& e) {
    if (e.kind() == Error::Kind::Format) {
      throw Error(Error::Kind::Format, path.string() + ": " + e.what());
    }
    throw;
  }
}

std::string Scenario::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["name"] = name;
  j["seed"] = seed;
  j["sea"] = {{"hs", hs}, {"tp", tp}, {"n_components", n_components}};
  json g;
  for (int d = 0; d < kNumDof; ++d) g[dof_name(static_cast<Dof>(d))] = gains.gain[d];
  j["sea"]["gains"] = g;
  j["wind"] = {{"mean_velocity", wind.mean_velocity},
               {"turbulence_sigma", wind.turbulence_sigma},
               {"length_scales", vec3_json(wind.length_scales)}};
  j["platform"] = {{"nominal_position", vec3_json(platform_nominal)}};
  j["uav"] = {{"start_position", vec3_json(uav_start.position)},
              {"start_velocity", vec3_json(uav_start.velocity)}};
  j["noise"] = {{"attitude_std", vec3_json(imu_attitude_std)},
                {"rate_std", vec3_json(imu_rate_std)},
                {"position_std", vec3_json(position_std)},
                {"velocity_std", vec3_json(velocity_std)}};
  j["spectral"] = {{"k_samples", spectral_cfg.k_samples},
                   {"search_span", spectral_cfg.search_span},
                   {"threshold_ratio", spectral_cfg.threshold_ratio},
                   {"n_max", spectral_cfg.n_max}};
  j["estimator"] = {{"q_scale", filter_cfg.q_scale},
                    {"r_attitude", filter_cfg.r_attitude},
                    {"r_rate", filter_cfg.r_rate},
                    {"nis_window", filter_cfg.nis_window}};
  j["planner"] = {{"alpha", plan_weights.alpha},
                  {"beta", plan_weights.beta},
                  {"gamma", plan_weights.gamma},
                  {"q_traj", vec3_json(plan_weights.q_traj)},
                  {"r_traj", vec3_json(plan_weights.r_traj)},
                  {"refine_dt", planner_cfg.refine_dt},
                  {"goal_height", planner_cfg.goal_height},
                  {"terminal_window", planner_cfg.terminal_window},
                  {"budget", planner_cfg.budget_hint}};
  j["controller"] = {{"horizon", mpc.horizon},
                     {"ts", mpc.ts},
                     {"q_pos", vec3_json(mpc.q_diag.head<3>())},
                     {"q_vel", vec3_json(mpc.q_diag.tail<3>())},
                     {"r_du", vec3_json(mpc.r_diag)},
                     {"p_pos", vec3_json(mpc.p_diag.head<3>())},
                     {"p_vel", vec3_json(mpc.p_diag.tail<3>())},
                     {"svr",
                      {{"c", svr.c},
                       {"epsilon", svr.epsilon},
                       {"alpha_mix", svr.kernel.alpha_mix},
                       {"rbf_gamma", svr.kernel.rbf_gamma},
                       {"poly_degree", svr.kernel.poly_degree},
                       {"poly_offset", svr.kernel.poly_offset},
                       {"enabled", svr_enabled}}}};
  j["mission"] = {{"warmup", warmup},
                  {"replan_period", replan_period},
                  {"forecast_horizon", forecast_horizon},
                  {"ep_lookahead", ep_lookahead},
                  {"timeout", timeout},
                  {"battery_start", battery_start},
                  {"battery_decay", battery_decay},
                  {"svr_target_lead", svr_target_lead}};
  return j.dump(2);
}

uint64_t Scenario::fingerprint() const {
  const std::string s = to_json();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void Scenario::validate() const {
  if (!(timeout > 0.0)) throw Error(Error::Kind::Parameter, "scenario: timeout must be > 0");
  if (!(hs > 0.0) || !(tp > 0.0)) {
    throw Error(Error::Kind::Parameter, "scenario: Hs and Tp must be positive");
  }
  if (n_components < 1) {
    throw Error(Error::Kind::Parameter, "scenario: n_components must be >= 1");
  }
  if (!(tick_rate > 0.0)) throw Error(Error::Kind::Parameter, "scenario: bad tick rate");
  mpc.validate();
}

}  // namespace specfuse::mission
