#include "neuroavoid/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <stdexcept>

namespace neuroavoid {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// JSON has no infinities; null stands in for an unbounded limit.
json limit(double v) { return std::isinf(v) ? json(nullptr) : json(v); }
double limit(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

Vec3 mount_rpy_deg(const Pose& mount) {
  const Vec3 ypr = mount.rotation().eulerAngles(2, 1, 0);
  return Vec3(ypr.z(), ypr.y(), ypr.x()) * (180.0 / M_PI) + Vec3::Zero();
}

json rgb(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }
Rgb rgb(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected an RGB triple");
  Rgb c{};
  for (int i = 0; i < 3; ++i) {
    const int v = j[static_cast<std::size_t>(i)].get<int>();
    if (v < 0 || v > 255) throw std::invalid_argument("colour channel out of range");
    c[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
  }
  return c;
}

void reject_unknown(const json& defaults, const json& user, const std::string& where) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    if (!defaults.contains(key)) throw std::invalid_argument("unknown config key: " + where + key);
    if (defaults[key].is_object()) reject_unknown(defaults[key], value, where + key + ".");
  }
}

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw std::invalid_argument("unknown scenario key: " + where + "." + key);
  }
}

json layer(const snn::ConvLayerSpec& l) {
  return {{"kernel", {l.kernel_h, l.kernel_w}}, {"stride", {l.stride_h, l.stride_w}}, {"input", {l.in_h, l.in_w}}};
}

snn::ConvLayerSpec layer(const json& j) {
  snn::ConvLayerSpec l;
  l.kernel_h = j.at("kernel")[0];
  l.kernel_w = j.at("kernel")[1];
  l.stride_h = j.at("stride")[0];
  l.stride_w = j.at("stride")[1];
  l.in_h = j.at("input")[0];
  l.in_w = j.at("input")[1];
  return l;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::baseline: return "baseline";
    case Mode::snn: return "snn";
    case Mode::raw_events: return "raw_events";
    case Mode::random_events: return "random_events";
  }
  return "snn";
}

Mode parse_mode(const std::string& name) {
  if (name == "baseline") return Mode::baseline;
  if (name == "snn") return Mode::snn;
  if (name == "raw_events") return Mode::raw_events;
  if (name == "random_events") return Mode::random_events;
  throw std::invalid_argument("unknown mode: " + name);
}

void MotionConfig::validate() const {
  pid.validate();
  safety.validate();
  workspace.validate();
  if (!(delta_y > 0) || !(delta_g > 0)) throw std::invalid_argument("motion: tolerances must be > 0");
  if (n_basis < 1 || !(alpha_y > 0) || !(alpha_s > 0) || !(dmp_dt > 0) || !(demo_duration > 0))
    throw std::invalid_argument("motion: invalid DMP settings");
  if (actuator_tau < 0 || plant_substeps < 1) throw std::invalid_argument("motion: invalid plant settings");
  if (ee_radius < 0) throw std::invalid_argument("motion: ee_radius must be >= 0");
}

void RunConfig::validate() const {
  emulator.validate();
  network.validate();
  avoidance.validate();
  motion.validate();
  camera.validate();
  if (!(perception_hz > 0) || !(motion_hz > 0)) throw std::invalid_argument("config: rates must be > 0");
  if (n_trials < 1) throw std::invalid_argument("config: n_trials must be >= 1");
  if (!(timeout > 0)) throw std::invalid_argument("config: timeout must be > 0");
  const auto& first = network.layers.front();
  if (first.in_h != camera.height || first.in_w != camera.width)
    throw std::invalid_argument("config: first SNN layer must match the camera resolution");
}

json to_json(const RunConfig& c) {
  json layers = json::array();
  for (const auto& l : c.network.layers) layers.push_back(layer(l));
  const auto& ws = c.motion.workspace;
  return {
      {"scenario", c.scenario},
      {"mode", to_string(c.mode)},
      {"seed", c.seed},
      {"n_trials", c.n_trials},
      {"timeout", c.timeout},
      {"perception_hz", c.perception_hz},
      {"motion_hz", c.motion_hz},
      {"emulator",
       {{"method", to_string(c.emulator.method)},
        {"threshold", c.emulator.threshold},
        {"erosion", c.emulator.erosion},
        {"erosion_size", c.emulator.erosion_size},
        {"blur_size", c.emulator.blur_size}}},
      {"network",
       {{"layers", layers},
        {"w_c", c.network.w_c},
        {"weight_seed", c.network.weight_seed},
        {"t_sim", c.network.t_sim},
        {"r_on", c.network.r_on},
        {"r_off", c.network.r_off},
        {"persistent_state", c.network.persistent_state},
        {"lif",
         {{"v_thresh", c.network.lif.v_thresh},
          {"v_reset", c.network.lif.v_reset},
          {"v_rest", c.network.lif.v_rest},
          {"tau_v", c.network.lif.tau_v},
          {"t_refrac", c.network.lif.t_refrac},
          {"dt", c.network.lif.dt}}}}},
      {"avoidance",
       {{"eta", c.avoidance.eta},
        {"p0", c.avoidance.p0},
        {"epsilon", c.avoidance.epsilon},
        {"c_delta", c.avoidance.c_delta},
        {"t_act", c.avoidance.t_act},
        {"n_phi", c.avoidance.n_phi},
        {"phi_max", c.avoidance.phi_max}}},
      {"motion",
       {{"kp", c.motion.pid.kp},
        {"ki", c.motion.pid.ki},
        {"kd", c.motion.pid.kd},
        {"delta_y", c.motion.delta_y},
        {"delta_g", c.motion.delta_g},
        {"delta_obs", c.motion.delta_obs},
        {"delta_safety", c.motion.safety.delta_safety},
        {"gamma_v", c.motion.safety.gamma_v},
        {"gamma_a", c.motion.safety.gamma_a},
        {"workspace_lower", {limit(ws.lower.x()), limit(ws.lower.y()), limit(ws.lower.z())}},
        {"workspace_upper", {limit(ws.upper.x()), limit(ws.upper.y()), limit(ws.upper.z())}},
        {"n_basis", c.motion.n_basis},
        {"alpha_y", c.motion.alpha_y},
        {"alpha_s", c.motion.alpha_s},
        {"dmp_dt", c.motion.dmp_dt},
        {"demo_duration", c.motion.demo_duration},
        {"actuator_tau", c.motion.actuator_tau},
        {"plant_substeps", c.motion.plant_substeps},
        {"ee_radius", c.motion.ee_radius}}},
      {"camera",
       {{"width", c.camera.width},
        {"height", c.camera.height},
        {"focal_length", c.camera.focal_length},
        {"cx", c.camera.cx},
        {"cy", c.camera.cy},
        {"supersample", c.camera.supersample},
        {"mount_offset", vec(Vec3(c.camera.mount.translation()))},
        {"mount_rpy_deg", vec(mount_rpy_deg(c.camera.mount))}}},
  };
}

RunConfig run_config_from_json(const json& user) {
  json j = to_json(RunConfig{});
  reject_unknown(j, user, "");
  j.merge_patch(user);

  RunConfig c;
  c.scenario = j["scenario"].get<std::string>();
  c.mode = parse_mode(j["mode"].get<std::string>());
  c.seed = j["seed"].get<std::uint64_t>();
  c.n_trials = j["n_trials"];
  c.timeout = j["timeout"];
  c.perception_hz = j["perception_hz"];
  c.motion_hz = j["motion_hz"];

  const auto& e = j["emulator"];
  c.emulator.method = parse_method(e["method"].get<std::string>());
  // Without an explicit threshold the method's own default applies.
  c.emulator.threshold = e["threshold"];
  if (!user.contains("emulator") || !user["emulator"].contains("threshold"))
    c.emulator.threshold = EmulatorConfig::default_threshold(c.emulator.method);
  c.emulator.erosion = e["erosion"];
  c.emulator.erosion_size = e["erosion_size"];
  c.emulator.blur_size = e["blur_size"];

  const auto& n = j["network"];
  c.network.layers.clear();
  for (const auto& l : n["layers"]) c.network.layers.push_back(layer(l));
  c.network.w_c = n["w_c"];
  c.network.weight_seed = n["weight_seed"].get<std::uint64_t>();
  c.network.t_sim = n["t_sim"];
  c.network.r_on = n["r_on"];
  c.network.r_off = n["r_off"];
  c.network.persistent_state = n["persistent_state"];
  const auto& lif = n["lif"];
  c.network.lif.v_thresh = lif["v_thresh"];
  c.network.lif.v_reset = lif["v_reset"];
  c.network.lif.v_rest = lif["v_rest"];
  c.network.lif.tau_v = lif["tau_v"];
  c.network.lif.t_refrac = lif["t_refrac"];
  c.network.lif.dt = lif["dt"];

  const auto& a = j["avoidance"];
  c.avoidance.eta = a["eta"];
  c.avoidance.p0 = a["p0"];
  c.avoidance.epsilon = a["epsilon"];
  c.avoidance.c_delta = a["c_delta"];
  c.avoidance.t_act = a["t_act"];
  c.avoidance.n_phi = a["n_phi"];
  c.avoidance.phi_max = a["phi_max"];

  const auto& m = j["motion"];
  c.motion.pid.kp = m["kp"];
  c.motion.pid.ki = m["ki"];
  c.motion.pid.kd = m["kd"];
  c.motion.delta_y = m["delta_y"];
  c.motion.delta_g = m["delta_g"];
  c.motion.delta_obs = m["delta_obs"];
  c.motion.safety.delta_safety = m["delta_safety"];
  c.motion.safety.gamma_v = m["gamma_v"];
  c.motion.safety.gamma_a = m["gamma_a"];
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    c.motion.workspace.lower(i) = limit(m["workspace_lower"][static_cast<std::size_t>(i)], -inf);
    c.motion.workspace.upper(i) = limit(m["workspace_upper"][static_cast<std::size_t>(i)], inf);
  }
  c.motion.n_basis = m["n_basis"];
  c.motion.alpha_y = m["alpha_y"];
  c.motion.alpha_s = m["alpha_s"];
  c.motion.dmp_dt = m["dmp_dt"];
  c.motion.demo_duration = m["demo_duration"];
  c.motion.actuator_tau = m["actuator_tau"];
  c.motion.plant_substeps = m["plant_substeps"];
  c.motion.ee_radius = m["ee_radius"];

  const auto& cam = j["camera"];
  c.camera.width = cam["width"];
  c.camera.height = cam["height"];
  c.camera.focal_length = cam["focal_length"];
  c.camera.cx = cam["cx"];
  c.camera.cy = cam["cy"];
  c.camera.supersample = cam["supersample"];
  const Vec3 rpy = vec(cam["mount_rpy_deg"]) * (M_PI / 180.0);
  Pose mount = Pose::Identity();
  mount.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                    Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                       .toRotationMatrix();
  mount.translation() = vec(cam["mount_offset"]);
  c.camera.mount = mount;

  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return run_config_from_json(json::parse(in));
}

json to_json(const Scenario& s) {
  json obstacles = json::array();
  for (const auto& o : s.obstacles) {
    json jo = {{"shape", o.shape == ObstacleShape::sphere ? "sphere" : "box"},
               {"position", vec(o.start)},
               {"color", rgb(o.color)}};
    if (o.shape == ObstacleShape::sphere) jo["radius"] = o.radius;
    else jo["half_extents"] = vec(o.half_extents);
    if (o.motion) {
      jo["motion"] = {{"direction", vec(o.motion->direction)}, {"speed", o.motion->speed},
                      {"max_travel", limit(o.motion->max_travel)}};
    }
    obstacles.push_back(jo);
  }
  const auto& bg = s.background;
  return {{"id", s.id},
          {"task", s.task},
          {"background",
           {{"kind", bg.kind == Background::Kind::uniform ? "uniform" : "tiles"},
            {"base", rgb(bg.base)},
            {"contrast", bg.contrast},
            {"tile_size", bg.tile_size},
            {"wall_x", bg.wall_x},
            {"seed", bg.seed}}},
          {"obstacles", obstacles},
          {"start", vec(s.start)},
          {"goal", vec(s.goal)},
          {"trigger_time", s.trigger_time},
          {"min_duration", s.min_duration}};
}

Scenario scenario_from_json(const json& j) {
  only_keys(j, {"id", "task", "background", "obstacles", "start", "goal", "trigger_time", "min_duration"}, "scenario");
  Scenario s;
  s.id = j.at("id").get<std::string>();
  s.task = j.at("task");
  s.start = vec(j.at("start"));
  s.goal = j.contains("goal") ? vec(j["goal"]) : s.start;
  s.trigger_time = j.value("trigger_time", 0.0);
  s.min_duration = j.value("min_duration", 0.0);
  if (j.contains("background")) {
    const auto& b = j["background"];
    only_keys(b, {"kind", "base", "contrast", "tile_size", "wall_x", "seed"}, "background");
    const std::string kind = b.value("kind", "tiles");
    if (kind != "tiles" && kind != "uniform") throw std::invalid_argument("background kind must be tiles|uniform");
    s.background.kind = kind == "uniform" ? Background::Kind::uniform : Background::Kind::tiles;
    if (b.contains("base")) s.background.base = rgb(b["base"]);
    s.background.contrast = b.value("contrast", s.background.contrast);
    s.background.tile_size = b.value("tile_size", s.background.tile_size);
    s.background.wall_x = b.value("wall_x", s.background.wall_x);
    s.background.seed = b.value("seed", s.background.seed);
  }
  for (const auto& jo : j.value("obstacles", json::array())) {
    only_keys(jo, {"shape", "position", "radius", "half_extents", "color", "motion"}, "obstacle");
    Obstacle o;
    const std::string shape = jo.value("shape", "sphere");
    if (shape != "sphere" && shape != "box") throw std::invalid_argument("obstacle shape must be sphere|box");
    o.shape = shape == "sphere" ? ObstacleShape::sphere : ObstacleShape::box;
    o.start = vec(jo.at("position"));
    o.center = o.start;
    if (jo.contains("radius")) o.radius = jo["radius"];
    if (jo.contains("half_extents")) o.half_extents = vec(jo["half_extents"]);
    if (jo.contains("color")) o.color = rgb(jo["color"]);
    if (jo.contains("motion")) {
      const auto& jm = jo["motion"];
      only_keys(jm, {"direction", "speed", "max_travel"}, "motion");
      LinearPath p;
      p.direction = vec(jm.at("direction"));
      p.speed = jm.at("speed");
      p.max_travel = limit(jm.value("max_travel", json(nullptr)), std::numeric_limits<double>::infinity());
      o.motion = p;
    }
    s.obstacles.push_back(o);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario: " + path);
  return scenario_from_json(json::parse(in));
}

void set_parameter(RunConfig& cfg, const std::string& path, const json& value) {
  json patch = json::object();
  json* node = &patch;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
  json full = to_json(cfg);
  reject_unknown(full, patch, "");
  full.merge_patch(patch);
  // Keep the explicit threshold unless the patch itself names the method.
  if (!patch.contains("emulator") || !patch["emulator"].contains("method") ||
      patch["emulator"].contains("threshold")) {
    cfg = run_config_from_json(full);
    return;
  }
  full["emulator"].erase("threshold");
  json rebuilt = full;
  cfg = run_config_from_json(rebuilt);
}

}  // namespace neuroavoid
