#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "neuroavoid/avoidance.hpp"
#include "neuroavoid/emulator.hpp"
#include "neuroavoid/motion.hpp"
#include "neuroavoid/scene.hpp"
#include "neuroavoid/snn.hpp"

namespace neuroavoid {

enum class Mode { baseline, snn, raw_events, random_events };

std::string to_string(Mode m);
Mode parse_mode(const std::string& name);

struct MotionConfig {
  motion::PidGains pid;
  motion::SafetyParams safety;
  motion::WorkspaceLimits<double> workspace;
  /// Position reaching tolerance before the next DMP waypoint is generated.
  double delta_y = 0.02;
  /// Goal tolerance used by the success criterion.
  double delta_g = 0.03;
  /// Carried for completeness; no formula consumes it.
  double delta_obs = 0.05;
  int n_basis = 50;
  double alpha_y = 25.0;
  double alpha_s = 4.0;
  /// DMP integration step per generated waypoint (DMP time units).
  double dmp_dt = 0.002;
  /// Duration of the minimum-jerk demonstration the plan is fitted to.
  double demo_duration = 1.0;
  /// First-order lag between commanded and actual EE velocity (seconds).
  double actuator_tau = 0.2;
  int plant_substeps = 10;
  double ee_radius = 0.05;

  void validate() const;
};

/// Everything needed to reproduce one trial or batch.
struct RunConfig {
  std::string scenario;
  Mode mode = Mode::snn;
  EmulatorConfig emulator;
  snn::NetworkConfig network;
  avoidance::Params avoidance;
  MotionConfig motion;
  CameraModel camera;
  double perception_hz = 10.0;
  double motion_hz = 50.0;
  std::uint64_t seed = 1;
  int n_trials = 30;
  double timeout = 60.0;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

/// Sets one parameter by dotted path, e.g. "avoidance.eta" or "network.lif.v_thresh".
void set_parameter(RunConfig& cfg, const std::string& path, const nlohmann::json& value);

}  // namespace neuroavoid
