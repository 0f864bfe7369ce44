#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neuroavoid/config.hpp"
#include "neuroavoid/emulator.hpp"
#include "neuroavoid/harness.hpp"
#include "neuroavoid/render.hpp"

namespace fs = std::filesystem;
using namespace neuroavoid;

namespace {

struct Common {
  std::string config;
  std::string scenario;
  std::string mode;
  std::string out = "out";
  std::vector<std::string> sets;
  long long seed = -1;
  int trials = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "run config JSON");
  cmd->add_option("-s,--scenario", c.scenario, "scenario JSON (overrides the config)");
  cmd->add_option("-m,--mode", c.mode, "baseline | snn | raw_events | random_events");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("-o,--out", c.out, "output directory");
  cmd->add_option("--set", c.sets, "override a parameter, e.g. --set avoidance.eta=400");
}

nlohmann::json parse_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return text;
  }
}

std::pair<RunConfig, Scenario> resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + s);
    set_parameter(cfg, s.substr(0, eq), parse_value(s.substr(eq + 1)));
  }
  if (!c.mode.empty()) cfg.mode = parse_mode(c.mode);
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.trials > 0) cfg.n_trials = c.trials;
  std::string path = c.scenario.empty() ? cfg.scenario : c.scenario;
  if (path.empty()) throw std::invalid_argument("no scenario given");
  if (c.scenario.empty() && !c.config.empty() && fs::path(path).is_relative() && !fs::exists(path))
    path = (fs::path(c.config).parent_path() / path).string();
  cfg.scenario = path;
  cfg.validate();
  return {cfg, load_scenario(path)};
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void print_aggregate(const BatchResult& b) {
  const auto& a = b.aggregate;
  std::cout << b.scenario << " [" << b.label << "] n=" << a.n << " success=" << a.success_mean * 100.0
            << "% std=" << a.success_std * 100.0 << " T=" << a.T_mean << "s l_Y=" << a.path_length_mean
            << "m collisions=" << a.collisions_mean << " d_G=" << a.d_goal_mean << "m speed=" << a.speed_mean
            << "m/s |zeta_dot|med=" << a.zeta_dot_median << "deg/s\n";
}

int cmd_run(const Common& c) {
  auto [cfg, scenario] = resolve(c);
  const std::uint64_t seed = trial_seed(cfg.seed, 0);
  const TrialResult r = run_trial(cfg, scenario, seed);
  fs::create_directories(c.out);
  {
    auto os = open_out(fs::path(c.out) / "trajectory.csv");
    write_trajectory(os, r.log);
  }
  {
    auto os = open_out(fs::path(c.out) / "perception.csv");
    write_perception(os, r.log);
  }
  BatchResult b;
  b.scenario = scenario.id;
  b.mode = b.label = to_string(cfg.mode);
  b.trials.push_back({0, seed, r.metrics, r.counters});
  b.aggregate = aggregate(b.trials);
  {
    auto os = open_out(fs::path(c.out) / "metrics.csv");
    write_trials_header(os);
    write_trial_row(os, b, b.trials.front());
  }
  if (r.last_spikes) {
    auto os = open_out(fs::path(c.out) / "spikes.csv");
    write_spike_record(os, *r.last_spikes);
  }
  if (r.last_map) {
    auto os = open_out(fs::path(c.out) / "activation.csv");
    write_grid(os, r.last_map->magnitude);
    const auto& p = cfg.avoidance;
    auto us = open_out(fs::path(c.out) / "potential.csv");
    write_grid(us, avoidance::potential_field<double>(r.last_map->points, p.eta, p.p0, p.epsilon));
  }
  const auto& m = r.metrics;
  std::cout << scenario.id << " [" << to_string(cfg.mode) << "] S=" << m.success << " T=" << m.T
            << "s l_Y=" << m.path_length << "m collisions=" << m.n_collisions << " d_G=" << m.d_goal
            << "m speed=" << m.mean_speed() << "m/s |zeta_dot|med=" << m.median_abs_zeta_dot() << "deg/s"
            << (m.timed_out ? " (timeout)" : "") << '\n';
  return 0;
}

int cmd_batch(const Common& c) {
  auto [cfg, scenario] = resolve(c);
  const BatchResult b = batch_run(cfg, scenario, c.out);
  auto os = open_out(fs::path(c.out) / "plot_data.csv");
  emit_plot_data(os, {b});
  print_aggregate(b);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::string& param, const std::vector<std::string>& values) {
  auto [cfg, scenario] = resolve(c);
  SweepSpec spec;
  if (axis == "method") spec.axis = SweepAxis::method;
  else if (axis == "weight_seed") spec.axis = SweepAxis::weight_seed;
  else if (axis == "parameter") spec.axis = SweepAxis::parameter;
  else throw std::invalid_argument("axis must be method | weight_seed | parameter");
  spec.parameter = param;
  for (const auto& v : values) spec.values.push_back(parse_value(v));
  const SweepReport report = sweep(cfg, scenario, spec, c.out);
  auto os = open_out(fs::path(c.out) / "plot_data.csv");
  emit_plot_data(os, report.batches);
  for (const auto& b : report.batches) print_aggregate(b);
  std::cout << "success std across values: " << report.success_std() * 100.0 << " pp\n";
  return 0;
}

struct EmulateOpts {
  std::vector<std::string> frames;
  std::string scenario;
  std::string method = "M1";
  double threshold = -1.0;
  bool erosion = false;
  int n_frames = 20;
  double fps = 10.0;
  double speed = 0.08;
  std::string out = "events.txt";
  std::string pgm_dir;
  std::string frame_dir;
};

int cmd_emulate(const EmulateOpts& o) {
  EmulatorConfig ecfg;
  ecfg.method = parse_method(o.method);
  ecfg.threshold = o.threshold > 0 ? o.threshold : EmulatorConfig::default_threshold(ecfg.method);
  ecfg.erosion = o.erosion;
  ecfg.validate();

  std::vector<IntensityImage> frames;
  if (!o.frames.empty()) {
    for (const auto& f : o.frames) {
      std::ifstream in(f, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open frame " + f);
      frames.push_back(read_ppm(in));
    }
  } else if (!o.scenario.empty()) {
    const Scenario s = load_scenario(o.scenario);
    const CameraModel cam;
    World world = make_world(s);
    const Vec3 dir = (s.goal - s.start).norm() > 0 ? Vec3((s.goal - s.start).normalized()) : Vec3::UnitX();
    for (int k = 0; k < o.n_frames; ++k) {
      Pose ee = Pose::Identity();
      ee.translation() = s.start + dir * (o.speed * k / o.fps);
      frames.push_back(render_frame(world, camera_pose_from_ee(ee, cam), cam));
      world = step_world(std::move(world), 1.0 / o.fps);
    }
  } else {
    throw std::invalid_argument("emulate needs --frames or --scenario");
  }
  if (frames.size() < 2) throw std::invalid_argument("emulate needs at least two frames");

  if (!o.frame_dir.empty()) {
    fs::create_directories(o.frame_dir);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      std::ofstream os(fs::path(o.frame_dir) / ("frame_" + std::to_string(k) + ".ppm"), std::ios::binary);
      write_ppm(os, frames[k]);
    }
  }
  if (!o.pgm_dir.empty()) fs::create_directories(o.pgm_dir);
  if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
  auto os = open_out(o.out);
  long total = 0;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const EventImage ev = emulate(frames[k - 1], frames[k], ecfg, static_cast<double>(k) / o.fps);
    total += ev.count();
    write_event_stream(os, serialize_events(ev));
    if (!o.pgm_dir.empty()) {
      auto ps = open_out(fs::path(o.pgm_dir) / ("events_" + std::to_string(k) + ".pgm"));
      write_event_pgm(ps, ev);
    }
  }
  std::cout << frames.size() - 1 << " event images, " << total << " events -> " << o.out << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<BatchResult> all;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    for (auto& b : read_trials_csv(in)) all.push_back(std::move(b));
  }
  write_aggregate_header(std::cout);
  for (const auto& b : all) write_aggregate_row(std::cout, b);
  if (!out.empty()) {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    auto os = open_out(out);
    emit_plot_data(os, all);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-based obstacle avoidance simulator"};
  app.require_subcommand(1);

  Common run_opts, batch_opts, sweep_opts;
  auto* run = app.add_subcommand("run", "run one trial");
  add_common(run, run_opts);

  auto* batch = app.add_subcommand("batch", "run a seeded batch of trials");
  add_common(batch, batch_opts);
  batch->add_option("-n,--trials", batch_opts.trials, "number of trials");

  std::string axis = "method", param;
  std::vector<std::string> values;
  auto* sw = app.add_subcommand("sweep", "compare batches across one axis");
  add_common(sw, sweep_opts);
  sw->add_option("-n,--trials", sweep_opts.trials, "trials per value");
  sw->add_option("--axis", axis, "method | weight_seed | parameter");
  sw->add_option("--param", param, "dotted parameter path for --axis parameter");
  sw->add_option("--values", values, "axis values")->required()->delimiter(',');

  EmulateOpts eo;
  auto* em = app.add_subcommand("emulate", "convert frames to an event stream");
  em->add_option("--frames", eo.frames, "PPM frames in temporal order");
  em->add_option("-s,--scenario", eo.scenario, "render frames from a scenario instead");
  em->add_option("--method", eo.method, "M1..M5");
  em->add_option("--threshold", eo.threshold, "emission threshold (method default when omitted)");
  em->add_flag("--erosion", eo.erosion, "apply the erosion filter");
  em->add_option("--n-frames", eo.n_frames, "frames rendered from the scenario");
  em->add_option("--fps", eo.fps, "frame rate");
  em->add_option("--speed", eo.speed, "camera speed towards the goal (m/s)");
  em->add_option("-o,--out", eo.out, "event stream file (t_us x y p)");
  em->add_option("--pgm-dir", eo.pgm_dir, "also write one PGM per event image");
  em->add_option("--frame-dir", eo.frame_dir, "also write the rendered frames as PPM");

  std::vector<std::string> inputs;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "aggregate trials.csv files");
  rep->add_option("inputs", inputs, "trials.csv files")->required();
  rep->add_option("-o,--out", report_out, "plot-data CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opts);
    if (*batch) return cmd_batch(batch_opts);
    if (*sw) return cmd_sweep(sweep_opts, axis, param, values);
    if (*em) return cmd_emulate(eo);
    if (*rep) return cmd_report(inputs, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
