#include "neuroavoid/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "neuroavoid/emulator.hpp"
#include "neuroavoid/mailbox.hpp"
#include "neuroavoid/motion.hpp"
#include "neuroavoid/render.hpp"

namespace neuroavoid {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation.
double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (const double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

EventImage random_events(int h, int w, double density, std::mt19937_64& rng) {
  EventImage img(h, w);
  std::bernoulli_distribution fire(std::clamp(density, 0.0, 1.0));
  std::bernoulli_distribution on(0.5);
  for (Eigen::Index i = 0; i < img.polarity.size(); ++i) {
    if (fire(rng)) img.polarity.data()[i] = on(rng) ? 1 : -1;
  }
  return img;
}

struct Plan {
  motion::DmpParams<double> dmp;
  std::vector<Vec3> reference;
};

Plan make_plan(const RunConfig& cfg, const Scenario& scenario) {
  const auto& m = cfg.motion;
  Plan plan;
  if ((scenario.goal - scenario.start).norm() < 1e-9) {
    plan.dmp = motion::make_dmp<double>(scenario.start, scenario.goal, m.n_basis, m.demo_duration, m.alpha_y,
                                        m.alpha_s);
    plan.reference = {scenario.start};
    return plan;
  }
  const int samples = std::max(3, static_cast<int>(std::lround(m.demo_duration / m.dmp_dt)) + 1);
  const auto [t, y] = motion::minimum_jerk<double>(scenario.start, scenario.goal, m.demo_duration, samples);
  plan.dmp = motion::fit_dmp<double>(t, y, m.n_basis, m.alpha_y, m.alpha_s);
  const int steps = static_cast<int>(std::ceil(3.0 * plan.dmp.tau / m.dmp_dt));
  plan.reference = motion::rollout<double>(plan.dmp, m.dmp_dt, steps, m.workspace);
  return plan;
}

void put_vec(std::ostream& os, const Vec3& v) { os << v.x() << ',' << v.y() << ',' << v.z(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string axis_label(const SweepSpec& spec, const nlohmann::json& value) {
  const std::string v = value.is_string() ? value.get<std::string>() : value.dump();
  switch (spec.axis) {
    case SweepAxis::method: return "method=" + v;
    case SweepAxis::weight_seed: return "weight_seed=" + v;
    case SweepAxis::parameter: return spec.parameter + "=" + v;
  }
  return v;
}

}  // namespace

double TrialMetrics::mean_speed() const { return mean(speed); }

double TrialMetrics::median_abs_zeta_dot() const {
  std::vector<double> a(zeta_dot.size());
  std::transform(zeta_dot.begin(), zeta_dot.end(), a.begin(), [](double z) { return std::abs(z); });
  return median(a);
}

std::vector<std::pair<double, double>> turning_angles(const std::vector<double>& t, const std::vector<Vec3>& y) {
  if (t.size() != y.size()) throw std::invalid_argument("turning_angles: size mismatch");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    const Vec3 a = y[i] - y[i - 1];
    const Vec3 b = y[i + 1] - y[i];
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) continue;
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    out.emplace_back(t[i], std::acos(c) * kRadToDeg);
  }
  return out;
}

TrialMetrics compute_metrics(const TrajectoryLog& log, const Vec3& goal, double delta_g) {
  if (log.rows.empty()) throw std::invalid_argument("compute_metrics: empty log");
  TrialMetrics m;
  const auto& rows = log.rows;
  m.T = rows.back().t - rows.front().t;
  for (std::size_t i = 1; i < rows.size(); ++i) m.path_length += (rows[i].y - rows[i - 1].y).norm();
  m.d_goal = (rows.back().y - goal).norm();
  m.n_collisions = log.n_collisions;
  m.timed_out = log.timed_out;
  m.success = m.n_collisions == 0 && m.d_goal < delta_g;

  m.speed.reserve(rows.size());
  for (const auto& r : rows) m.speed.push_back(r.yd.norm());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double dt = rows[i].t - rows[i - 1].t;
    if (dt > 0.0) m.acceleration.push_back((rows[i].yd - rows[i - 1].yd).norm() / dt);
  }

  std::vector<double> t;
  std::vector<Vec3> y;
  for (const auto& r : rows) {
    t.push_back(r.t);
    y.push_back(r.y);
  }
  const auto zeta = turning_angles(t, y);
  for (std::size_t i = 1; i < zeta.size(); ++i) {
    const double dt = zeta[i].first - zeta[i - 1].first;
    if (dt > 0.0) m.zeta_dot.push_back((zeta[i].second - zeta[i - 1].second) / dt);
  }
  return m;
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(trial)));
}

TrialResult run_trial(const RunConfig& cfg, const Scenario& scenario, std::uint64_t seed) {
  cfg.validate();
  scenario.validate();
  const auto& mc = cfg.motion;

  TrialResult result;
  result.seed = seed;
  auto& log = result.log;
  auto& counters = result.counters;

  std::mt19937_64 rng(seed);
  World world = make_world(scenario);
  const Plan plan = make_plan(cfg, scenario);
  auto dmp_state = motion::initial_state(plan.dmp);
  motion::PidController<double> pid(mc.pid);

  const bool perceive = cfg.mode != Mode::baseline;
  std::optional<snn::ConvSnn<double>> net;
  if (cfg.mode == Mode::snn) net.emplace(cfg.network);
  const int out_h = cfg.network.layers.back().out_h(), out_w = cfg.network.layers.back().out_w();
  avoidance::Decoder<double> decoder(cfg.avoidance, cfg.camera.mount.rotation());
  LatestValue<Vec3> mailbox;
  std::optional<IntensityImage> prev_frame;

  Vec3 y = scenario.start, y_prev = scenario.start;
  Vec3 v_act = Vec3::Zero();
  bool in_contact = check_collision(y, mc.ee_radius, world.obstacles);

  const double motion_dt = 1.0 / cfg.motion_hz;
  long p_tick = 0, m_tick = 0;
  log.rows.push_back({0.0, y, v_act, Vec3::Zero(), Vec3::Zero()});

  auto perception_tick = [&](double t) {
    if (!perceive) return;
    Pose ee = Pose::Identity();
    ee.translation() = y;
    IntensityImage frame = render_frame(world, camera_pose_from_ee(ee, cfg.camera), cfg.camera);
    ++counters.frames_rendered;
    if (!prev_frame) {
      prev_frame = std::move(frame);
      return;
    }
    EventImage events = emulate(*prev_frame, frame, cfg.emulator, t);
    prev_frame = std::move(frame);
    ++counters.emulations;
    counters.events += events.count();

    PerceptionRow row;
    row.t = t;
    row.events = events.count();
    Vec3 phi;
    if (cfg.mode == Mode::snn) {
      const auto spikes = snn::poisson_encode(events, cfg.network.r_on, cfg.network.r_off, cfg.network.t_sim,
                                              cfg.network.lif.dt, rng);
      auto rec = net->run(spikes);
      ++counters.snn_runs;
      counters.synaptic_ops += rec.synaptic_ops;
      counters.hidden_spikes += rec.hidden_spikes;
      counters.output_spikes += rec.trains.total();
      phi = decoder.decode(rec);
      result.last_spikes = std::move(rec);
    } else {
      if (cfg.mode == Mode::random_events) {
        const double density = static_cast<double>(events.count()) / static_cast<double>(events.polarity.size());
        events = random_events(events.height(), events.width(), density, rng);
      }
      phi = decoder.decode_raw(events, out_h, out_w);
    }
    const auto& map = decoder.last_map();
    row.points = map.count();
    row.phi_tilde = decoder.image_vector(map);
    row.phi = phi;
    result.last_map = map;
    log.perception.push_back(row);
    mailbox.write(phi);
  };

  auto motion_tick = [&](double t) {
    const Vec3 phi_held = mailbox.read().value_or(Vec3::Zero());
    const Vec3 phi =
        motion::apply_safety<double>(y, y_prev, plan.reference, Vec3::Zero(), phi_held, mc.safety).second;
    if ((y - dmp_state.y).norm() < mc.delta_y)
      dmp_state = motion::dmp_step<double>(dmp_state, plan.dmp, phi, mc.dmp_dt, mc.workspace);
    const Vec3 v_pid = pid.command(y, dmp_state.y, motion_dt);
    const Vec3 v_cmd =
        motion::apply_safety<double>(y, y_prev, plan.reference, v_pid, Vec3::Zero(), mc.safety).first;

    y_prev = y;
    const double h = motion_dt / mc.plant_substeps;
    for (int k = 0; k < mc.plant_substeps; ++k) {
      if (mc.actuator_tau > 0.0) v_act += (v_cmd - v_act) * (1.0 - std::exp(-h / mc.actuator_tau));
      else v_act = v_cmd;
      y += v_act * h;
    }
    y = motion::clip_workspace<double>(y, mc.workspace);
    world = step_world(std::move(world), motion_dt);

    const bool contact = check_collision(y, mc.ee_radius, world.obstacles);
    if (contact && !in_contact) ++log.n_collisions;
    in_contact = contact;
    log.rows.push_back({t + motion_dt, y, v_act, v_cmd, phi});
  };

  while (true) {
    const double t_motion = static_cast<double>(m_tick) / cfg.motion_hz;
    const double t_percep = static_cast<double>(p_tick) / cfg.perception_hz;
    // Equal rationals divide to equal doubles, so ties are exact; perception goes first.
    const bool percep_first = t_percep <= t_motion;
    if (percep_first) {
      perception_tick(t_percep);
      ++p_tick;
      continue;
    }
    motion_tick(t_motion);
    ++m_tick;
    const double now = static_cast<double>(m_tick) / cfg.motion_hz;
    const double d_goal = (y - scenario.goal).norm();
    if (now >= scenario.min_duration && d_goal < mc.delta_g) break;
    if (now >= cfg.timeout) {
      log.timed_out = true;
      break;
    }
  }

  result.metrics = compute_metrics(log, scenario.goal, mc.delta_g);
  return result;
}

Aggregate aggregate(const std::vector<TrialRow>& trials) {
  Aggregate a;
  a.n = static_cast<int>(trials.size());
  if (trials.empty()) return a;
  std::vector<double> s, T, l, c, d, v, z;
  for (const auto& r : trials) {
    s.push_back(r.metrics.success ? 1.0 : 0.0);
    T.push_back(r.metrics.T);
    l.push_back(r.metrics.path_length);
    c.push_back(r.metrics.n_collisions);
    d.push_back(r.metrics.d_goal);
    v.push_back(r.metrics.mean_speed());
    z.push_back(r.metrics.median_abs_zeta_dot());
  }
  a.success_mean = mean(s);
  a.success_std = stddev(s);
  a.success_median = median(s);
  a.T_mean = mean(T);
  a.path_length_mean = mean(l);
  a.collisions_mean = mean(c);
  a.d_goal_mean = mean(d);
  a.speed_mean = mean(v);
  a.zeta_dot_median = median(z);
  return a;
}

BatchResult batch_run(const RunConfig& cfg, const Scenario& scenario, const std::string& out_dir,
                      const std::string& label) {
  cfg.validate();
  BatchResult batch;
  batch.scenario = scenario.id;
  batch.mode = to_string(cfg.mode);
  batch.label = label.empty() ? batch.mode : label;

  std::ofstream trials_csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    trials_csv.open(std::filesystem::path(out_dir) / "trials.csv");
    if (!trials_csv) throw std::runtime_error("cannot write " + out_dir + "/trials.csv");
    write_trials_header(trials_csv);
  }
  for (int i = 0; i < cfg.n_trials; ++i) {
    const std::uint64_t seed = trial_seed(cfg.seed, i);
    TrialResult r = run_trial(cfg, scenario, seed);
    TrialRow row{i, seed, std::move(r.metrics), r.counters};
    if (trials_csv.is_open()) {
      write_trial_row(trials_csv, batch, row);
      trials_csv.flush();
      if (!trials_csv) throw std::runtime_error("write failed after trial " + std::to_string(i));
    }
    batch.trials.push_back(std::move(row));
  }
  batch.aggregate = aggregate(batch.trials);
  if (!out_dir.empty()) {
    std::ofstream agg(std::filesystem::path(out_dir) / "aggregate.csv");
    if (!agg) throw std::runtime_error("cannot write " + out_dir + "/aggregate.csv");
    write_aggregate_header(agg);
    write_aggregate_row(agg, batch);
  }
  return batch;
}

double SweepReport::success_std() const {
  std::vector<double> s;
  for (const auto& b : batches) s.push_back(b.aggregate.success_mean);
  return stddev(s);
}

SweepReport sweep(const RunConfig& base, const Scenario& scenario, const SweepSpec& spec, const std::string& out_dir) {
  if (spec.values.size() < 2) throw std::invalid_argument("sweep: need at least two axis values");
  if (spec.axis == SweepAxis::parameter && spec.parameter.empty())
    throw std::invalid_argument("sweep: parameter axis needs a parameter path");
  SweepReport report;
  report.spec = spec;
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    RunConfig cfg = base;
    const auto& value = spec.values[i];
    switch (spec.axis) {
      case SweepAxis::method: set_parameter(cfg, "emulator.method", value); break;
      case SweepAxis::weight_seed: set_parameter(cfg, "network.weight_seed", value); break;
      case SweepAxis::parameter: set_parameter(cfg, spec.parameter, value); break;
    }
    const std::string sub = out_dir.empty() ? "" : (std::filesystem::path(out_dir) / ("v" + std::to_string(i))).string();
    report.batches.push_back(batch_run(cfg, scenario, sub, axis_label(spec, value)));
  }
  if (!out_dir.empty()) {
    std::ofstream cmp(std::filesystem::path(out_dir) / "comparison.csv");
    if (!cmp) throw std::runtime_error("cannot write " + out_dir + "/comparison.csv");
    write_comparison(cmp, report);
  }
  return report;
}

void write_trials_header(std::ostream& os) {
  os << "scenario,mode,label,trial,seed,T,path_length,n_collisions,d_goal,success,timed_out,mean_speed,"
        "median_abs_zeta_dot,frames,events,snn_runs,synaptic_ops\n";
}

void write_trial_row(std::ostream& os, const BatchResult& batch, const TrialRow& row) {
  const auto& m = row.metrics;
  const auto& c = row.counters;
  os << std::setprecision(12);
  os << csv_field(batch.scenario) << ',' << batch.mode << ',' << csv_field(batch.label) << ',' << row.trial << ','
     << row.seed << ',' << m.T << ',' << m.path_length << ',' << m.n_collisions << ',' << m.d_goal << ','
     << (m.success ? 1 : 0) << ',' << (m.timed_out ? 1 : 0) << ',' << m.mean_speed() << ','
     << m.median_abs_zeta_dot() << ',' << c.frames_rendered << ',' << c.events << ',' << c.snn_runs << ','
     << c.synaptic_ops << '\n';
}

void write_aggregate_header(std::ostream& os) {
  os << "scenario,mode,label,n,success_mean,success_std,success_median,T_mean,path_length_mean,collisions_mean,"
        "d_goal_mean,speed_mean,zeta_dot_median\n";
}

void write_aggregate_row(std::ostream& os, const BatchResult& batch) {
  const auto& a = batch.aggregate;
  os << std::setprecision(12);
  os << csv_field(batch.scenario) << ',' << batch.mode << ',' << csv_field(batch.label) << ',' << a.n << ','
     << a.success_mean << ',' << a.success_std << ',' << a.success_median << ',' << a.T_mean << ','
     << a.path_length_mean << ',' << a.collisions_mean << ',' << a.d_goal_mean << ',' << a.speed_mean << ','
     << a.zeta_dot_median << '\n';
}

void write_comparison(std::ostream& os, const SweepReport& report) {
  write_aggregate_header(os);
  for (const auto& b : report.batches) write_aggregate_row(os, b);
}

void write_trajectory(std::ostream& os, const TrajectoryLog& log) {
  os << "t,y_x,y_y,y_z,yd_x,yd_y,yd_z,v_cmd_x,v_cmd_y,v_cmd_z,phi_x,phi_y,phi_z\n";
  os << std::setprecision(12);
  for (const auto& r : log.rows) {
    os << r.t << ',';
    put_vec(os, r.y);
    os << ',';
    put_vec(os, r.yd);
    os << ',';
    put_vec(os, r.v_cmd);
    os << ',';
    put_vec(os, r.phi);
    os << '\n';
  }
}

void write_perception(std::ostream& os, const TrajectoryLog& log) {
  os << "t,events,points,phi_tilde_u,phi_tilde_v,phi_x,phi_y,phi_z\n";
  os << std::setprecision(12);
  for (const auto& r : log.perception) {
    os << r.t << ',' << r.events << ',' << r.points << ',' << r.phi_tilde.x() << ',' << r.phi_tilde.y() << ',';
    put_vec(os, r.phi);
    os << '\n';
  }
}

void write_spike_record(std::ostream& os, const snn::SpikeRecord& rec) {
  os << "neuron,fst,count\n";
  os << std::setprecision(12);
  for (int n = 0; n < rec.height * rec.width; ++n) {
    os << n << ',';
    if (const auto fst = rec.fst_ms(n)) os << *fst;
    os << ',' << rec.counts[static_cast<std::size_t>(n)] << '\n';
  }
}

void write_grid(std::ostream& os, const Grid<double>& grid) {
  os << std::setprecision(12);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      if (c) os << ',';
      os << grid(r, c);
    }
    os << '\n';
  }
}

const std::vector<std::string>& plot_metrics() {
  static const std::vector<std::string> names{"success", "T", "path_length", "n_collisions", "d_goal"};
  return names;
}

void emit_plot_data(std::ostream& os, const std::vector<BatchResult>& batches) {
  os << "scenario,mode,metric,value\n";
  os << std::setprecision(12);
  for (const auto& b : batches) {
    const std::string mode = b.label.empty() || b.label == b.mode ? b.mode : b.mode + ":" + b.label;
    for (const auto& r : b.trials) {
      const auto& m = r.metrics;
      const double values[] = {m.success ? 1.0 : 0.0, m.T, m.path_length, static_cast<double>(m.n_collisions),
                               m.d_goal};
      for (std::size_t i = 0; i < plot_metrics().size(); ++i)
        os << csv_field(b.scenario) << ',' << csv_field(mode) << ',' << plot_metrics()[i] << ',' << values[i]
           << '\n';
    }
  }
}

std::vector<BatchResult> read_trials_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) return {};
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* key : {"scenario", "mode", "label", "trial", "seed", "T", "path_length", "n_collisions", "d_goal",
                          "success", "timed_out", "mean_speed", "median_abs_zeta_dot"})
    if (!col.count(key)) throw std::runtime_error(std::string("trials csv: missing column ") + key);

  std::vector<BatchResult> out;
  std::map<std::string, std::size_t> index;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw std::runtime_error("trials csv: ragged row");
    auto get = [&](const char* k) { return f[col.at(k)]; };
    const std::string key = get("scenario") + '\x1f' + get("mode") + '\x1f' + get("label");
    if (!index.count(key)) {
      index[key] = out.size();
      BatchResult b;
      b.scenario = get("scenario");
      b.mode = get("mode");
      b.label = get("label");
      out.push_back(b);
    }
    TrialRow r;
    r.trial = std::stoi(get("trial"));
    r.seed = std::stoull(get("seed"));
    r.metrics.T = std::stod(get("T"));
    r.metrics.path_length = std::stod(get("path_length"));
    r.metrics.n_collisions = std::stoi(get("n_collisions"));
    r.metrics.d_goal = std::stod(get("d_goal"));
    r.metrics.success = get("success") == "1";
    r.metrics.timed_out = get("timed_out") == "1";
    // Summary statistics stand in for the series that are not persisted.
    r.metrics.speed = {std::stod(get("mean_speed"))};
    r.metrics.zeta_dot = {std::stod(get("median_abs_zeta_dot"))};
    if (col.count("frames")) r.counters.frames_rendered = std::stol(get("frames"));
    if (col.count("events")) r.counters.events = std::stol(get("events"));
    if (col.count("snn_runs")) r.counters.snn_runs = std::stol(get("snn_runs"));
    if (col.count("synaptic_ops")) r.counters.synaptic_ops = std::stoull(get("synaptic_ops"));
    out[index[key]].trials.push_back(std::move(r));
  }
  for (auto& b : out) b.aggregate = aggregate(b.trials);
  return out;
}

}  // namespace neuroavoid
