#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neuroavoid/avoidance.hpp"
#include "neuroavoid/config.hpp"
#include "neuroavoid/snn.hpp"

namespace neuroavoid {

/// One motion tick: time, EE position and velocity, commanded velocity, phi.
struct LogRow {
  double t = 0.0;
  Vec3 y = Vec3::Zero();
  Vec3 yd = Vec3::Zero();
  Vec3 v_cmd = Vec3::Zero();
  Vec3 phi = Vec3::Zero();
};

/// One perception tick.
struct PerceptionRow {
  double t = 0.0;
  long events = 0;
  long points = 0;
  Eigen::Vector2d phi_tilde = Eigen::Vector2d::Zero();
  Vec3 phi = Vec3::Zero();
};

struct WorkCounters {
  long frames_rendered = 0;
  long emulations = 0;
  long events = 0;
  long snn_runs = 0;
  std::uint64_t synaptic_ops = 0;
  long hidden_spikes = 0;
  long output_spikes = 0;
};

struct TrajectoryLog {
  std::vector<LogRow> rows;
  std::vector<PerceptionRow> perception;
  int n_collisions = 0;
  bool timed_out = false;
};

struct TrialMetrics {
  double T = 0.0;
  double path_length = 0.0;
  int n_collisions = 0;
  double d_goal = 0.0;
  bool success = false;
  bool timed_out = false;
  std::vector<double> speed;
  std::vector<double> acceleration;
  /// Heading-change rate in deg/s between consecutive defined turning angles.
  std::vector<double> zeta_dot;

  double mean_speed() const;
  /// Median of |zeta_dot|; 0 when undefined.
  double median_abs_zeta_dot() const;
};

struct TrialResult {
  TrialMetrics metrics;
  TrajectoryLog log;
  WorkCounters counters;
  std::uint64_t seed = 0;
  /// Output of the last SNN run and the last decoded map, for dumps.
  std::optional<snn::SpikeRecord> last_spikes;
  std::optional<avoidance::ActivationMap<double>> last_map;
};

/// Turning angle (deg) at interior points; zero-length segments are skipped.
std::vector<std::pair<double, double>> turning_angles(const std::vector<double>& t, const std::vector<Vec3>& y);

/// S is true iff there were no collisions and the final goal distance is below delta_g.
TrialMetrics compute_metrics(const TrajectoryLog& log, const Vec3& goal, double delta_g);

/// Per-trial seed derived from a master seed.
std::uint64_t trial_seed(std::uint64_t master, int trial);

/// Runs one closed-loop trial; throws std::invalid_argument on an inconsistent config.
TrialResult run_trial(const RunConfig& cfg, const Scenario& scenario, std::uint64_t seed);

struct Aggregate {
  int n = 0;
  double success_mean = 0.0;
  double success_std = 0.0;
  double success_median = 0.0;
  double T_mean = 0.0;
  double path_length_mean = 0.0;
  double collisions_mean = 0.0;
  double d_goal_mean = 0.0;
  double speed_mean = 0.0;
  double zeta_dot_median = 0.0;
};

struct TrialRow {
  int trial = 0;
  std::uint64_t seed = 0;
  TrialMetrics metrics;
  WorkCounters counters;
};

struct BatchResult {
  std::string scenario;
  std::string mode;
  std::string label;
  std::vector<TrialRow> trials;
  Aggregate aggregate;
};

Aggregate aggregate(const std::vector<TrialRow>& trials);

/// Runs cfg.n_trials seeded trials. With a non-empty out_dir, trials.csv is
/// appended and flushed after every trial and aggregate.csv written at the end.
/// An empty label defaults to the mode name.
BatchResult batch_run(const RunConfig& cfg, const Scenario& scenario, const std::string& out_dir = "",
                      const std::string& label = "");

enum class SweepAxis { method, weight_seed, parameter };

struct SweepSpec {
  SweepAxis axis = SweepAxis::method;
  /// Dotted config path for SweepAxis::parameter.
  std::string parameter;
  std::vector<nlohmann::json> values;
};

struct SweepReport {
  SweepSpec spec;
  std::vector<BatchResult> batches;

  /// Standard deviation of the per-value success rates.
  double success_std() const;
};

SweepReport sweep(const RunConfig& base, const Scenario& scenario, const SweepSpec& spec,
                  const std::string& out_dir = "");

void write_trials_header(std::ostream& os);
void write_trial_row(std::ostream& os, const BatchResult& batch, const TrialRow& row);
void write_aggregate_header(std::ostream& os);
void write_aggregate_row(std::ostream& os, const BatchResult& batch);
void write_comparison(std::ostream& os, const SweepReport& report);
void write_trajectory(std::ostream& os, const TrajectoryLog& log);
void write_perception(std::ostream& os, const TrajectoryLog& log);
void write_spike_record(std::ostream& os, const snn::SpikeRecord& rec);
void write_grid(std::ostream& os, const Grid<double>& grid);

/// Metric names emitted per trial by emit_plot_data.
const std::vector<std::string>& plot_metrics();

/// Long-format rows: scenario,mode,metric,value.
void emit_plot_data(std::ostream& os, const std::vector<BatchResult>& batches);

/// Trial rows read back from a trials.csv.
std::vector<BatchResult> read_trials_csv(std::istream& is);

}  // namespace neuroavoid
