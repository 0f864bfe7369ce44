// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "neuroavoid/harness.hpp"

using namespace neuroavoid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Scenario task1() { return load_scenario(std::string(NEUROAVOID_SCENARIO_DIR) + "/task1_static.json"); }

RunConfig with_mode(Mode m) {
  RunConfig cfg;
  cfg.mode = m;
  cfg.n_trials = 30;
  return cfg;
}

// Shared SNN batch, used by several criteria.
const BatchResult& snn_batch() {
  static const BatchResult b = batch_run(with_mode(Mode::snn), task1());
  return b;
}

Outcome baseline_failure() {
  const auto t0 = std::chrono::steady_clock::now();
  const BatchResult b = batch_run(with_mode(Mode::baseline), task1());
  const double secs = seconds_since(t0);
  int min_coll = 1 << 30;
  for (const auto& r : b.trials) min_coll = std::min(min_coll, r.metrics.n_collisions);
  const bool ok = b.trials.size() == 30 && b.aggregate.success_mean == 0.0 && min_coll >= 1 && secs < 120.0;
  return {ok, fmt("success %.1f%%, min collisions %d, %.1f s", 100 * b.aggregate.success_mean, min_coll, secs)};
}

Outcome snn_success() {
  const auto t0 = std::chrono::steady_clock::now();
  const BatchResult& b = snn_batch();
  const double secs = seconds_since(t0);
  const bool ok = b.trials.size() == 30 && b.aggregate.success_mean >= 0.8 && secs < 600.0;
  return {ok, fmt("success %.1f%% over %zu trials, %.1f s", 100 * b.aggregate.success_mean, b.trials.size(), secs)};
}

Outcome raw_ablation() {
  const double snn = snn_batch().aggregate.success_mean;
  const double raw = batch_run(with_mode(Mode::raw_events), task1()).aggregate.success_mean;
  const double rnd = batch_run(with_mode(Mode::random_events), task1()).aggregate.success_mean;
  const bool ok = raw < snn && rnd < snn && rnd <= 0.2;
  return {ok, fmt("snn %.1f%%, raw %.1f%%, random %.1f%%", 100 * snn, 100 * raw, 100 * rnd)};
}

Outcome method_band() {
  SweepSpec spec;
  spec.axis = SweepAxis::method;
  spec.values = {"M1", "M2", "M3", "M4", "M5"};
  const SweepReport rep = sweep(with_mode(Mode::snn), task1(), spec);
  double lo = 1, hi = 0;
  std::string rates;
  for (const auto& b : rep.batches) {
    lo = std::min(lo, b.aggregate.success_mean);
    hi = std::max(hi, b.aggregate.success_mean);
    rates += fmt(" %s %.0f%%", b.label.substr(7).c_str(), 100 * b.aggregate.success_mean);
  }
  return {hi - lo <= 0.2 + 1e-12, fmt("band %.1f pp:", 100 * (hi - lo)) + rates};
}

Outcome seed_stability() {
  SweepSpec spec;
  spec.axis = SweepAxis::weight_seed;
  spec.values = {1, 2, 3, 4, 5};
  const SweepReport rep = sweep(with_mode(Mode::snn), task1(), spec);
  std::string rates;
  for (const auto& b : rep.batches) rates += fmt(" %.0f%%", 100 * b.aggregate.success_mean);
  const double sd = rep.success_std();
  return {sd <= 0.1 + 1e-12, fmt("std %.1f pp over 5 seeds:", 100 * sd) + rates};
}

Outcome architecture() {
  snn::ConvSnn<double> net{RunConfig{}.network};
  const auto& st = net.states();
  const bool ok = st.size() == 2 && st[0].v.rows() == 29 && st[0].v.cols() == 39 && net.output_h() == 13 &&
                  net.output_w() == 18;
  return {ok, fmt("layer 1 %ldx%ld, layer 2 %dx%d", long(st[0].v.rows()), long(st[0].v.cols()), net.output_h(),
                  net.output_w())};
}

Outcome dmp() {
  using V3 = motion::Vector3<double>;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const V3 a(u(rng), u(rng), u(rng)), g(u(rng), u(rng), u(rng));
    const double tau = 0.5 + std::abs(u(rng));
    const auto p = motion::make_dmp<double>(a, g, 50, tau);
    auto st = motion::initial_state(p);
    const double dt = 0.001;
    for (int i = 0; i < static_cast<int>(10 * tau / dt); ++i) st = motion::dmp_step<double>(st, p, V3::Zero(), dt);
    worst = std::max(worst, (st.y - g).norm());
  }

  const auto [t, y] = motion::minimum_jerk<double>(V3(0, 0, 0.4), V3(0.6, 0.05, 0.35), 1.0, 501);
  const auto p = motion::fit_dmp<double>(t, y);
  const auto roll = motion::rollout<double>(p, t(1) - t(0), static_cast<int>(t.size()) - 1);
  double sq = 0, len = 0;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    sq += (roll[k] - y.col(k)).squaredNorm();
    if (k > 0) len += (y.col(k) - y.col(k - 1)).norm();
  }
  const double rmse = std::sqrt(sq / t.size());
  return {worst < 1e-3 && rmse < 0.01 * len,
          fmt("worst |y-g| %.2e m, fit rmse %.3f%% of path", worst, 100 * rmse / len)};
}

Outcome lif() {
  const snn::LifParams p;
  snn::LifLayerState<double> s(1, 1, p);
  const double v0 = p.v_thresh - 1.0;
  s.v(0, 0) = v0;
  const Grid<double> zero = Grid<double>::Zero(1, 1);
  double worst = 0;
  const int steps = static_cast<int>(5 * p.tau_v / p.dt);
  for (int t = 1; t <= steps; ++t) {
    snn::lif_step(s, zero, p);
    const double expect = p.v_rest + (v0 - p.v_rest) * std::exp(-t * p.dt / p.tau_v);
    worst = std::max(worst, std::abs(s.v(0, 0) - expect) / (v0 - p.v_rest));
  }

  snn::LifLayerState<double> d(1, 1, p);
  const Grid<double> drive = Grid<double>::Constant(1, 1, 1000.0);
  std::vector<int> spikes;
  for (int t = 0; t < 100; ++t)
    if (!snn::lif_step(d, drive, p).empty()) spikes.push_back(t);
  const int expect_gap = static_cast<int>(std::lround(p.t_refrac / p.dt));
  bool exact = spikes.size() > 2;
  for (std::size_t i = 1; i < spikes.size(); ++i) exact = exact && spikes[i] - spikes[i - 1] - 1 == expect_gap;
  return {worst < 0.02 && exact,
          fmt("decay error %.3f%% of v0-v_rest, %zu spikes with %d silent steps between", 100 * worst, spikes.size(),
              expect_gap)};
}

Outcome poisson() {
  const int h = 100, w = 120;
  EventImage img(h, w);
  img.polarity.setConstant(1);
  std::mt19937_64 rng(99);
  const snn::SpikeTensor t = snn::poisson_encode(img, 200.0, 100.0, 20.0, 1.0, rng);
  const double n = h * w, pr = 0.2, steps = 20;
  const double mean = t.total() / n;
  const double sigma = std::sqrt(steps * pr * (1 - pr) / n);
  return {std::abs(mean - steps * pr) < 3 * sigma,
          fmt("mean %.4f spikes over %.0f pixels, expected 4 +- %.4f (3 sigma)", mean, n, 3 * sigma)};
}

Outcome pf_decoding() {
  const avoidance::Params prm;
  auto phi = [&](const Grid<bool>& pts) {
    return avoidance::mean_negative_gradient<double>(
        avoidance::potential_field<double>(pts, prm.eta, prm.p0, prm.epsilon), prm.c_delta);
  };
  const int rows = 13, cols = 18;
  const Eigen::Vector2d centre((cols - 1) / 2.0, (rows - 1) / 2.0);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> ry(0, rows - 1), rx(0, cols - 1), rs(0, 2);
  int tested = 0, failures = 0;
  while (tested < 1000) {
    Grid<bool> pts = Grid<bool>::Constant(rows, cols, false);
    const int cy = ry(rng), cx = rx(rng), half = rs(rng);
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    int n = 0;
    for (int y = std::max(0, cy - half); y <= std::min(rows - 1, cy + half); ++y)
      for (int x = std::max(0, cx - half); x <= std::min(cols - 1, cx + half); ++x) {
        pts(y, x) = true;
        centroid += Eigen::Vector2d(x, y);
        ++n;
      }
    centroid /= n;
    if ((centroid - centre).norm() < 1e-9) continue;
    ++tested;
    if (!(phi(pts).dot(centre - centroid) > 0.0)) ++failures;
  }

  std::bernoulli_distribution b(0.15);
  double worst = 0;
  for (int k = 0; k < 200; ++k) {
    Grid<bool> pts = Grid<bool>::Constant(rows, cols, false);
    for (int y = 0; y < rows; ++y)
      for (int x = 0; x < cols / 2; ++x)
        if (b(rng)) pts(y, x) = pts(y, cols - 1 - x) = true;
    worst = std::max(worst, std::abs(phi(pts).x()));
  }
  return {failures == 0 && worst < 1e-9,
          fmt("%d/%d clusters pushed the wrong way, symmetric lateral max %.1e", failures, tested, worst)};
}

Outcome energy() {
  const snn::NetworkConfig cfg = RunConfig{}.network;
  auto ops_at = [&](double density) {
    snn::ConvSnn<double> net{cfg};
    std::mt19937_64 rng(5);
    std::bernoulli_distribution b(density);
    EventImage img(120, 160);
    for (Eigen::Index i = 0; i < img.polarity.size(); ++i) img.polarity.data()[i] = b(rng) ? 1 : 0;
    std::mt19937_64 enc(6);
    return net.run(snn::poisson_encode(img, cfg.r_on, cfg.r_off, cfg.t_sim, cfg.lif.dt, enc)).synaptic_ops;
  };
  const std::uint64_t silent = ops_at(0.0);
  std::vector<std::uint64_t> ladder;
  for (double d : {0.01, 0.03, 0.1, 0.3, 0.6}) ladder.push_back(ops_at(d));
  bool increasing = true;
  for (std::size_t i = 1; i < ladder.size(); ++i) increasing = increasing && ladder[i] > ladder[i - 1];
  std::string seq;
  for (auto v : ladder) seq += " " + std::to_string(v);
  return {silent == 0 && increasing, fmt("silent %llu ops, ladder:", (unsigned long long)silent) + seq};
}

Outcome speed() {
  const double v = snn_batch().aggregate.speed_mean;
  return {v <= 0.25, fmt("mean EE speed %.3f m/s", v)};
}

Outcome heading_rate() {
  const double z = snn_batch().aggregate.zeta_dot_median;
  return {std::abs(z) <= 2.0, fmt("median |heading rate| %.3f deg/s", z)};
}

Outcome determinism() {
  const RunConfig cfg = with_mode(Mode::snn);
  const Scenario s = task1();
  auto csv = [&] {
    BatchResult b;
    b.scenario = s.id;
    b.mode = b.label = to_string(cfg.mode);
    const std::uint64_t seed = trial_seed(cfg.seed, 4);
    TrialResult r = run_trial(cfg, s, seed);
    TrialRow row{4, seed, r.metrics, r.counters};
    std::ostringstream os;
    write_trials_header(os);
    write_trial_row(os, b, row);
    write_trajectory(os, r.log);
    return os.str();
  };
  const std::string a = csv(), b = csv();
  return {a == b, fmt("%zu bytes, %s", a.size(), a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"baseline failure reproduction", baseline_failure},
      {"avoidance success", snn_success},
      {"raw-event ablation", raw_ablation},
      {"emulation-method robustness", method_band},
      {"weight-seed stability", seed_stability},
      {"architecture arithmetic", architecture},
      {"DMP attractor and fit", dmp},
      {"LIF correctness", lif},
      {"Poisson encoder", poisson},
      {"PF decoding", pf_decoding},
      {"energy proportionality", energy},
      {"safety envelope", speed},
      {"predictability proxy", heading_rate},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
