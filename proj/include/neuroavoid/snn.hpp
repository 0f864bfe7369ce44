#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "neuroavoid/image.hpp"

namespace neuroavoid::snn {

struct LifParams {
  double v_thresh = -52.0;  // mV
  double v_reset = -62.0;   // mV
  double v_rest = -62.0;    // mV
  double tau_v = 100.0;     // ms
  double t_refrac = 5.0;    // ms
  double dt = 1.0;          // ms

  void validate() const {
    if (!(v_reset <= v_thresh) || !(v_rest <= v_thresh))
      throw std::invalid_argument("lif: reset and rest potentials must not exceed the threshold");
    if (!(tau_v > 0.0) || !(dt > 0.0)) throw std::invalid_argument("lif: tau_v and dt must be > 0");
    if (t_refrac < 0.0) throw std::invalid_argument("lif: refractory period must be >= 0");
  }
  /// Whole steps of refractoriness after a spike.
  int refractory_steps() const { return static_cast<int>(t_refrac / dt + 0.5); }
};

struct ConvLayerSpec {
  int kernel_h = 8, kernel_w = 8;
  int stride_h = 4, stride_w = 4;
  int in_h = 120, in_w = 160;

  int out_h() const { return (in_h - kernel_h) / stride_h + 1; }
  int out_w() const { return (in_w - kernel_w) / stride_w + 1; }

  void validate() const {
    if (kernel_h <= 0 || kernel_w <= 0 || stride_h <= 0 || stride_w <= 0)
      throw std::invalid_argument("conv layer: kernel and stride must be > 0");
    if (in_h < kernel_h || in_w < kernel_w) throw std::invalid_argument("conv layer: input smaller than kernel");
  }
};

/// h x w x T binary spike tensor stored sparsely: flat indices (row * w + col)
/// of the active cells at each step, ascending.
struct SpikeTensor {
  int height = 0, width = 0;
  std::vector<std::vector<int>> active;

  SpikeTensor() = default;
  SpikeTensor(int h, int w, int steps) : height(h), width(w), active(static_cast<std::size_t>(steps)) {}

  int steps() const { return static_cast<int>(active.size()); }
  bool at(int row, int col, int step) const;
  long total() const;
  /// Dense binary grid of one step.
  Grid<std::uint8_t> frame(int step) const;
};

/// Layer-2 output of one run. First-spike times are step indices relative to
/// the start of the run; `never` marks silent neurons.
struct SpikeRecord {
  static constexpr int never = -1;

  int height = 0, width = 0;
  double dt = 1.0;
  double t_sim = 0.0;
  SpikeTensor trains;
  std::vector<int> counts;
  std::vector<int> first_spike_step;
  /// Synaptic accumulate operations performed during the run.
  std::uint64_t synaptic_ops = 0;
  /// Spikes emitted by the hidden layers.
  long hidden_spikes = 0;

  /// First-spike time in ms, or nullopt for silent neurons.
  std::optional<double> fst_ms(int neuron) const {
    const int s = first_spike_step[static_cast<std::size_t>(neuron)];
    if (s == never) return std::nullopt;
    return s * dt;
  }
};

/// Independent per-step Bernoulli draws with p = rate * dt: ON pixels at r_on,
/// OFF pixels at r_off, empty pixels never spike (and consume no draws).
SpikeTensor poisson_encode(const EventImage& img, double r_on_hz, double r_off_hz, double t_sim_ms, double dt_ms,
                           std::mt19937_64& rng);

/// Kernel entries i.i.d. uniform on [0, w_c).
template <typename Scalar>
Grid<Scalar> init_weights(const ConvLayerSpec& spec, double w_c, std::uint64_t seed) {
  if (!(w_c > 0.0)) throw std::invalid_argument("init_weights: w_c must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, w_c);
  Grid<Scalar> k(spec.kernel_h, spec.kernel_w);
  for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = static_cast<Scalar>(dist(rng));
  return k;
}

/// Valid cross-correlation: act(i, j) = sum_mn S(i*sh + m, j*sw + n) K(m, n).
template <typename Scalar>
Grid<Scalar> convolve_spikes(const Grid<Scalar>& kernel, const Grid<std::uint8_t>& spikes, const ConvLayerSpec& spec) {
  if (spikes.rows() != spec.in_h || spikes.cols() != spec.in_w)
    throw std::invalid_argument("convolve_spikes: input does not match layer spec");
  if (kernel.rows() != spec.kernel_h || kernel.cols() != spec.kernel_w)
    throw std::invalid_argument("convolve_spikes: kernel does not match layer spec");
  Grid<Scalar> act = Grid<Scalar>::Zero(spec.out_h(), spec.out_w());
  for (int i = 0; i < spec.out_h(); ++i)
    for (int j = 0; j < spec.out_w(); ++j)
      act(i, j) = (spikes.block(i * spec.stride_h, j * spec.stride_w, spec.kernel_h, spec.kernel_w)
                       .template cast<Scalar>() *
                   kernel)
                      .sum();
  return act;
}

/// Event-driven form of convolve_spikes: each active input adds its kernel
/// entry to every covering output unit. Returns the number of accumulates.
template <typename Scalar>
std::uint64_t scatter_spikes(const Grid<Scalar>& kernel, const std::vector<int>& active, const ConvLayerSpec& spec,
                             Grid<Scalar>& act) {
  std::uint64_t ops = 0;
  const int oh = spec.out_h(), ow = spec.out_w();
  for (const int flat : active) {
    const int r = flat / spec.in_w, c = flat % spec.in_w;
    // Output rows i with i*sh <= r < i*sh + kh.
    const int i_lo = std::max(0, (r - spec.kernel_h + spec.stride_h) / spec.stride_h);
    const int i_hi = std::min(oh - 1, r / spec.stride_h);
    const int j_lo = std::max(0, (c - spec.kernel_w + spec.stride_w) / spec.stride_w);
    const int j_hi = std::min(ow - 1, c / spec.stride_w);
    for (int i = i_lo; i <= i_hi; ++i) {
      const int m = r - i * spec.stride_h;
      if (m < 0 || m >= spec.kernel_h) continue;
      for (int j = j_lo; j <= j_hi; ++j) {
        const int n = c - j * spec.stride_w;
        if (n < 0 || n >= spec.kernel_w) continue;
        act(i, j) += kernel(m, n);
        ++ops;
      }
    }
  }
  return ops;
}

template <typename Scalar>
struct LifLayerState {
  Grid<Scalar> v;
  Grid<int> refractory;

  LifLayerState() = default;
  LifLayerState(int h, int w, const LifParams& p) {
    v.setConstant(h, w, static_cast<Scalar>(p.v_rest));
    refractory.setZero(h, w);
  }
};

/// One explicit-Euler step. Refractory neurons hold their potential, ignore
/// input and cannot spike. Returns flat indices of the neurons that spiked.
template <typename Scalar>
std::vector<int> lif_step(LifLayerState<Scalar>& state, const Grid<Scalar>& pre_activation, const LifParams& p) {
  const auto leak = static_cast<Scalar>(p.dt / p.tau_v);
  const auto rest = static_cast<Scalar>(p.v_rest);
  const auto thresh = static_cast<Scalar>(p.v_thresh);
  const auto reset = static_cast<Scalar>(p.v_reset);
  const int refrac = p.refractory_steps();
  std::vector<int> spikes;
  const Eigen::Index n = state.v.size();
  Scalar* v = state.v.data();
  int* rc = state.refractory.data();
  const Scalar* in = pre_activation.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rc[i] > 0) {
      --rc[i];
      continue;
    }
    v[i] += leak * (rest - v[i]) + in[i];
    if (v[i] > thresh) {
      v[i] = reset;
      rc[i] = refrac;
      spikes.push_back(static_cast<int>(i));
    }
  }
  return spikes;
}

struct NetworkConfig {
  std::vector<ConvLayerSpec> layers{{8, 8, 4, 4, 120, 160}, {4, 4, 2, 2, 29, 39}};
  LifParams lif;
  double w_c = 7.0;
  std::uint64_t weight_seed = 1;
  double t_sim = 20.0;  // ms
  double r_on = 200.0;  // Hz
  double r_off = 100.0; // Hz
  /// Membrane state carries over between consecutive runs.
  bool persistent_state = true;

  void validate() const;
};

/// Feed-forward stack of convolutional LIF layers with fixed random kernels.
template <typename Scalar>
class ConvSnn {
 public:
  explicit ConvSnn(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    for (std::size_t l = 0; l < cfg_.layers.size(); ++l) {
      kernels_.push_back(init_weights<Scalar>(cfg_.layers[l], cfg_.w_c, cfg_.weight_seed + 7919 * l));
    }
    reset();
  }

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<Grid<Scalar>>& kernels() const { return kernels_; }
  const std::vector<LifLayerState<Scalar>>& states() const { return states_; }
  int steps_per_run() const { return static_cast<int>(cfg_.t_sim / cfg_.lif.dt + 0.5); }
  int output_h() const { return cfg_.layers.back().out_h(); }
  int output_w() const { return cfg_.layers.back().out_w(); }

  void reset() {
    states_.clear();
    for (const auto& spec : cfg_.layers) states_.emplace_back(spec.out_h(), spec.out_w(), cfg_.lif);
  }

  SpikeRecord run(const SpikeTensor& input) {
    const auto& first = cfg_.layers.front();
    if (input.height != first.in_h || input.width != first.in_w)
      throw std::invalid_argument("ConvSnn::run: input does not match the first layer");
    if (!cfg_.persistent_state) reset();

    SpikeRecord rec;
    rec.height = output_h();
    rec.width = output_w();
    rec.dt = cfg_.lif.dt;
    rec.t_sim = input.steps() * cfg_.lif.dt;
    rec.trains = SpikeTensor(rec.height, rec.width, input.steps());
    rec.counts.assign(static_cast<std::size_t>(rec.height * rec.width), 0);
    rec.first_spike_step.assign(rec.counts.size(), SpikeRecord::never);

    std::vector<Grid<Scalar>> act;
    for (const auto& spec : cfg_.layers) act.push_back(Grid<Scalar>::Zero(spec.out_h(), spec.out_w()));

    for (int t = 0; t < input.steps(); ++t) {
      const std::vector<int>* incoming = &input.active[static_cast<std::size_t>(t)];
      std::vector<int> spikes;
      for (std::size_t l = 0; l < cfg_.layers.size(); ++l) {
        act[l].setZero();
        rec.synaptic_ops += scatter_spikes(kernels_[l], *incoming, cfg_.layers[l], act[l]);
        spikes = lif_step(states_[l], act[l], cfg_.lif);
        if (l + 1 < cfg_.layers.size()) {
          rec.hidden_spikes += static_cast<long>(spikes.size());
          hidden_buffer_ = std::move(spikes);
          incoming = &hidden_buffer_;
        }
      }
      for (const int n : spikes) {
        ++rec.counts[static_cast<std::size_t>(n)];
        if (rec.first_spike_step[static_cast<std::size_t>(n)] == SpikeRecord::never)
          rec.first_spike_step[static_cast<std::size_t>(n)] = t;
      }
      rec.trains.active[static_cast<std::size_t>(t)] = std::move(spikes);
    }
    return rec;
  }

 private:
  NetworkConfig cfg_;
  std::vector<Grid<Scalar>> kernels_;
  std::vector<LifLayerState<Scalar>> states_;
  std::vector<int> hidden_buffer_;
};

}  // namespace neuroavoid::snn
