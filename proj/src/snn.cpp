#include "neuroavoid/snn.hpp"

#include <algorithm>

namespace neuroavoid::snn {

bool SpikeTensor::at(int row, int col, int step) const {
  const auto& a = active[static_cast<std::size_t>(step)];
  return std::binary_search(a.begin(), a.end(), row * width + col);
}

long SpikeTensor::total() const {
  long n = 0;
  for (const auto& a : active) n += static_cast<long>(a.size());
  return n;
}

Grid<std::uint8_t> SpikeTensor::frame(int step) const {
  Grid<std::uint8_t> g = Grid<std::uint8_t>::Zero(height, width);
  for (const int flat : active[static_cast<std::size_t>(step)]) g.data()[flat] = 1;
  return g;
}

SpikeTensor poisson_encode(const EventImage& img, double r_on_hz, double r_off_hz, double t_sim_ms, double dt_ms,
                           std::mt19937_64& rng) {
  if (!(dt_ms > 0.0) || t_sim_ms < 0.0) throw std::invalid_argument("poisson_encode: invalid time grid");
  if (r_on_hz < 0.0 || r_off_hz < 0.0) throw std::invalid_argument("poisson_encode: rates must be >= 0");
  const double p_on = r_on_hz * dt_ms * 1e-3;
  const double p_off = r_off_hz * dt_ms * 1e-3;
  if (p_on > 1.0 || p_off > 1.0) throw std::invalid_argument("poisson_encode: rate * dt exceeds 1");

  const int steps = static_cast<int>(t_sim_ms / dt_ms + 0.5);
  SpikeTensor out(img.height(), img.width(), steps);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Pixel-major draw order keeps the stream independent of step count layout.
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int pol = img.polarity(y, x);
      if (pol == 0) continue;
      const double p = pol > 0 ? p_on : p_off;
      for (int t = 0; t < steps; ++t)
        if (unit(rng) < p) out.active[static_cast<std::size_t>(t)].push_back(y * img.width() + x);
    }
  }
  return out;
}

void NetworkConfig::validate() const {
  if (layers.empty()) throw std::invalid_argument("network: at least one layer required");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && (layers[l].in_h != layers[l - 1].out_h() || layers[l].in_w != layers[l - 1].out_w()))
      throw std::invalid_argument("network: layer input does not match previous layer output");
  }
  lif.validate();
  if (!(w_c > 0.0)) throw std::invalid_argument("network: w_c must be > 0");
  if (!(t_sim > 0.0)) throw std::invalid_argument("network: t_sim must be > 0");
  if (r_on * lif.dt * 1e-3 > 1.0 || r_off * lif.dt * 1e-3 > 1.0)
    throw std::invalid_argument("network: rate * dt exceeds 1");
}

}  // namespace neuroavoid::snn
