#include "neuroavoid/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace neuroavoid {

namespace {

using Plane = Grid<double>;

Plane to_plane(const Grid<std::uint8_t>& c) { return c.cast<double>(); }

// Polarity from per-channel differences: +1 / -1 only if every channel
// crosses the threshold in the same direction.
Grid<std::int8_t> multi_channel(const std::array<Plane, 3>& diff, double threshold) {
  const auto on = (diff[0] > threshold) && (diff[1] > threshold) && (diff[2] > threshold);
  const auto off = (diff[0] < -threshold) && (diff[1] < -threshold) && (diff[2] < -threshold);
  return on.cast<std::int8_t>() - off.cast<std::int8_t>();
}

template <typename F>
std::array<Plane, 3> channel_diff(const IntensityImage& prev, const IntensityImage& curr, F&& transform) {
  std::array<Plane, 3> out;
  for (int c = 0; c < 3; ++c) out[c] = transform(to_plane(curr.channels[c])) - transform(to_plane(prev.channels[c]));
  return out;
}

Plane log_luma(const IntensityImage& img) {
  const Plane luma = 0.299 * to_plane(img.channels[0]) + 0.587 * to_plane(img.channels[1]) +
                     0.114 * to_plane(img.channels[2]);
  return (luma + 1.0).log();
}

}  // namespace

std::string to_string(EmulationMethod m) {
  switch (m) {
    case EmulationMethod::M1: return "M1";
    case EmulationMethod::M2: return "M2";
    case EmulationMethod::M3: return "M3";
    case EmulationMethod::M4: return "M4";
    case EmulationMethod::M5: return "M5";
  }
  return "M1";
}

EmulationMethod parse_method(const std::string& name) {
  if (name == "M1") return EmulationMethod::M1;
  if (name == "M2") return EmulationMethod::M2;
  if (name == "M3") return EmulationMethod::M3;
  if (name == "M4") return EmulationMethod::M4;
  if (name == "M5") return EmulationMethod::M5;
  throw std::invalid_argument("unknown emulation method: " + name);
}

double EmulatorConfig::default_threshold(EmulationMethod m) {
  switch (m) {
    case EmulationMethod::M1: return 28.0;
    case EmulationMethod::M2: return 15.0;
    case EmulationMethod::M3: return 0.22;
    case EmulationMethod::M4: return 0.22;
    case EmulationMethod::M5: return 18.0;
  }
  return 28.0;
}

void EmulatorConfig::validate() const {
  if (!(threshold > 0.0)) throw std::invalid_argument("emulator: threshold must be > 0");
  if (erosion && (erosion_size < 3 || erosion_size % 2 == 0))
    throw std::invalid_argument("emulator: erosion size must be odd and >= 3");
  if (blur_size < 1 || blur_size % 2 == 0) throw std::invalid_argument("emulator: blur size must be odd");
}

IntensityImage box_blur(const IntensityImage& img, int size) {
  const int h = img.height(), w = img.width(), r = size / 2;
  const double norm = 1.0 / (size * size);
  IntensityImage out(h, w);
  for (int c = 0; c < 3; ++c) {
    const auto& src = img.channels[c];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int acc = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) acc += src(yy, std::clamp(x + dx, 0, w - 1));
        }
        out.channels[c](y, x) = static_cast<std::uint8_t>(std::lround(acc * norm));
      }
    }
  }
  return out;
}

EventImage emulate(const IntensityImage& prev, const IntensityImage& curr, const EmulatorConfig& cfg,
                   double timestamp) {
  cfg.validate();
  if (prev.height() != curr.height() || prev.width() != curr.width())
    throw std::invalid_argument("emulate: frame dimensions differ");

  EventImage out;
  out.timestamp = timestamp;
  const auto identity = [](const Plane& p) { return p; };
  switch (cfg.method) {
    case EmulationMethod::M1:
      out.polarity = multi_channel(channel_diff(prev, curr, identity), cfg.threshold);
      break;
    case EmulationMethod::M2:
      out.polarity = multi_channel(
          channel_diff(box_blur(prev, cfg.blur_size), box_blur(curr, cfg.blur_size), identity), cfg.threshold);
      break;
    case EmulationMethod::M3:
      out.polarity = multi_channel(
          channel_diff(prev, curr, [](const Plane& p) -> Plane { return (p + 1.0).log(); }), cfg.threshold);
      break;
    case EmulationMethod::M4: {
      const Plane d = log_luma(curr) - log_luma(prev);
      out.polarity = (d > cfg.threshold).cast<std::int8_t>() - (d < -cfg.threshold).cast<std::int8_t>();
      break;
    }
    case EmulationMethod::M5:
      out.polarity = multi_channel(channel_diff(prev, curr,
                                                [](const Plane& p) -> Plane {
                                                  return 255.0 * (p / 255.0).pow(1.0 / 2.2);
                                                }),
                                   cfg.threshold);
      break;
  }
  if (cfg.erosion) return binary_erosion(out, cfg.erosion_size);
  return out;
}

EventImage binary_erosion(const EventImage& img, int size) {
  if (size < 3 || size % 2 == 0) throw std::invalid_argument("binary_erosion: size must be odd and >= 3");
  const int h = img.height(), w = img.width(), r = size / 2;
  // Summed-area table of the event indicator, padded by one row/column.
  Grid<int> sat = Grid<int>::Zero(h + 1, w + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      sat(y + 1, x + 1) = (img.polarity(y, x) != 0) + sat(y, x + 1) + sat(y + 1, x) - sat(y, x);

  EventImage out(h, w, img.timestamp);
  const int full = size * size;
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      if (img.polarity(y, x) == 0) continue;
      const int sum = sat(y + r + 1, x + r + 1) - sat(y - r, x + r + 1) - sat(y + r + 1, x - r) + sat(y - r, x - r);
      if (sum == full) out.polarity(y, x) = img.polarity(y, x);
    }
  }
  return out;
}

std::vector<EventRecord> serialize_events(const EventImage& img) {
  const auto t_us = static_cast<std::int64_t>(std::llround(img.timestamp * 1e6));
  std::vector<EventRecord> out;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.polarity(y, x) != 0) out.push_back({t_us, x, y, img.polarity(y, x)});
  return out;
}

EventImage deserialize_events(const std::vector<EventRecord>& records, int height, int width, double timestamp) {
  EventImage img(height, width, timestamp);
  for (const auto& r : records) {
    if (r.x < 0 || r.x >= width || r.y < 0 || r.y >= height)
      throw std::invalid_argument("deserialize_events: record out of bounds");
    if (r.p != 1 && r.p != -1) throw std::invalid_argument("deserialize_events: polarity must be +-1");
    img.polarity(r.y, r.x) = static_cast<std::int8_t>(r.p);
  }
  return img;
}

void write_event_stream(std::ostream& os, const std::vector<EventRecord>& records) {
  for (const auto& r : records) os << r.t_us << ' ' << r.x << ' ' << r.y << ' ' << r.p << '\n';
}

std::vector<EventRecord> read_event_stream(std::istream& is) {
  std::vector<EventRecord> out;
  EventRecord r;
  while (is >> r.t_us >> r.x >> r.y >> r.p) out.push_back(r);
  if (!is.eof()) throw std::runtime_error("read_event_stream: malformed record");
  return out;
}

void write_event_pgm(std::ostream& os, const EventImage& img) {
  os << "P2\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int p = img.polarity(y, x);
      os << (p > 0 ? 255 : (p < 0 ? 0 : 128)) << (x + 1 < img.width() ? ' ' : '\n');
    }
  }
}

void write_ppm(std::ostream& os, const IntensityImage& img) {
  os << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) os.put(static_cast<char>(img.channels[c](y, x)));
}

IntensityImage read_ppm(std::istream& is) {
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("read_ppm: unsupported header");
  is.get();
  IntensityImage img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const int v = is.get();
        if (v == std::char_traits<char>::eof()) throw std::runtime_error("read_ppm: truncated data");
        img.channels[c](y, x) = static_cast<std::uint8_t>(v);
      }
  return img;
}

}  // namespace neuroavoid
