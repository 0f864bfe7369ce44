#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "neuroavoid/image.hpp"

namespace neuroavoid {

/// Frame-difference strategies.
///  M1: per-channel absolute intensity difference, all three channels must cross
///      the threshold with a common sign.
///  M2: M1 on frames pre-blurred with a normalised 5x5 box kernel.
///  M3: M1-style multi-channel test on log(L + 1).
///  M4: log(0.299 R + 0.587 G + 0.114 B + 1), single channel.
///  M5: M1-style test on gamma-encoded codes 255 * (L / 255)^(1 / 2.2).
enum class EmulationMethod { M1, M2, M3, M4, M5 };

std::string to_string(EmulationMethod m);
EmulationMethod parse_method(const std::string& name);

struct EmulatorConfig {
  EmulationMethod method = EmulationMethod::M1;
  /// Emission threshold; intensity units for M1/M2/M5, natural-log units for M3/M4.
  double threshold = 28.0;
  bool erosion = false;
  int erosion_size = 3;
  int blur_size = 5;

  void validate() const;
  /// Threshold used when none is configured explicitly for the method.
  static double default_threshold(EmulationMethod m);
};

/// Event image from two consecutive frames; throws on size mismatch.
EventImage emulate(const IntensityImage& prev, const IntensityImage& curr, const EmulatorConfig& cfg,
                   double timestamp = 0.0);

/// Normalised box blur with clamp-to-edge borders, applied per channel.
IntensityImage box_blur(const IntensityImage& img, int size);

/// Keeps an event only when its whole size x size neighbourhood holds events
/// (any polarity; zero padding outside the image).
EventImage binary_erosion(const EventImage& img, int size);

struct EventRecord {
  std::int64_t t_us = 0;
  int x = 0;
  int y = 0;
  int p = 0;

  auto operator<=>(const EventRecord&) const = default;
};

/// One record per nonzero pixel, ordered by (t, y, x).
std::vector<EventRecord> serialize_events(const EventImage& img);

/// Rebuilds an image from records sharing one timestamp.
EventImage deserialize_events(const std::vector<EventRecord>& records, int height, int width,
                              double timestamp);

/// Line-oriented `t_us x y p` stream.
void write_event_stream(std::ostream& os, const std::vector<EventRecord>& records);
std::vector<EventRecord> read_event_stream(std::istream& is);

/// Plain PGM (P2) with -1 -> 0, 0 -> 128, +1 -> 255.
void write_event_pgm(std::ostream& os, const EventImage& img);

/// Binary PPM (P6) frame I/O for the `emulate` command.
void write_ppm(std::ostream& os, const IntensityImage& img);
IntensityImage read_ppm(std::istream& is);

}  // namespace neuroavoid
