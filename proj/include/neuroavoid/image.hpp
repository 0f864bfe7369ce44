#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace neuroavoid {

template <typename T>
using Grid = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Three-channel 8-bit frame, one row-major plane per channel (R, G, B).
struct IntensityImage {
  std::array<Grid<std::uint8_t>, 3> channels;

  IntensityImage() = default;
  IntensityImage(int height, int width, std::uint8_t fill = 0) {
    for (auto& c : channels) c.setConstant(height, width, fill);
  }

  int height() const { return static_cast<int>(channels[0].rows()); }
  int width() const { return static_cast<int>(channels[0].cols()); }

  bool operator==(const IntensityImage& other) const {
    for (int c = 0; c < 3; ++c) {
      if (channels[c].rows() != other.channels[c].rows() ||
          channels[c].cols() != other.channels[c].cols() ||
          !(channels[c] == other.channels[c]).all())
        return false;
    }
    return true;
  }
};

/// Per-pixel polarity grid with values in {-1, 0, +1}.
struct EventImage {
  Grid<std::int8_t> polarity;
  double timestamp = 0.0;

  EventImage() = default;
  EventImage(int height, int width, double t = 0.0) : timestamp(t) {
    polarity.setZero(height, width);
  }

  int height() const { return static_cast<int>(polarity.rows()); }
  int width() const { return static_cast<int>(polarity.cols()); }
  long count() const { return (polarity != 0).count(); }

  bool operator==(const EventImage& other) const {
    return timestamp == other.timestamp && polarity.rows() == other.polarity.rows() &&
           polarity.cols() == other.polarity.cols() && (polarity == other.polarity).all();
  }
};

}  // namespace neuroavoid
