#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "neuroavoid/image.hpp"
#include "neuroavoid/snn.hpp"

namespace neuroavoid::avoidance {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Obstacle points on the output grid plus activation magnitudes
/// a = (T_sim - fst) / T_sim for the active cells (zero elsewhere).
template <typename Scalar>
struct ActivationMap {
  Grid<bool> points;
  Grid<Scalar> magnitude;

  int rows() const { return static_cast<int>(points.rows()); }
  int cols() const { return static_cast<int>(points.cols()); }
  long count() const { return points.count(); }
};

struct Params {
  double eta = 300.0;
  /// Radius of influence in grid cells.
  double p0 = 24.0;
  /// Floor on the obstacle distance.
  double epsilon = 0.5;
  double c_delta = 1.0;
  /// Fraction of T_sim before which a first spike marks an obstacle point.
  double t_act = 0.5;
  int n_phi = 3;
  /// Upper bound on |phi| in m/s^2.
  double phi_max = 25.0;

  void validate() const {
    if (!(eta > 0.0) || !(p0 > 0.0) || !(epsilon > 0.0))
      throw std::invalid_argument("avoidance: eta, p0 and epsilon must be > 0");
    if (!(t_act > 0.0) || t_act > 1.0) throw std::invalid_argument("avoidance: t_act must be in (0, 1]");
    if (n_phi < 1) throw std::invalid_argument("avoidance: n_phi must be >= 1");
    if (!(phi_max >= 0.0)) throw std::invalid_argument("avoidance: phi_max must be >= 0");
  }
};

template <typename Scalar>
ActivationMap<Scalar> activation_map(const snn::SpikeRecord& rec, Scalar t_act, Scalar t_sim) {
  if (!(t_act > 0) || t_act > 1) throw std::invalid_argument("activation_map: t_act must be in (0, 1]");
  ActivationMap<Scalar> map;
  map.points = Grid<bool>::Constant(rec.height, rec.width, false);
  map.magnitude = Grid<Scalar>::Zero(rec.height, rec.width);
  const Scalar cutoff = t_act * t_sim;
  for (int n = 0; n < rec.height * rec.width; ++n) {
    const auto fst = rec.fst_ms(n);
    if (fst && static_cast<Scalar>(*fst) < cutoff) {
      map.points.data()[n] = true;
      map.magnitude.data()[n] = (t_sim - static_cast<Scalar>(*fst)) / t_sim;
    }
  }
  return map;
}

/// U(x) = sum_i (eta / 2)(1 / p_i(x) - 1 / p0) for p_i(x) <= p0, with
/// p_i(x) = max(|x - o_i|, epsilon) in grid units.
template <typename Scalar>
Grid<Scalar> potential_field(const Grid<bool>& points, Scalar eta, Scalar p0, Scalar epsilon) {
  if (!(eta > 0) || !(p0 > 0)) throw std::invalid_argument("potential_field: eta and p0 must be > 0");
  const int rows = static_cast<int>(points.rows()), cols = static_cast<int>(points.cols());
  Grid<Scalar> u = Grid<Scalar>::Zero(rows, cols);
  const Scalar inv_p0 = Scalar(1) / p0;
  for (int oy = 0; oy < rows; ++oy) {
    for (int ox = 0; ox < cols; ++ox) {
      if (!points(oy, ox)) continue;
      for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
          const Scalar d = std::max(std::hypot(static_cast<Scalar>(y - oy), static_cast<Scalar>(x - ox)), epsilon);
          if (d <= p0) u(y, x) += eta / 2 * (Scalar(1) / d - inv_p0);
        }
      }
    }
  }
  return u;
}

/// Mean of -grad U over all cells, scaled by c_delta. Central differences in
/// the interior, one-sided at the borders. Component 0 points along columns
/// (image right), component 1 along rows (image down).
template <typename Scalar>
Vector2<Scalar> mean_negative_gradient(const Grid<Scalar>& field, Scalar c_delta) {
  const Eigen::Index rows = field.rows(), cols = field.cols();
  if (rows == 0 || cols == 0) return Vector2<Scalar>::Zero();
  auto diff = [](auto get, Eigen::Index n, Eigen::Index i) -> Scalar {
    if (n < 2) return 0;
    if (i == 0) return get(1) - get(0);
    if (i == n - 1) return get(n - 1) - get(n - 2);
    return (get(i + 1) - get(i - 1)) / 2;
  };
  Scalar gx = 0, gy = 0;
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      gx += diff([&](Eigen::Index k) { return field(y, k); }, cols, x);
      gy += diff([&](Eigen::Index k) { return field(k, x); }, rows, y);
    }
  }
  const auto n = static_cast<Scalar>(rows * cols);
  return Vector2<Scalar>(-gx / n, -gy / n) * c_delta;
}

/// Bilinear resize (pixel-centre aligned) of |img| followed by a 0.5 cut.
template <typename Scalar>
ActivationMap<Scalar> raw_event_activation(const EventImage& img, int rows, int cols) {
  ActivationMap<Scalar> map;
  map.points = Grid<bool>::Constant(rows, cols, false);
  map.magnitude = Grid<Scalar>::Zero(rows, cols);
  const int h = img.height(), w = img.width();
  if (h == 0 || w == 0) return map;
  const Scalar sy = static_cast<Scalar>(h) / rows, sx = static_cast<Scalar>(w) / cols;
  auto mag = [&](int y, int x) -> Scalar { return img.polarity(y, x) != 0 ? Scalar(1) : Scalar(0); };
  for (int r = 0; r < rows; ++r) {
    const Scalar fy = std::clamp((r + Scalar(0.5)) * sy - Scalar(0.5), Scalar(0), static_cast<Scalar>(h - 1));
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, h - 1);
    const Scalar ay = fy - y0;
    for (int c = 0; c < cols; ++c) {
      const Scalar fx = std::clamp((c + Scalar(0.5)) * sx - Scalar(0.5), Scalar(0), static_cast<Scalar>(w - 1));
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, w - 1);
      const Scalar ax = fx - x0;
      const Scalar v = (1 - ay) * ((1 - ax) * mag(y0, x0) + ax * mag(y0, x1)) +
                       ay * ((1 - ax) * mag(y1, x0) + ax * mag(y1, x1));
      map.magnitude(r, c) = v;
      map.points(r, c) = v > Scalar(0.5);
    }
  }
  return map;
}

/*
 * Image-to-end-effector mapping. An image-space vector (du, dv) becomes the
 * camera-frame vector (0, -du, -dv): image right is camera -y, image down is
 * camera -z. The mount rotation carries it into the EE frame, where the
 * forward (x) component is dropped, so phi stays in the EE y-z plane.
 */
template <typename Scalar>
Vector3<Scalar> image_to_ee(const Vector2<Scalar>& phi_tilde, const Eigen::Matrix<Scalar, 3, 3>& mount_rotation) {
  Vector3<Scalar> v = mount_rotation * Vector3<Scalar>(0, -phi_tilde.x(), -phi_tilde.y());
  v.x() = 0;
  return v;
}

template <typename Scalar>
Vector3<Scalar> clip_magnitude(const Vector3<Scalar>& v, Scalar limit) {
  const Scalar n = v.norm();
  if (n > limit && n > 0) return v * (limit / n);
  return v;
}

/// Owns the phi history; one instance per pipeline.
template <typename Scalar>
class Decoder {
 public:
  Decoder(const Params& params, const Eigen::Matrix<Scalar, 3, 3>& mount_rotation)
      : params_(params), mount_(mount_rotation) {
    params_.validate();
  }

  const Params& params() const { return params_; }

  /// Rotate into the EE frame, average with the previous n_phi - 1 outputs, clip.
  Vector3<Scalar> to_ee_space(const Vector2<Scalar>& phi_tilde) {
    history_.push_back(image_to_ee<Scalar>(phi_tilde, mount_));
    while (static_cast<int>(history_.size()) > params_.n_phi) history_.pop_front();
    Vector3<Scalar> mean = Vector3<Scalar>::Zero();
    for (const auto& h : history_) mean += h;
    mean /= static_cast<Scalar>(history_.size());
    return clip_magnitude<Scalar>(mean, static_cast<Scalar>(params_.phi_max));
  }

  Vector2<Scalar> image_vector(const ActivationMap<Scalar>& map) const {
    const Grid<Scalar> u = potential_field<Scalar>(map.points, static_cast<Scalar>(params_.eta),
                                                   static_cast<Scalar>(params_.p0),
                                                   static_cast<Scalar>(params_.epsilon));
    return mean_negative_gradient<Scalar>(u, static_cast<Scalar>(params_.c_delta));
  }

  Vector3<Scalar> decode(const snn::SpikeRecord& rec) {
    last_map_ = activation_map<Scalar>(rec, static_cast<Scalar>(params_.t_act), static_cast<Scalar>(rec.t_sim));
    return to_ee_space(image_vector(last_map_));
  }

  Vector3<Scalar> decode_raw(const EventImage& img, int rows, int cols) {
    last_map_ = raw_event_activation<Scalar>(img, rows, cols);
    return to_ee_space(image_vector(last_map_));
  }

  const ActivationMap<Scalar>& last_map() const { return last_map_; }
  void clear_history() { history_.clear(); }

 private:
  Params params_;
  Eigen::Matrix<Scalar, 3, 3> mount_;
  std::deque<Vector3<Scalar>> history_;
  ActivationMap<Scalar> last_map_;
};

}  // namespace neuroavoid::avoidance
