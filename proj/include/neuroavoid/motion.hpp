#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace neuroavoid::motion {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/*
 * Discrete DMP in time-scaled form
 *
 *   tau^2 ydd = alpha_y (beta_y (g - y) - tau yd) + f(s) + phi
 *   tau sd   = -alpha_s s
 *   f(s)     = (g - y0) * s * sum_i w_i psi_i(s) / sum_i psi_i(s)
 *
 * which reduces to the textbook equations at tau = 1 and keeps
 * beta_y = alpha_y / 4 critically damped for any tau.
 */
template <typename Scalar>
struct DmpParams {
  Scalar alpha_y = 25;
  Scalar beta_y = Scalar(25) / 4;
  Scalar tau = 1;
  Scalar alpha_s = 4;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> centers;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> widths;
  /// 3 x n_basis forcing weights.
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> weights;
  Vector3<Scalar> y0 = Vector3<Scalar>::Zero();
  Vector3<Scalar> goal = Vector3<Scalar>::Zero();

  int n_basis() const { return static_cast<int>(centers.size()); }

  void validate() const {
    if (!(alpha_y > 0) || !(beta_y > 0) || !(tau > 0) || !(alpha_s > 0))
      throw std::invalid_argument("dmp: gains, tau and alpha_s must be > 0");
    if (widths.size() != centers.size() || weights.cols() != centers.size())
      throw std::invalid_argument("dmp: basis arrays disagree in size");
  }
};

/// Gaussian kernels placed at equal time spacing (exponentially warped in s),
/// neighbours crossing at half maximum. Weights start at zero.
template <typename Scalar>
DmpParams<Scalar> make_dmp(const Vector3<Scalar>& y0, const Vector3<Scalar>& goal, int n_basis = 50,
                           Scalar tau = 1, Scalar alpha_y = 25, Scalar alpha_s = 4) {
  if (n_basis < 1) throw std::invalid_argument("dmp: n_basis must be >= 1");
  DmpParams<Scalar> p;
  p.alpha_y = alpha_y;
  p.beta_y = alpha_y / 4;
  p.tau = tau;
  p.alpha_s = alpha_s;
  p.y0 = y0;
  p.goal = goal;
  p.centers.resize(n_basis);
  p.widths.resize(n_basis);
  for (int i = 0; i < n_basis; ++i) {
    const Scalar frac = n_basis > 1 ? static_cast<Scalar>(i) / (n_basis - 1) : Scalar(0);
    p.centers(i) = std::exp(-alpha_s * frac);
  }
  for (int i = 0; i < n_basis; ++i) {
    Scalar gap;
    if (n_basis == 1) gap = Scalar(1);
    else if (i + 1 < n_basis) gap = std::abs(p.centers(i) - p.centers(i + 1));
    else gap = std::abs(p.centers(i) - p.centers(i - 1));
    const Scalar half = gap / 2;
    p.widths(i) = std::log(Scalar(2)) / (half * half);
  }
  p.weights = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>::Zero(3, n_basis);
  return p;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> basis(const DmpParams<Scalar>& p, Scalar s) {
  return (-(p.widths.array() * (s - p.centers.array()).square())).exp().matrix();
}

template <typename Scalar>
Vector3<Scalar> forcing(const DmpParams<Scalar>& p, Scalar s) {
  if (p.n_basis() == 0) return Vector3<Scalar>::Zero();
  const auto psi = basis(p, s);
  const Scalar sum = psi.sum();
  if (!(sum > std::numeric_limits<Scalar>::min())) return Vector3<Scalar>::Zero();
  const Vector3<Scalar> blend = p.weights * psi / sum;
  return ((p.goal - p.y0).array() * blend.array()).matrix() * s;
}

template <typename Scalar>
struct DmpState {
  Vector3<Scalar> y = Vector3<Scalar>::Zero();
  Vector3<Scalar> yd = Vector3<Scalar>::Zero();
  Scalar s = 1;
};

template <typename Scalar>
DmpState<Scalar> initial_state(const DmpParams<Scalar>& p) {
  DmpState<Scalar> st;
  st.y = p.y0;
  return st;
}

/// Per-axis bounds; infinite by default.
template <typename Scalar>
struct WorkspaceLimits {
  Vector3<Scalar> lower = Vector3<Scalar>::Constant(-std::numeric_limits<Scalar>::infinity());
  Vector3<Scalar> upper = Vector3<Scalar>::Constant(std::numeric_limits<Scalar>::infinity());

  void validate() const {
    if (!(lower.array() <= upper.array()).all()) throw std::invalid_argument("workspace: lower limit above upper");
  }
};

template <typename Scalar>
Vector3<Scalar> clip_workspace(const Vector3<Scalar>& y, const WorkspaceLimits<Scalar>& limits) {
  return y.cwiseMax(limits.lower).cwiseMin(limits.upper);
}

/// Explicit Euler for y and yd, exact exponential for s, then workspace clip.
template <typename Scalar>
DmpState<Scalar> dmp_step(const DmpState<Scalar>& state, const DmpParams<Scalar>& p, const Vector3<Scalar>& phi,
                          Scalar dt, const WorkspaceLimits<Scalar>& limits = {}) {
  if (!(dt > 0)) throw std::invalid_argument("dmp_step: dt must be > 0");
  const Vector3<Scalar> ydd =
      (p.alpha_y * (p.beta_y * (p.goal - state.y) - p.tau * state.yd) + forcing(p, state.s) + phi) /
      (p.tau * p.tau);
  DmpState<Scalar> next;
  next.yd = state.yd + ydd * dt;
  next.y = clip_workspace<Scalar>(state.y + next.yd * dt, limits);
  next.s = state.s * std::exp(-p.alpha_s * dt / p.tau);
  return next;
}

/// Unperturbed trajectory of `steps` positions after the initial one.
template <typename Scalar>
std::vector<Vector3<Scalar>> rollout(const DmpParams<Scalar>& p, Scalar dt, int steps,
                                     const WorkspaceLimits<Scalar>& limits = {}) {
  std::vector<Vector3<Scalar>> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  auto st = initial_state(p);
  out.push_back(st.y);
  for (int k = 0; k < steps; ++k) {
    st = dmp_step<Scalar>(st, p, Vector3<Scalar>::Zero(), dt, limits);
    out.push_back(st.y);
  }
  return out;
}

/// Derivative of uniformly or non-uniformly sampled data: central differences
/// in the interior, one-sided at the ends.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, Eigen::Dynamic> differentiate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& t,
                                                       const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>& y) {
  const Eigen::Index n = t.size();
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> d(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index a = k == 0 ? 0 : k - 1;
    const Eigen::Index b = k == n - 1 ? n - 1 : k + 1;
    d.col(k) = (y.col(b) - y.col(a)) / (t(b) - t(a));
  }
  return d;
}

/// Learns forcing weights from a demonstration by locally weighted regression.
/// tau is set to the demonstration duration, so fitted weights do not depend
/// on the demonstration's time scale.
template <typename Scalar>
DmpParams<Scalar> fit_dmp(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& t,
                          const Eigen::Matrix<Scalar, 3, Eigen::Dynamic>& y, int n_basis = 50, Scalar alpha_y = 25,
                          Scalar alpha_s = 4) {
  const Eigen::Index n = t.size();
  if (n < 3 || y.cols() != n) throw std::invalid_argument("fit_dmp: need at least 3 samples");
  for (Eigen::Index k = 1; k < n; ++k)
    if (!(t(k) > t(k - 1))) throw std::invalid_argument("fit_dmp: time stamps must increase strictly");
  const Vector3<Scalar> y0 = y.col(0), goal = y.col(n - 1);
  if ((goal - y0).norm() < Scalar(1e-9)) throw std::invalid_argument("fit_dmp: start and goal coincide");

  auto p = make_dmp<Scalar>(y0, goal, n_basis, t(n - 1) - t(0), alpha_y, alpha_s);
  const auto yd = differentiate<Scalar>(t, y);
  const auto ydd = differentiate<Scalar>(t, yd);

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> s(n);
  for (Eigen::Index k = 0; k < n; ++k) s(k) = std::exp(-p.alpha_s * (t(k) - t(0)) / p.tau);

  for (int d = 0; d < 3; ++d) {
    const Scalar scale = goal(d) - y0(d);
    if (std::abs(scale) < Scalar(1e-9)) continue;  // no forcing along a motionless axis
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> f_target(n);
    for (Eigen::Index k = 0; k < n; ++k)
      f_target(k) = p.tau * p.tau * ydd(d, k) - p.alpha_y * (p.beta_y * (goal(d) - y(d, k)) - p.tau * yd(d, k));
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> xi = s * scale;
    for (int i = 0; i < n_basis; ++i) {
      Scalar num = 0, den = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar psi = std::exp(-p.widths(i) * (s(k) - p.centers(i)) * (s(k) - p.centers(i)));
        num += psi * xi(k) * f_target(k);
        den += psi * xi(k) * xi(k);
      }
      p.weights(d, i) = den > Scalar(1e-12) ? num / den : Scalar(0);
    }
  }
  return p;
}

/// Minimum-jerk straight line sampled at n points over `duration` seconds.
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, 3, Eigen::Dynamic>> minimum_jerk(
    const Vector3<Scalar>& from, const Vector3<Scalar>& to, Scalar duration, int n) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> t(n);
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> y(3, n);
  for (int k = 0; k < n; ++k) {
    const Scalar u = static_cast<Scalar>(k) / (n - 1);
    const Scalar blend = u * u * u * (10 - 15 * u + 6 * u * u);
    t(k) = u * duration;
    y.col(k) = from + (to - from) * blend;
  }
  return {t, y};
}

struct PidGains {
  double kp = 2.0;
  double ki = 5.0;
  double kd = 5.0;

  void validate() const {
    if (kp < 0 || ki < 0 || kd < 0) throw std::invalid_argument("pid: gains must be >= 0");
  }
};

/// v = Kp e + Ki sum(e dt) + Kd (e - e_prev) / dt on the position error.
/// The derivative term is zero on the first call after construction or reset.
template <typename Scalar>
class PidController {
 public:
  explicit PidController(const PidGains& gains = {}) : gains_(gains) { gains_.validate(); }

  Vector3<Scalar> command(const Vector3<Scalar>& current, const Vector3<Scalar>& target, Scalar dt) {
    if (!(dt > 0)) throw std::invalid_argument("pid: dt must be > 0");
    const Vector3<Scalar> e = target - current;
    integral_ += e * dt;
    const Vector3<Scalar> deriv = has_prev_ ? Vector3<Scalar>((e - prev_error_) / dt) : Vector3<Scalar>::Zero();
    prev_error_ = e;
    has_prev_ = true;
    return static_cast<Scalar>(gains_.kp) * e + static_cast<Scalar>(gains_.ki) * integral_ +
           static_cast<Scalar>(gains_.kd) * deriv;
  }

  void reset() {
    integral_.setZero();
    prev_error_.setZero();
    has_prev_ = false;
  }

  const Vector3<Scalar>& integral() const { return integral_; }

 private:
  PidGains gains_;
  Vector3<Scalar> integral_ = Vector3<Scalar>::Zero();
  Vector3<Scalar> prev_error_ = Vector3<Scalar>::Zero();
  bool has_prev_ = false;
};

struct SafetyParams {
  double delta_safety = 0.15;
  double gamma_v = 0.5;
  double gamma_a = 0.5;

  void validate() const {
    if (!(delta_safety > 0)) throw std::invalid_argument("safety: delta_safety must be > 0");
    if (!(gamma_v > 0) || gamma_v > 1 || !(gamma_a > 0) || gamma_a > 1)
      throw std::invalid_argument("safety: reduction factors must be in (0, 1]");
  }
};

template <typename Scalar>
std::size_t nearest_index(const std::vector<Vector3<Scalar>>& path, const Vector3<Scalar>& y) {
  if (path.empty()) throw std::invalid_argument("safety: reference path is empty");
  std::size_t best = 0;
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Scalar d = (path[i] - y).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Damps velocity and the next avoidance acceleration while the EE is outside
/// the safety band around the reference path and still moving away from it.
/// Pass a single-point reference to hold a position instead of a path.
template <typename Scalar>
std::pair<Vector3<Scalar>, Vector3<Scalar>> apply_safety(const Vector3<Scalar>& y, const Vector3<Scalar>& y_prev,
                                                         const std::vector<Vector3<Scalar>>& reference,
                                                         const Vector3<Scalar>& v, const Vector3<Scalar>& phi_next,
                                                         const SafetyParams& params) {
  const Vector3<Scalar>& ref = reference[nearest_index(reference, y)];
  const Scalar d = (y - ref).norm();
  const bool outside = d > static_cast<Scalar>(params.delta_safety);
  const bool diverging = d > (y_prev - ref).norm();
  if (outside && diverging)
    return {v * static_cast<Scalar>(params.gamma_v), phi_next * static_cast<Scalar>(params.gamma_a)};
  return {v, phi_next};
}

}  // namespace neuroavoid::motion
