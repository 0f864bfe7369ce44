#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "neuroavoid/avoidance.hpp"

using namespace neuroavoid;
using namespace neuroavoid::avoidance;

namespace {

snn::SpikeRecord record_with(int h, int w, const std::vector<int>& fst_steps) {
  snn::SpikeRecord rec;
  rec.height = h;
  rec.width = w;
  rec.dt = 1.0;
  rec.t_sim = 20.0;
  rec.first_spike_step = fst_steps;
  rec.counts.assign(fst_steps.size(), 0);
  return rec;
}

Grid<bool> empty_points(int h = 13, int w = 18) { return Grid<bool>::Constant(h, w, false); }

Eigen::Vector2d phi_tilde(const Grid<bool>& pts, const Params& p = Params{}) {
  return mean_negative_gradient<double>(potential_field<double>(pts, p.eta, p.p0, p.epsilon), p.c_delta);
}

// Direct central/one-sided differences, written out per cell.
Eigen::Vector2d gradient_reference(const Grid<double>& u) {
  const int h = static_cast<int>(u.rows()), w = static_cast<int>(u.cols());
  double gx = 0, gy = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x == 0) gx += u(y, 1) - u(y, 0);
      else if (x == w - 1) gx += u(y, w - 1) - u(y, w - 2);
      else gx += 0.5 * (u(y, x + 1) - u(y, x - 1));
      if (y == 0) gy += u(1, x) - u(0, x);
      else if (y == h - 1) gy += u(h - 1, x) - u(h - 2, x);
      else gy += 0.5 * (u(y + 1, x) - u(y - 1, x));
    }
  return -Eigen::Vector2d(gx, gy) / (h * w);
}

}  // namespace

TEST_CASE("silent record gives an empty map") {
  const auto map = activation_map<double>(record_with(13, 18, std::vector<int>(13 * 18, snn::SpikeRecord::never)),
                                          0.5, 20.0);
  CHECK(map.count() == 0);
  CHECK((map.magnitude == 0.0).all());
}

TEST_CASE("activation threshold arithmetic") {
  std::vector<int> fst(4, snn::SpikeRecord::never);
  fst[0] = 3;
  fst[1] = 10;
  fst[2] = 9;
  const auto map = activation_map<double>(record_with(2, 2, fst), 0.5, 20.0);
  CHECK(map.points(0, 0));
  CHECK_FALSE(map.points(0, 1));
  CHECK(map.points(1, 0));
  CHECK_FALSE(map.points(1, 1));
  CHECK(map.magnitude(0, 0) == doctest::Approx(17.0 / 20.0));
  CHECK_THROWS(activation_map<double>(record_with(2, 2, fst), 0.0, 20.0));
}

TEST_CASE("activation map equals a direct filter") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> step(-1, 19);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> fst(13 * 18);
    for (auto& f : fst) f = step(rng);
    const double t_act = 0.1 + 0.9 * (trial / 49.0);
    const auto map = activation_map<double>(record_with(13, 18, fst), t_act, 20.0);
    for (int n = 0; n < 13 * 18; ++n) {
      const bool active = fst[n] >= 0 && fst[n] < t_act * 20.0;
      CHECK(map.points.data()[n] == active);
      if (active) {
        CHECK(map.magnitude.data()[n] > 0.0);
        CHECK(map.magnitude.data()[n] <= 1.0);
      }
    }
  }
}

TEST_CASE("potential field scalar values") {
  CHECK((potential_field<double>(empty_points(), 1.0, 6.0, 0.5) == 0.0).all());

  Grid<bool> pts = empty_points(20, 20);
  pts(10, 4) = true;
  const double eta = 2.0, p0 = 6.0;
  const auto u = potential_field<double>(pts, eta, p0, 0.5);
  CHECK(u(10, 10) == doctest::Approx(0.0));
  CHECK(u(10, 7) == doctest::Approx(eta / (2 * p0)));
  CHECK(u(10, 11) == 0.0);
  // floor at epsilon on the point itself
  CHECK(u(10, 4) == doctest::Approx(eta / 2 * (1 / 0.5 - 1 / p0)));
  CHECK((u >= 0.0).all());
}

TEST_CASE("potential field superposition and scale") {
  Grid<bool> a = empty_points(), b = empty_points();
  a(3, 4) = true;
  b(9, 12) = true;
  Grid<bool> both = a || b;
  const auto ua = potential_field<double>(a, 1.0, 6.0, 0.5);
  const auto ub = potential_field<double>(b, 1.0, 6.0, 0.5);
  CHECK(((potential_field<double>(both, 1.0, 6.0, 0.5) - ua - ub).abs() < 1e-12).all());
  CHECK(((potential_field<double>(a, 3.0, 6.0, 0.5) - 3.0 * ua).abs() < 1e-12).all());
}

TEST_CASE("gradient of a flat field is zero") {
  CHECK(mean_negative_gradient<double>(Grid<double>::Zero(13, 18), 1.0).norm() == 0.0);
}

TEST_CASE("gradient matches the per-cell reference") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid<double> field(13, 18);
  for (Eigen::Index i = 0; i < field.size(); ++i) field.data()[i] = u(rng);
  const Eigen::Vector2d g = mean_negative_gradient<double>(field, 1.0);
  CHECK((g - gradient_reference(field)).norm() < 1e-12);
  CHECK((mean_negative_gradient<double>(field, 2.5) - 2.5 * g).norm() < 1e-12);
}

TEST_CASE("obstacle left of centre pushes right") {
  Grid<bool> pts = empty_points();
  pts(6, 3) = true;
  const Eigen::Vector2d v = phi_tilde(pts);
  CHECK(v.x() > 0.0);
  CHECK(std::abs(v.y()) < 1e-9);

  Grid<bool> up = empty_points();
  up(1, 8) = true;
  up(1, 9) = true;
  CHECK(phi_tilde(up).y() > 0.0);
}

TEST_CASE("mirror-symmetric maps have no lateral component") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution b(0.2);
  for (int trial = 0; trial < 100; ++trial) {
    Grid<bool> pts = empty_points();
    for (int y = 0; y < 13; ++y)
      for (int x = 0; x < 9; ++x)
        if (b(rng)) pts(y, x) = pts(y, 17 - x) = true;
    CHECK(std::abs(phi_tilde(pts).x()) < 1e-9);
  }
}

TEST_CASE("compact clusters are pushed away from their centroid") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> row(0, 12), col(0, 17), size(0, 2);
  const Eigen::Vector2d centre(8.5, 6.0);
  int tested = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Grid<bool> pts = empty_points();
    const int r = row(rng), c = col(rng), s = size(rng);
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    int n = 0;
    for (int y = std::max(0, r - s); y <= std::min(12, r + s); ++y)
      for (int x = std::max(0, c - s); x <= std::min(17, c + s); ++x) {
        pts(y, x) = true;
        centroid += Eigen::Vector2d(x, y);
        ++n;
      }
    centroid /= n;
    if ((centre - centroid).norm() < 1e-9) continue;
    ++tested;
    CHECK(phi_tilde(pts).dot(centre - centroid) > 0.0);
  }
  CHECK(tested > 900);
}

TEST_CASE("image vector maps into the end-effector y-z plane") {
  Decoder<double> dec(Params{}, Eigen::Matrix3d::Identity());
  CHECK(dec.to_ee_space(Eigen::Vector2d::Zero()).norm() == 0.0);

  Params p;
  p.n_phi = 1;
  Decoder<double> one(p, Eigen::Matrix3d::Identity());
  const Eigen::Vector3d phi = one.to_ee_space(Eigen::Vector2d(0.3, -0.4));
  CHECK(phi.x() == 0.0);
  CHECK(phi.y() == doctest::Approx(-0.3));
  CHECK(phi.z() == doctest::Approx(0.4));

  // a mount pitched down still yields a vector without forward component
  const Eigen::Matrix3d pitch = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitY()).toRotationMatrix();
  Decoder<double> tilted(p, pitch);
  CHECK(tilted.to_ee_space(Eigen::Vector2d(0.0, 1.0)).x() == 0.0);
}

TEST_CASE("history averaging and clipping") {
  Params p;
  p.n_phi = 3;
  p.phi_max = 1.0;
  Decoder<double> dec(p, Eigen::Matrix3d::Identity());
  const Eigen::Vector2d v(0.2, 0.1);
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) out = dec.to_ee_space(v);
  CHECK((out - Eigen::Vector3d(0, -0.2, -0.1)).norm() < 1e-12);

  dec.to_ee_space(Eigen::Vector2d(0.5, 0.0));
  out = dec.to_ee_space(Eigen::Vector2d(0.5, 0.0));
  CHECK(out.y() == doctest::Approx(-(0.2 + 0.5 + 0.5) / 3));

  const Eigen::Vector3d big = dec.to_ee_space(Eigen::Vector2d(50.0, 0.0));
  CHECK(big.norm() == doctest::Approx(1.0));
  CHECK(clip_magnitude<double>(Eigen::Vector3d(0, 0.3, 0.4), 1.0).norm() == doctest::Approx(0.5));
}

TEST_CASE("raw events: empty, left half and random") {
  const Params p;
  Decoder<double> dec(p, Eigen::Matrix3d::Identity());
  CHECK(dec.decode_raw(EventImage(120, 160), 13, 18).norm() == 0.0);

  EventImage left(120, 160);
  left.polarity.leftCols(80).setConstant(1);
  dec.clear_history();
  const auto map = raw_event_activation<double>(left, 13, 18);
  CHECK(map.points.leftCols(9).all());
  CHECK_FALSE(map.points.rightCols(9).any());
  const Eigen::Vector3d phi = dec.decode_raw(left, 13, 18);
  // image left is end-effector +y, so the push is towards -y
  CHECK(phi.y() < 0.0);

  std::mt19937_64 rng(5);
  std::bernoulli_distribution b(0.5);
  const int trials = 200;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  double sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    EventImage img(120, 160);
    for (Eigen::Index i = 0; i < img.polarity.size(); ++i) img.polarity.data()[i] = b(rng) ? 1 : 0;
    const Eigen::Vector2d v = dec.image_vector(raw_event_activation<double>(img, 13, 18));
    sum += v;
    sq += v.squaredNorm();
  }
  const Eigen::Vector2d mean = sum / trials;
  const double spread = std::sqrt(sq / trials);
  CHECK(spread > 0.0);
  CHECK(mean.norm() < 3.0 * spread / std::sqrt(double(trials)));
}

TEST_CASE("decoding is always finite") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> step(-1, 19);
  Decoder<double> dec(Params{}, Eigen::Matrix3d::Identity());
  for (int t = 0; t < 20; ++t) {
    std::vector<int> fst(13 * 18);
    for (auto& f : fst) f = step(rng);
    const Eigen::Vector3d phi = dec.decode(record_with(13, 18, fst));
    CHECK(phi.allFinite());
    CHECK(phi.norm() <= Params{}.phi_max + 1e-12);
  }
}
